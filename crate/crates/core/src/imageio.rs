//! Grayscale PGM images and a minimal container for scalar and tensor volumes.
//!
//! PGM rows map to the `y` axis, top row first. Samples are scaled to
//! `[0, 1]`, spacing is 1 and the boundary is Neumann.
//!
//! Volumes are stored as one ASCII header line
//! `ADLBRv1 <kind> <d> <n_1> .. <n_d> <h>` followed by little-endian `f32`
//! samples in grid order; symmetric tensors store their upper triangle
//! (`xx xy yy` or `xx xy xz yy yz zz`).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{Boundary, Grid, ScalarField, TensorData, TensorField};
use crate::sym::{SymMat2, SymMat3};

pub const VOLUME_MAGIC: &str = "ADLBRv1";

/// Longest accepted volume header line, in bytes.
const MAX_HEADER: usize = 4096;

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedHeader(msg.into())
}

/// Whitespace/comment tokenizer over a PGM header.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Option<&'a [u8]> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#'
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let t = self.token().ok_or_else(|| malformed(format!("missing {what}")))?;
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(format!("{what} {:?} is not a number", String::from_utf8_lossy(t))))
    }
}

/// Decodes a P5 (binary) or P2 (ASCII) PGM.
pub fn parse_pgm(bytes: &[u8]) -> Result<ScalarField> {
    if bytes.len() < 2 {
        return Err(malformed("file too short for a magic number"));
    }
    let magic = &bytes[..2];
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(Error::UnsupportedMagic(String::from_utf8_lossy(magic).into_owned())),
    };
    let mut h = Header { bytes, pos: 2 };
    if h.pos < bytes.len() && !bytes[h.pos].is_ascii_whitespace() && bytes[h.pos] != b'#' {
        return Err(malformed("magic number not followed by whitespace"));
    }
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(malformed(format!("empty image {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(malformed(format!("maxval {maxval} outside 1..=65535")));
    }
    let count = width.checked_mul(height).ok_or_else(|| malformed("image size overflows"))?;
    let scale = maxval as f64;

    let data: Vec<f64> = if binary {
        // exactly one whitespace byte separates the header from the raster
        if h.pos >= bytes.len() {
            return Err(Error::TruncatedPayload { expected: count, found: 0, unit: "samples" });
        }
        let payload = &bytes[h.pos + 1..];
        let width_bytes = if maxval > 255 { 2 } else { 1 };
        let expected = count.checked_mul(width_bytes).ok_or_else(|| malformed("image size overflows"))?;
        if payload.len() < expected {
            return Err(Error::TruncatedPayload { expected, found: payload.len(), unit: "bytes" });
        }
        let raw: Vec<usize> = if width_bytes == 1 {
            payload[..expected].iter().map(|&b| b as usize).collect()
        } else {
            payload[..expected].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as usize).collect()
        };
        if let Some(v) = raw.iter().find(|&&v| v > maxval) {
            return Err(Error::MalformedPayload(format!("sample {v} exceeds maxval {maxval}")));
        }
        raw.into_iter().map(|v| v as f64 / scale).collect()
    } else {
        // every ASCII sample takes at least two bytes including its separator
        let remaining = bytes.len() - h.pos;
        if count > remaining.div_ceil(2) + 1 {
            return Err(Error::TruncatedPayload { expected: count, found: remaining.div_ceil(2), unit: "samples" });
        }
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let Some(t) = h.token() else {
                return Err(Error::TruncatedPayload { expected: count, found: out.len(), unit: "samples" });
            };
            let v: usize = std::str::from_utf8(t).ok().and_then(|s| s.parse().ok()).ok_or_else(|| {
                Error::MalformedPayload(format!("sample {:?} is not a number", String::from_utf8_lossy(t)))
            })?;
            if v > maxval {
                return Err(Error::MalformedPayload(format!("sample {v} exceeds maxval {maxval}")));
            }
            out.push(v as f64 / scale);
        }
        out
    };
    let grid = Grid::new(&[width, height], 1.0, Boundary::NeumannTruncate)?;
    ScalarField::new(grid, data)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<ScalarField> {
    parse_pgm(&fs::read(path)?)
}

/// Affine map of `[lo, hi]` onto `0..=255`, clamped, rounding half away from zero.
pub fn quantize(x: f64, lo: f64, hi: f64) -> u8 {
    let t = (x - lo) / (hi - lo) * 255.0;
    if t.is_nan() {
        0
    } else {
        t.clamp(0.0, 255.0).round() as u8
    }
}

fn check_clip(clip: (f64, f64)) -> Result<()> {
    let (lo, hi) = clip;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("clip range [{lo}, {hi}] must be finite")));
    }
    if lo >= hi {
        return Err(Error::EmptyClipRange);
    }
    Ok(())
}

/// Binary P5 encoding of a 2D field with maxval 255.
pub fn encode_pgm(u: &ScalarField, clip: (f64, f64)) -> Result<Vec<u8>> {
    check_clip(clip)?;
    let g = u.grid();
    if g.dim() != 2 {
        return Err(Error::Unsupported(format!("PGM output of a {}D field", g.dim())));
    }
    let [w, h, _] = g.extents3();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(u.data().iter().map(|&x| quantize(x, clip.0, clip.1)));
    Ok(out)
}

pub fn write_pgm(u: &ScalarField, path: impl AsRef<Path>, clip: (f64, f64)) -> Result<()> {
    fs::write(path, encode_pgm(u, clip)?)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Scalar,
    Sym2,
    Sym3,
}

impl ValueKind {
    pub fn components(self) -> usize {
        match self {
            ValueKind::Scalar => 1,
            ValueKind::Sym2 => 3,
            ValueKind::Sym3 => 6,
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueKind::Scalar => "scalar",
            ValueKind::Sym2 => "sym2",
            ValueKind::Sym3 => "sym3",
        })
    }
}

impl FromStr for ValueKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(ValueKind::Scalar),
            "sym2" => Ok(ValueKind::Sym2),
            "sym3" => Ok(ValueKind::Sym3),
            other => Err(malformed(format!("unknown value kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeHeader {
    pub kind: ValueKind,
    pub extents: Vec<usize>,
    pub h: f64,
}

impl VolumeHeader {
    fn parse(line: &str) -> Result<Self> {
        let mut tokens = line.split_ascii_whitespace();
        let magic = tokens.next().ok_or_else(|| malformed("empty header"))?;
        if magic != VOLUME_MAGIC {
            return Err(Error::UnsupportedMagic(magic.to_string()));
        }
        let kind: ValueKind = tokens.next().ok_or_else(|| malformed("missing value kind"))?.parse()?;
        let mut next_num = |what: &str| -> Result<usize> {
            let t = tokens.next().ok_or_else(|| malformed(format!("missing {what}")))?;
            t.parse().map_err(|_| malformed(format!("{what} {t:?} is not a number")))
        };
        let d = next_num("dimension")?;
        if d != 2 && d != 3 {
            return Err(malformed(format!("dimension {d} is not 2 or 3")));
        }
        let extents = (0..d).map(|_| next_num("extent")).collect::<Result<Vec<_>>>()?;
        let t = tokens.next().ok_or_else(|| malformed("missing spacing"))?;
        let h: f64 = t.parse().map_err(|_| malformed(format!("spacing {t:?} is not a number")))?;
        if tokens.next().is_some() {
            return Err(malformed("trailing header fields"));
        }
        let header = Self { kind, extents, h };
        header.validate()?;
        Ok(header)
    }

    fn validate(&self) -> Result<()> {
        let d = self.extents.len();
        match (self.kind, d) {
            (ValueKind::Sym2, 3) | (ValueKind::Sym3, 2) => {
                return Err(malformed(format!("{} values on a {d}D grid", self.kind)));
            }
            _ => {}
        }
        if self.extents.contains(&0) {
            return Err(malformed(format!("empty extent in {:?}", self.extents)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(malformed(format!("spacing {} must be positive", self.h)));
        }
        Ok(())
    }

    /// Payload size in bytes, or `None` on overflow.
    pub fn payload_bytes(&self) -> Option<usize> {
        self.extents.iter().try_fold(self.kind.components() * 4, |acc, &n| acc.checked_mul(n))
    }
}

impl fmt::Display for VolumeHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{VOLUME_MAGIC} {} {}", self.kind, self.extents.len())?;
        for n in &self.extents {
            write!(f, " {n}")?;
        }
        write!(f, " {:?}", self.h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Volume {
    Scalar(ScalarField),
    Tensor(TensorField),
}

impl From<ScalarField> for Volume {
    fn from(u: ScalarField) -> Self {
        Volume::Scalar(u)
    }
}

impl From<TensorField> for Volume {
    fn from(t: TensorField) -> Self {
        Volume::Tensor(t)
    }
}

impl Volume {
    pub fn grid(&self) -> &Grid {
        match self {
            Volume::Scalar(u) => u.grid(),
            Volume::Tensor(t) => t.grid(),
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Volume::Scalar(_) => ValueKind::Scalar,
            Volume::Tensor(t) => match t.data() {
                TensorData::D2(_) => ValueKind::Sym2,
                TensorData::D3(_) => ValueKind::Sym3,
            },
        }
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        match self {
            Volume::Scalar(u) => Ok(u),
            other => Err(Error::GridMismatch(format!("expected a scalar volume, found {}", other.kind()))),
        }
    }

    pub fn into_tensor(self) -> Result<TensorField> {
        match self {
            Volume::Tensor(t) => Ok(t),
            other => Err(Error::GridMismatch(format!("expected a tensor volume, found {}", other.kind()))),
        }
    }
}

pub fn encode_volume(v: &Volume) -> Vec<u8> {
    let g = v.grid();
    let header = VolumeHeader { kind: v.kind(), extents: g.extents().to_vec(), h: g.spacing() };
    let mut out = format!("{header}\n").into_bytes();
    let mut push = |x: f64| out.extend_from_slice(&(x as f32).to_le_bytes());
    match v {
        Volume::Scalar(u) => u.data().iter().for_each(|&x| push(x)),
        Volume::Tensor(t) => match t.data() {
            TensorData::D2(m) => m.iter().for_each(|m| [m.xx, m.xy, m.yy].into_iter().for_each(&mut push)),
            TensorData::D3(m) => {
                m.iter().for_each(|m| [m.xx, m.xy, m.xz, m.yy, m.yz, m.zz].into_iter().for_each(&mut push))
            }
        },
    }
    out
}

pub fn parse_volume(bytes: &[u8]) -> Result<Volume> {
    let end = bytes
        .iter()
        .take(MAX_HEADER)
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed("no header line terminator"))?;
    let line = std::str::from_utf8(&bytes[..end]).map_err(|_| malformed("header is not ASCII"))?;
    let header = VolumeHeader::parse(line)?;
    let expected = header.payload_bytes().ok_or_else(|| malformed("volume size overflows"))?;
    let payload = &bytes[end + 1..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload { expected, found: payload.len(), unit: "bytes" });
    }
    if payload.len() > expected {
        return Err(Error::MalformedPayload(format!("{} trailing bytes", payload.len() - expected)));
    }
    let grid = Grid::new(&header.extents, header.h, Boundary::NeumannTruncate)?;
    let values: Vec<f64> =
        payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    Ok(match header.kind {
        ValueKind::Scalar => Volume::Scalar(ScalarField::new(grid, values)?),
        ValueKind::Sym2 => Volume::Tensor(TensorField::new(
            grid,
            TensorData::D2(values.chunks_exact(3).map(|c| SymMat2::new(c[0], c[1], c[2])).collect()),
        )?),
        ValueKind::Sym3 => Volume::Tensor(TensorField::new(
            grid,
            TensorData::D3(values.chunks_exact(6).map(|c| SymMat3::new(c[0], c[1], c[2], c[3], c[4], c[5])).collect()),
        )?),
    })
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Volume> {
    parse_volume(&fs::read(path)?)
}

pub fn write_volume(v: &Volume, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_volume(v))?;
    Ok(())
}
