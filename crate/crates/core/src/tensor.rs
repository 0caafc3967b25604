//! Structure tensors and the coherence- / edge-enhancing diffusion tensors
//! built from them.

use rayon::prelude::*;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, TensorData, TensorField};
use crate::operator::{assemble, explicit_step, Scheme, SparseOperator};
use crate::sym::{Eigen, SymMat2, SymMat3};

/// Squared eigenvalue gaps or magnitudes below this count as zero.
pub const DEGENERATE: f64 = 1e-30;

/// Smallest eigenvalue handed out by [`eed_tensor`]. Caps the anisotropy
/// ratio at `1e3` when `C / mu^2` becomes tiny.
pub const EED_FLOOR: f64 = 1e-6;

/// Tolerance, relative to the trace, for negative structure-tensor eigenvalues.
const PSD_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureParams {
    /// Pre-smoothing standard deviation, in cells.
    pub sigma: f64,
    /// Integration standard deviation, in cells.
    pub rho: f64,
    /// Contrast parameter `C`.
    pub contrast: f64,
    /// Diffusivity floor.
    pub alpha: f64,
}

impl Default for StructureParams {
    fn default() -> Self {
        Self { sigma: 0.5, rho: 4.0, contrast: 1e-5, alpha: 1e-2 }
    }
}

impl StructureParams {
    pub fn new(sigma: f64, rho: f64, contrast: f64, alpha: f64) -> Result<Self> {
        let p = Self { sigma, rho, contrast, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be a non-negative number");
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad("rho must be a non-negative number");
        }
        if !(self.contrast > 0.0 && self.contrast.is_finite()) {
            return bad("contrast C must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        Ok(())
    }
}

pub fn eigen_sym2(m: &SymMat2) -> Eigen<2> {
    m.eigen()
}

pub fn eigen_sym3(m: &SymMat3) -> Eigen<3> {
    m.eigen()
}

/// Sampled Gaussian of standard deviation `s`, truncated at `ceil(3 s)` and
/// normalized to unit sum. Index `r` is the center.
pub fn gaussian_kernel(s: f64) -> Vec<f64> {
    if s <= 0.0 {
        return vec![1.0];
    }
    let r = (3.0 * s).ceil() as i64;
    let w: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * s * s)).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Half-sample reflection of `i` into `[0, n)`.
fn reflect(i: i64, n: usize) -> usize {
    let n = n as i64;
    let m = i.rem_euclid(2 * n);
    (if m >= n { 2 * n - 1 - m } else { m }) as usize
}

fn convolve_axis(grid: &Grid, data: &[f64], axis: usize, kernel: &[f64]) -> Vec<f64> {
    let ext = grid.extents3();
    let r = kernel.len() / 2;
    let stride: usize = ext[..axis].iter().product();
    let n = ext[axis];
    let lines = data.len() / n;
    // line k starts at (k / stride) * stride * n + k % stride
    let start = |k: usize| (k / stride) * stride * n + k % stride;
    let filtered: Vec<Vec<f64>> = (0..lines)
        .into_par_iter()
        .with_min_len(64)
        .map_init(
            || vec![0.0; n + 2 * r],
            |padded, k| {
                let s0 = start(k);
                for (p, slot) in padded.iter_mut().enumerate() {
                    *slot = data[s0 + reflect(p as i64 - r as i64, n) * stride];
                }
                (0..n).map(|c| kernel.iter().zip(&padded[c..]).map(|(w, x)| w * x).sum()).collect()
            },
        )
        .collect();
    let mut out = vec![0.0; data.len()];
    for (k, line) in filtered.into_iter().enumerate() {
        let s0 = start(k);
        for (c, v) in line.into_iter().enumerate() {
            out[s0 + c * stride] = v;
        }
    }
    out
}

fn blur_raw(grid: &Grid, data: &[f64], s: f64) -> Vec<f64> {
    if s <= 0.0 {
        return data.to_vec();
    }
    let k = gaussian_kernel(s);
    (0..grid.dim()).fold(data.to_vec(), |acc, axis| convolve_axis(grid, &acc, axis, &k))
}

/// Separable Gaussian smoothing with standard deviation `s` cells and a
/// reflecting boundary; `s = 0` is the identity.
pub fn gaussian_blur(u: &ScalarField, s: f64) -> Result<ScalarField> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("blur scale {s} must be non-negative")));
    }
    u.with_data(blur_raw(u.grid(), u.data(), s))
}

/// Central differences `(u[i+1] - u[i-1]) / 2h` with reflected ghosts.
pub fn gradient(u: &ScalarField) -> Vec<[f64; 3]> {
    let g = u.grid();
    let ext = g.extents3();
    let inv = 0.5 / g.spacing();
    let x = u.data();
    (0..g.len())
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let c = g.coords(i);
            let mut out = [0.0; 3];
            let mut stride = 1;
            for a in 0..g.dim() {
                let at = |k: i64| x[i - c[a] * stride + reflect(k, ext[a]) * stride];
                out[a] = (at(c[a] as i64 + 1) - at(c[a] as i64 - 1)) * inv;
                stride *= ext[a];
            }
            out
        })
        .collect()
}

/// `J_rho = K_rho * (grad u_sigma grad u_sigma^T)`.
pub fn structure_tensor(u: &ScalarField, p: &StructureParams) -> Result<TensorField> {
    p.validate()?;
    let g = *u.grid();
    let us = gaussian_blur(u, p.sigma)?;
    let grad = gradient(&us);
    let d = g.dim();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let comps: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(a, b)| {
            let raw: Vec<f64> = grad.iter().map(|v| v[a] * v[b]).collect();
            blur_raw(&g, &raw, p.rho)
        })
        .collect();
    let data = if d == 2 {
        TensorData::D2((0..g.len()).map(|i| SymMat2::new(comps[0][i], comps[1][i], comps[2][i])).collect())
    } else {
        TensorData::D3(
            (0..g.len())
                .map(|i| SymMat3::new(comps[0][i], comps[1][i], comps[2][i], comps[3][i], comps[4][i], comps[5][i]))
                .collect(),
        )
    };
    TensorField::new(g, data)
}

fn check_psd(values: &[f64], trace: f64) -> Result<()> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() || min < -PSD_RTOL * trace.abs() - f64::MIN_POSITIVE {
        return Err(Error::NotSpd(format!("structure tensor eigenvalues {values:?} are not non-negative")));
    }
    Ok(())
}

/// `alpha + (1 - alpha) exp(-C / gap^2)`, with the `gap -> 0` limit `alpha`.
fn coherence(gap: f64, p: &StructureParams) -> f64 {
    let g2 = gap * gap;
    if g2 < DEGENERATE {
        p.alpha
    } else {
        p.alpha + (1.0 - p.alpha) * (-p.contrast / g2).exp()
    }
}

/// `1 - exp(-C / mu^2)`, with the `mu -> 0` limit 1.
fn edge_stop(mu: f64, p: &StructureParams) -> f64 {
    let m2 = mu * mu;
    if m2 < DEGENERATE {
        1.0
    } else {
        (-(-p.contrast / m2).exp_m1()).max(EED_FLOOR)
    }
}

fn spectral2(m: &SymMat2, f: impl Fn([f64; 2]) -> [f64; 2]) -> Result<SymMat2> {
    let e = m.eigen();
    check_psd(&e.values, m.trace())?;
    let mu = e.values.map(|x| x.max(0.0));
    Ok(SymMat2::from_eigen(f(mu), e.vectors))
}

fn spectral3(m: &SymMat3, f: impl Fn([f64; 3]) -> [f64; 3]) -> Result<SymMat3> {
    let e = m.eigen();
    check_psd(&e.values, m.trace())?;
    let mu = e.values.map(|x| x.max(0.0));
    Ok(SymMat3::from_eigen(f(mu), e.vectors))
}

fn map_field(
    j: &TensorField,
    f2: impl Fn(&SymMat2) -> Result<SymMat2> + Sync + Send,
    f3: impl Fn(&SymMat3) -> Result<SymMat3> + Sync + Send,
) -> Result<TensorField> {
    let data = match j.data() {
        TensorData::D2(v) => TensorData::D2(v.par_iter().map(f2).collect::<Result<_>>()?),
        TensorData::D3(v) => TensorData::D3(v.par_iter().map(f3).collect::<Result<_>>()?),
    };
    TensorField::new(*j.grid(), data)
}

/// Coherence-enhancing diffusion tensor of a single structure tensor.
///
/// Eigenvalues `mu_1 >= mu_2 (>= mu_3)` of `J` map to `alpha` along `v_1` and
/// to `alpha + (1 - alpha) exp(-C / (mu_1 - mu_k)^2)` along `v_k`.
pub fn ced2(j: &SymMat2, p: &StructureParams) -> Result<SymMat2> {
    spectral2(j, |mu| [p.alpha, coherence(mu[0] - mu[1], p)])
}

pub fn ced3(j: &SymMat3, p: &StructureParams) -> Result<SymMat3> {
    spectral3(j, |mu| [p.alpha, coherence(mu[0] - mu[1], p), coherence(mu[0] - mu[2], p)])
}

/// Edge-enhancing diffusion tensor: `1 - exp(-C / mu_k^2)` along every
/// eigenvector but the last, which gets 1.
pub fn eed2(j: &SymMat2, p: &StructureParams) -> Result<SymMat2> {
    spectral2(j, |mu| [edge_stop(mu[0], p), 1.0])
}

pub fn eed3(j: &SymMat3, p: &StructureParams) -> Result<SymMat3> {
    spectral3(j, |mu| [edge_stop(mu[0], p), edge_stop(mu[1], p), 1.0])
}

pub fn ced_tensor(j: &TensorField, p: &StructureParams) -> Result<TensorField> {
    p.validate()?;
    map_field(j, |m| ced2(m, p), |m| ced3(m, p))
}

pub fn eed_tensor(j: &TensorField, p: &StructureParams) -> Result<TensorField> {
    p.validate()?;
    map_field(j, |m| eed2(m, p), |m| eed3(m, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionKind {
    /// Coherence-enhancing.
    Ced,
    /// Edge-enhancing.
    Eed,
}

impl fmt::Display for DiffusionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiffusionKind::Ced => "ced",
            DiffusionKind::Eed => "eed",
        })
    }
}

impl FromStr for DiffusionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ced" => Ok(DiffusionKind::Ced),
            "eed" => Ok(DiffusionKind::Eed),
            other => Err(Error::InvalidParameter(format!("unknown diffusion kind {other:?}"))),
        }
    }
}

/// Diffusion tensor field of `u` for the chosen filter, on `u`'s grid.
pub fn diffusion_tensor(u: &ScalarField, p: &StructureParams, kind: DiffusionKind) -> Result<TensorField> {
    let j = structure_tensor(u, p)?;
    match kind {
        DiffusionKind::Ced => ced_tensor(&j, p),
        DiffusionKind::Eed => eed_tensor(&j, p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearOptions {
    pub params: StructureParams,
    pub kind: DiffusionKind,
    pub scheme: Scheme,
    pub dt: f64,
    pub steps: usize,
    /// The operator is rebuilt from the current image every this many steps.
    pub rebuild_every: usize,
}

impl NonlinearOptions {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {} must be positive", self.dt)));
        }
        if self.rebuild_every == 0 {
            return Err(Error::InvalidParameter("rebuild interval must be at least 1".into()));
        }
        Ok(())
    }
}

/// Growth of the sup norm that aborts [`run_nonlinear`].
pub const GROWTH_LIMIT: f64 = 10.0;

/// Explicit nonlinear diffusion `u <- u - dt A(u) u`. `on_rebuild` sees the
/// step index and every freshly assembled operator.
pub fn run_nonlinear(
    u: &ScalarField,
    opts: &NonlinearOptions,
    mut on_rebuild: impl FnMut(usize, &SparseOperator),
) -> Result<ScalarField> {
    opts.validate()?;
    let reference = u.max_abs().max(f64::MIN_POSITIVE);
    let mut current = u.clone();
    let mut op: Option<SparseOperator> = None;
    for step in 0..opts.steps {
        if step % opts.rebuild_every == 0 || op.is_none() {
            let t = diffusion_tensor(&current, &opts.params, opts.kind)?;
            let a = assemble(&t, opts.scheme)?;
            on_rebuild(step, &a);
            op = Some(a);
        }
        current = explicit_step(&current, op.as_ref().expect("assembled above"), opts.dt)?;
        let growth = current.max_abs() / reference;
        if !(growth <= GROWTH_LIMIT) {
            return Err(Error::Unstable { step: step + 1, growth });
        }
    }
    Ok(current)
}
