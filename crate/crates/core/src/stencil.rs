//! Non-negative stencils `D = sum_e gamma(e) e e^T` and their analysis.
//!
//! A [`Stencil`] stores every offset together with its opposite, both
//! carrying the same weight. Offsets with zero weight are kept so that the
//! decomposition stays inspectable, but they do not count towards the
//! radius or the cardinality, and operator assembly skips them.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{obtuse_superbase2, obtuse_superbase3};
use crate::sym::{cross, frobenius_diff, LatticeVector2, SymMat2, SymMat3, Tensor};

/// Largest `max(|p|, |q|)` explored by the A-NN direction search.
pub const ANN_SEARCH_CAP: i64 = 1_000_000;

/// Samples per axis of the coarse symbol maximization grid.
pub const SYMBOL_GRID: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilEntry {
    /// Integer offset; the third component is zero for 2D stencils.
    pub offset: [i64; 3],
    pub weight: f64,
}

impl StencilEntry {
    /// Off-center coefficient of the assembled operator, `-2 gamma(e)`.
    pub fn operator_coefficient(&self) -> f64 {
        -2.0 * self.weight
    }

    pub fn norm(&self) -> f64 {
        let o = self.offset.map(|x| x as f64);
        (o[0] * o[0] + o[1] * o[1] + o[2] * o[2]).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    dim: usize,
    entries: Vec<StencilEntry>,
}

fn neg(o: [i64; 3]) -> [i64; 3] {
    [-o[0], -o[1], -o[2]]
}

impl Stencil {
    /// Builds a symmetric stencil from one representative per `+-` pair.
    ///
    /// Panics on a negative or non-finite weight, a zero offset, a nonzero
    /// third component in 2D, or a repeated pair.
    pub fn from_half(dim: usize, half: &[([i64; 3], f64)]) -> Self {
        assert!(dim == 2 || dim == 3, "dimension must be 2 or 3");
        let mut entries = Vec::with_capacity(2 * half.len());
        for &(offset, weight) in half {
            assert!(weight.is_finite() && weight >= 0.0, "weights must be non-negative");
            assert!(offset != [0, 0, 0], "zero offset");
            assert!(dim == 3 || offset[2] == 0, "2D offsets have no z component");
            entries.push(StencilEntry { offset, weight });
            entries.push(StencilEntry { offset: neg(offset), weight });
        }
        for (i, a) in entries.iter().enumerate() {
            for b in &entries[i + 1..] {
                assert!(a.offset != b.offset, "repeated offset {:?}", a.offset);
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All offsets, each followed by its opposite.
    pub fn entries(&self) -> &[StencilEntry] {
        &self.entries
    }

    /// One entry per `+-` pair.
    pub fn half(&self) -> impl Iterator<Item = &StencilEntry> {
        self.entries.iter().step_by(2)
    }

    pub fn positive_entries(&self) -> impl Iterator<Item = &StencilEntry> {
        self.entries.iter().filter(|e| e.weight > 0.0)
    }

    /// Number of offsets with strictly positive weight.
    pub fn cardinality(&self) -> usize {
        self.positive_entries().count()
    }

    /// Diagonal coefficient of the assembled constant-tensor operator, `2 sum gamma`.
    pub fn center_coefficient(&self) -> f64 {
        2.0 * self.entries.iter().map(|e| e.weight).sum::<f64>()
    }

    /// `sum_e gamma(e) e e^T` as a 3x3 array.
    pub fn tensor(&self) -> [[f64; 3]; 3] {
        let mut m = [[0.0; 3]; 3];
        for e in &self.entries {
            let o = e.offset.map(|x| x as f64);
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += e.weight * o[i] * o[j];
                }
            }
        }
        m
    }

    /// `sum_e gamma(e) <g, e>^2`.
    pub fn quadratic_form(&self, g: [f64; 3]) -> f64 {
        self.entries
            .iter()
            .map(|e| {
                let p = g[0] * e.offset[0] as f64 + g[1] * e.offset[1] as f64 + g[2] * e.offset[2] as f64;
                e.weight * p * p
            })
            .sum()
    }

    /// Weight attached to an offset, zero when absent.
    pub fn weight_of(&self, offset: [i64; 3]) -> f64 {
        self.entries.iter().filter(|e| e.offset == offset).map(|e| e.weight).sum()
    }
}

fn perp(e: LatticeVector2) -> [f64; 2] {
    [-e[1] as f64, e[0] as f64]
}

/// Metric `det(D)^(1/2) D^-1`, of unit determinant.
pub fn metric2(d: &SymMat2) -> SymMat2 {
    d.inverse().scale(d.det().sqrt())
}

/// AD-LBR stencil of a 2x2 diffusion tensor.
///
/// With `(e_0, e_1, e_2)` an obtuse superbase for the metric `det(D)^(1/2) D^-1`,
/// the stencil is `{+-e_i}` with `gamma(+-e_i) = -<e_{i+1}^perp, D e_{i+2}^perp> / 2`.
pub fn adlbr_stencil_2d(d: &SymMat2) -> Result<Stencil> {
    d.check_spd()?;
    let sb = obtuse_superbase2(&metric2(d))?.0;
    let half: Vec<_> = (0..3)
        .map(|i| {
            let a = perp(sb[(i + 1) % 3]);
            let b = perp(sb[(i + 2) % 3]);
            let db = d.apply(b);
            let w = -0.5 * (a[0] * db[0] + a[1] * db[1]);
            ([sb[i][0], sb[i][1], 0], w.max(0.0))
        })
        .collect();
    Ok(Stencil::from_half(2, &half))
}

/// AD-LBR stencil of a 3x3 diffusion tensor (Selling's decomposition).
///
/// For a `D`-obtuse superbase `(e_0, .., e_3)` and `{i,j,k,l} = {0,1,2,3}`,
/// the offset `e_k x e_l` carries `gamma = -<e_i, D e_j> / 2`.
pub fn adlbr_stencil_3d(d: &SymMat3) -> Result<Stencil> {
    d.check_spd()?;
    let sb = obtuse_superbase3(d)?.0;
    let mut half = Vec::with_capacity(6);
    for i in 0..4 {
        for j in i + 1..4 {
            let mut rest = (0..4).filter(|&x| x != i && x != j);
            let (k, l) = (rest.next().unwrap(), rest.next().unwrap());
            let w = -0.5 * d.dot(sb[i], sb[j]);
            half.push((cross(sb[k], sb[l]), w.max(0.0)));
        }
    }
    Ok(Stencil::from_half(3, &half))
}

fn ann_admissible(p: i64, q: i64, a: f64, b: f64, c: f64) -> bool {
    // |b|/c <= p/|q| <= a/|b|, with p, |q| > 0
    let (p, q) = (p as f64, q.abs() as f64);
    b.abs() * q <= c * p && p * b.abs() <= a * q
}

/// Long direction `(p, q)` of the A-NN stencil, `None` for diagonal tensors.
///
/// Minimizes `max(|p|,|q|)` subject to `|b|/c <= |p/q| <= a/|b|` and
/// `b p q >= 0`; ties go to the smaller `|p|+|q|`, then to the larger `p`.
/// The returned `p` is positive.
pub fn ann_direction(d: &SymMat2) -> Result<Option<(i64, i64)>> {
    d.check_spd()?;
    let (a, b, c) = (d.xx, d.xy, d.yy);
    if b == 0.0 {
        return Ok(None);
    }
    let sign = if b > 0.0 { 1 } else { -1 };
    let lo = b.abs() / c;
    let hi = a / b.abs();
    for m in 1..=ANN_SEARCH_CAP {
        let mf = m as f64;
        let mut best: Option<(i64, i64)> = None;
        let mut consider = |p: i64, q: i64| {
            if p < 1 || q < 1 || p > m || q > m || !ann_admissible(p, q, a, b, c) {
                return;
            }
            let better = match best {
                None => true,
                Some((bp, bq)) => p + q < bp + bq || (p + q == bp + bq && p > bp),
            };
            if better {
                best = Some((p, q));
            }
        };
        // p = m: |q| in [m / hi, m / lo]; smallest admissible |q| minimizes |p|+|q|.
        let q0 = (mf / hi).floor() as i64;
        for q in q0.max(1)..=(q0 + 2).min(m) {
            consider(m, q);
        }
        // |q| = m: p in [m lo, m hi]
        let p0 = (mf * lo).floor() as i64;
        for p in p0.max(1)..=(p0 + 2).min(m) {
            consider(p, m);
        }
        if let Some((p, q)) = best {
            return Ok(Some((p, sign * q)));
        }
    }
    Err(Error::SearchBound { cap: ANN_SEARCH_CAP })
}

/// Axes-directed non-negative six point stencil.
pub fn ann_stencil_2d(d: &SymMat2) -> Result<Stencil> {
    let (a, b, c) = (d.xx, d.xy, d.yy);
    match ann_direction(d)? {
        None => Ok(Stencil::from_half(2, &[([1, 0, 0], 0.5 * a), ([0, 1, 0], 0.5 * c)])),
        Some((p, q)) => {
            let (pf, qf) = (p as f64, q as f64);
            let wx = 0.5 * (a - pf / qf * b);
            let wy = 0.5 * (c - qf / pf * b);
            let wd = 0.5 * b / (pf * qf);
            let mut half = vec![([1, 0, 0], wx.max(0.0)), ([0, 1, 0], wy.max(0.0))];
            half.push(([p, q, 0], wd.max(0.0)));
            Ok(Stencil::from_half(2, &half))
        }
    }
}

/// Frobenius norm of `sum_e gamma(e) e e^T - D`.
pub fn decomposition_residual<T: Tensor>(s: &Stencil, d: &T) -> f64 {
    frobenius_diff(&s.tensor(), &d.to_full3())
}

/// Largest Euclidean norm among offsets with positive weight.
pub fn stencil_radius(s: &Stencil) -> Result<f64> {
    s.positive_entries()
        .map(StencilEntry::norm)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))))
        .ok_or(Error::EmptyStencil)
}

/// Fourier symbol `sum_e 4 gamma(e) sin^2(<theta, e>/2)` of the
/// constant-coefficient periodic operator.
pub fn symbol(s: &Stencil, theta: [f64; 3]) -> f64 {
    s.entries
        .iter()
        .map(|e| {
            let phase = theta[0] * e.offset[0] as f64 + theta[1] * e.offset[1] as f64 + theta[2] * e.offset[2] as f64;
            let sn = (0.5 * phase).sin();
            4.0 * e.weight * sn * sn
        })
        .sum()
}

/// Supremum of [`symbol`] over the torus: the largest eigenvalue of the
/// constant-coefficient operator in the infinite-grid limit.
///
/// Evaluates the symbol exactly on a `SYMBOL_GRID^d` lattice of frequencies,
/// then refines the best samples by coordinate-wise golden-section search.
pub fn symbol_max(s: &Stencil) -> f64 {
    let n = SYMBOL_GRID;
    let table: Vec<f64> = (0..n)
        .map(|k| {
            let x = (PI * k as f64 / n as f64).sin();
            4.0 * x * x
        })
        .collect();
    let pairs: Vec<([i64; 3], f64)> = s.half().filter(|e| e.weight > 0.0).map(|e| (e.offset, 2.0 * e.weight)).collect();
    if pairs.is_empty() {
        return 0.0;
    }
    let ni = n as i64;
    let eval = |k: [i64; 3]| -> f64 {
        pairs
            .iter()
            .map(|(o, w)| {
                let idx = (o[0] * k[0] + o[1] * k[1] + o[2] * k[2]).rem_euclid(ni);
                w * table[idx as usize]
            })
            .sum()
    };

    // symbol(-theta) = symbol(theta): the last axis only needs [0, pi]
    let (outer, planes) = if s.dim == 2 { (n / 2 + 1, 1) } else { (n, n / 2 + 1) };
    let mut samples: Vec<(f64, [i64; 3])> = (0..outer)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, [0i64; 3]);
            for j in 0..n {
                for k in 0..planes {
                    let key = if s.dim == 2 { [j as i64, i as i64, 0] } else { [j as i64, k as i64, i as i64] };
                    let v = eval(key);
                    if v > best.0 {
                        best = (v, key);
                    }
                }
            }
            best
        })
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));

    let step = 2.0 * PI / n as f64;
    let mut best = samples[0].0;
    for &(_, k) in samples.iter().take(4) {
        let mut theta = k.map(|x| x as f64 * step);
        for _ in 0..6 {
            for axis in 0..s.dim {
                let f = |t: f64| {
                    let mut th = theta;
                    th[axis] = t;
                    symbol(s, th)
                };
                theta[axis] = golden_max(f, theta[axis] - step, theta[axis] + step);
            }
        }
        best = best.max(symbol(s, theta));
    }
    best
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
