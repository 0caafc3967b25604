//! Analytic restoration benchmark: a straight stripe transported by the
//! diffeomorphism `f(x, y) = (x, y + a cos 2 pi x)`, together with the
//! transported diffusion tensor and the closed-form smoothed image.

use std::f64::consts::TAU;
use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::field::{Boundary, Grid, ScalarField, TensorField};
use crate::operator::{assemble, cg_solve_with, CgOptions, Scheme};
use crate::sym::SymMat2;

pub const CG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticCase {
    pub kappa: f64,
    pub alpha_diffeo: f64,
    pub lambda: f64,
    pub n: usize,
}

impl SyntheticCase {
    pub fn new(kappa: f64, n: usize) -> Result<Self> {
        let c = Self { kappa, alpha_diffeo: 1.0 / 3.0, lambda: 1e-3, n };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParameter(format!("kappa = {} must be >= 1", self.kappa)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda = {} must be positive", self.lambda)));
        }
        if !self.alpha_diffeo.is_finite() {
            return Err(Error::InvalidParameter("diffeomorphism amplitude must be finite".into()));
        }
        if self.n < 8 {
            return Err(Error::InvalidParameter(format!("n = {} must be at least 8", self.n)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::square(self.n, 1.0 / self.n as f64, Boundary::NeumannTruncate).expect("validated case")
    }

    /// Decay length of the smoothed step, `sqrt(lambda) / kappa`.
    pub fn decay_length(&self) -> f64 {
        self.lambda.sqrt() / self.kappa
    }

    /// Transported vertical coordinate `y + a cos(2 pi x)`.
    fn warp(&self, p: [f64; 3]) -> f64 {
        p[1] + self.alpha_diffeo * (TAU * p[0]).cos()
    }

    pub fn tensor_at(&self, x: f64) -> SymMat2 {
        let s = TAU * self.alpha_diffeo * (TAU * x).sin();
        SymMat2::new(1.0, s, s * s + self.kappa.powi(-2))
    }

    /// Whole-line solution of `-lambda kappa^-2 u'' + u = 1_{y < 1/2}`.
    pub fn profile(&self, y: f64) -> f64 {
        let l = self.decay_length();
        let t = y - 0.5;
        if t <= 0.0 {
            1.0 - 0.5 * (t / l).exp()
        } else {
            0.5 * (-t / l).exp()
        }
    }
}

pub fn make_inputs(c: &SyntheticCase) -> Result<(ScalarField, TensorField)> {
    c.validate()?;
    let g = c.grid();
    let v = ScalarField::from_fn(g, |p| if c.warp(p) < 0.5 { 1.0 } else { 0.0 });
    let t = TensorField::from_fn2(g, |p| c.tensor_at(p[0]))?;
    Ok((v, t))
}

pub fn reference_solution(c: &SyntheticCase) -> Result<ScalarField> {
    c.validate()?;
    Ok(ScalarField::from_fn(c.grid(), |p| c.profile(c.warp(p))))
}

/// Relative `L2` error and relative discrete `H1` seminorm error, the latter
/// from forward differences between cells that are both inside the grid.
pub fn error_norms(u_num: &ScalarField, u_ref: &ScalarField) -> Result<(f64, f64)> {
    let g = u_ref.grid();
    if !g.same_shape(u_num.grid()) {
        return Err(Error::GridMismatch("error norms of fields on different grids".into()));
    }
    let (a, b) = (u_num.data(), u_ref.data());
    let l2_num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let l2_den: f64 = b.iter().map(|y| y * y).sum();
    let (mut h1_num, mut h1_den) = (0.0, 0.0);
    let truncated = g.with_boundary(Boundary::NeumannTruncate);
    for i in 0..g.len() {
        for axis in 0..g.dim() {
            let mut off = [0i64; 3];
            off[axis] = 1;
            if let Some(j) = truncated.neighbor(i, off) {
                let e = (a[j] - b[j]) - (a[i] - b[i]);
                let r = b[j] - b[i];
                h1_num += e * e;
                h1_den += r * r;
            }
        }
    }
    let ratio = |n: f64, d: f64| {
        if d > 0.0 {
            (n / d).sqrt()
        } else if n > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    Ok((ratio(l2_num, l2_den), ratio(h1_num, h1_den)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub scheme: Scheme,
    pub kappa: f64,
    pub n: usize,
    pub l2_rel: f64,
    pub h1_rel: f64,
    pub cg_iterations: usize,
    pub wall_ms: f64,
}

impl BenchResult {
    pub const CSV_HEADER: &'static str = "scheme,kappa,n,l2_rel,h1_rel,cg_iterations,wall_ms";
}

impl fmt::Display for BenchResult {
    /// One CSV row matching [`BenchResult::CSV_HEADER`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{:.6e},{:.6e},{},{:.1}",
            self.scheme, self.kappa, self.n, self.l2_rel, self.h1_rel, self.cg_iterations, self.wall_ms
        )
    }
}

/// Solves `(I + lambda A) u = v` for the chosen scheme and compares with the
/// closed-form solution.
pub fn run_benchmark(c: &SyntheticCase, scheme: Scheme) -> Result<BenchResult> {
    let start = Instant::now();
    let (v, t) = make_inputs(c)?;
    let a = assemble(&t, scheme)?;
    let opts = CgOptions { tol: CG_TOL, ..CgOptions::default() };
    let report = cg_solve_with(&a, c.lambda, &v, &opts)?;
    let (l2_rel, h1_rel) = error_norms(&report.solution, &reference_solution(c)?)?;
    Ok(BenchResult {
        scheme,
        kappa: c.kappa,
        n: c.n,
        l2_rel,
        h1_rel,
        cg_iterations: report.iterations,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Default seed of the phantom noise.
pub const PHANTOM_SEED: u64 = 42;

/// Radial phantom `cos(2 (r/R)^3)` with `r = |x|`, `R = 1/2`, sampled at the
/// cell centers of `[0,1]^3` and perturbed by Gaussian noise of standard
/// deviation `noise_sd`. The grid has spacing 1, i.e. it is in voxel units.
pub fn phantom(n: usize, noise_sd: f64, seed: u64) -> Result<ScalarField> {
    if n == 0 {
        return Err(Error::InvalidParameter("phantom resolution must be positive".into()));
    }
    let bad_sd = || Error::InvalidParameter(format!("noise standard deviation {noise_sd} must be >= 0"));
    if !(noise_sd >= 0.0) {
        return Err(bad_sd());
    }
    let noise = Normal::new(0.0, noise_sd).map_err(|_| bad_sd())?;
    let grid = Grid::cube(n, 1.0, Boundary::NeumannTruncate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / n as f64;
    let data = (0..grid.len())
        .map(|i| {
            let r = grid.center(i).iter().map(|c| (c * scale).powi(2)).sum::<f64>().sqrt();
            let clean = (2.0 * (r / 0.5).powi(3)).cos();
            if noise_sd > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect();
    ScalarField::new(grid, data)
}
