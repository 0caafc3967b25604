//! Assembly and use of discrete `-div(D grad u)` operators on cell grids.
//!
//! Every operator is the symmetric matrix of a quadratic energy, scaled so
//! that constant-tensor entries carry the usual `h^-2` factor. For the
//! stencil schemes the pair `(z, z + h e)` receives `gamma_z(e) h^-2` on
//! both diagonals and `-gamma_z(e) h^-2` on both off-diagonals.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::symmetric_eigenvalues;
use crate::error::{Error, Result};
use crate::field::{Boundary, Grid, ScalarField, TensorData, TensorField};
use crate::stencil::{adlbr_stencil_2d, adlbr_stencil_3d, ann_stencil_2d, Stencil};
use crate::sym::SymMat2;

/// Largest grid accepted by [`eigen_smallest`].
pub const DENSE_CELL_CAP: usize = 4096;
pub const POWER_ITERATION_CAP: usize = 100_000;
pub const POWER_ITERATION_TOL: f64 = 1e-6;
const POWER_SEED: u64 = 0x5eed_ad1b;
/// Below this many rows a matrix-vector product runs on one thread.
const PARALLEL_ROWS: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    AdLbr,
    Ann,
    Fd,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::AdLbr, Scheme::Ann, Scheme::Fd];

    /// Whether off-diagonal entries are guaranteed non-positive.
    pub fn is_nonnegative(self) -> bool {
        !matches!(self, Scheme::Fd)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::AdLbr => "adlbr",
            Scheme::Ann => "ann",
            Scheme::Fd => "fd",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "adlbr" => Ok(Scheme::AdLbr),
            "ann" => Ok(Scheme::Ann),
            "fd" => Ok(Scheme::Fd),
            other => Err(Error::InvalidParameter(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Symmetric sparse matrix in compressed row form, columns sorted per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    grid: Grid,
    scheme: Scheme,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Sums duplicate `(row, col)` triplets in insertion order.
    fn from_triplets(grid: Grid, scheme: Scheme, t: impl IntoIterator<Item = (usize, usize, f64)> + Clone) -> Self {
        let n = grid.len();
        // bucket by row, keeping insertion order, then sort each short row
        let mut start = vec![0usize; n + 1];
        let mut total = 0;
        for (i, _, _) in t.clone() {
            start[i + 1] += 1;
            total += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut bucket = vec![(0usize, 0.0f64); total];
        for (i, j, v) in t {
            bucket[fill[i]] = (j, v);
            fill[i] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(bucket.len());
        let mut vals: Vec<f64> = Vec::with_capacity(bucket.len());
        for i in 0..n {
            let row = &mut bucket[start[i]..start[i + 1]];
            row.sort_by_key(|&(j, _)| j);
            let first = cols.len();
            for &(j, v) in row.iter() {
                if cols.len() > first && cols.last() == Some(&j) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr[i + 1] = cols.len();
        }
        Self { grid, scheme, row_ptr, cols, vals }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn size(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.get(i, i)).collect()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.diagonal().into_iter().fold(0.0, f64::max)
    }

    /// `y = A x`.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.size());
        assert_eq!(y.len(), self.size());
        let row = |(i, yi): (usize, &mut f64)| *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        if y.len() < PARALLEL_ROWS {
            y.iter_mut().enumerate().for_each(row);
        } else {
            y.par_iter_mut().enumerate().with_min_len(4096).for_each(row);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_field(&self, u: &ScalarField) -> Result<ScalarField> {
        self.check_field(u)?;
        ScalarField::new(*u.grid(), self.apply(u.data()))
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.size();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[i * n + j] = v;
            }
        }
        m
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size()).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// MatrixMarket coordinate format, lower triangle, 1-based indices.
    pub fn write_matrix_market(&self, mut w: impl Write) -> Result<()> {
        let lower: usize = (0..self.size()).map(|i| self.row(i).filter(|&(j, _)| j <= i).count()).sum();
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(
            w,
            "% scheme={} extents={:?} h={} boundary={}",
            self.scheme,
            self.grid.extents(),
            self.grid.spacing(),
            self.grid.boundary()
        )?;
        writeln!(w, "{} {} {}", self.size(), self.size(), lower)?;
        for i in 0..self.size() {
            for (j, v) in self.row(i).filter(|&(j, _)| j <= i) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    fn check_field(&self, u: &ScalarField) -> Result<()> {
        if u.grid().len() != self.size() || !u.grid().same_shape(&self.grid) {
            return Err(Error::GridMismatch(format!(
                "field on {:?} vs operator on {:?}",
                u.grid().extents(),
                self.grid.extents()
            )));
        }
        Ok(())
    }
}

/// Per-cell stencils of a stencil scheme, computed in parallel.
pub fn cell_stencils(t: &TensorField, scheme: Scheme) -> Result<Vec<Stencil>> {
    match (t.data(), scheme) {
        (TensorData::D2(v), Scheme::AdLbr) => v.par_iter().map(adlbr_stencil_2d).collect(),
        (TensorData::D2(v), Scheme::Ann) => v.par_iter().map(ann_stencil_2d).collect(),
        (TensorData::D3(v), Scheme::AdLbr) => v.par_iter().map(adlbr_stencil_3d).collect(),
        (TensorData::D3(_), Scheme::Ann) => Err(Error::Unsupported("the A-NN scheme is two-dimensional".into())),
        (_, Scheme::Fd) => Err(Error::Unsupported("finite differences have no cell stencil".into())),
    }
}

/// Assembles the operator of `scheme` for the tensor field.
pub fn assemble(t: &TensorField, scheme: Scheme) -> Result<SparseOperator> {
    match scheme {
        Scheme::Fd => assemble_fd(t),
        _ => assemble_stencil(t, scheme),
    }
}

fn assemble_stencil(t: &TensorField, scheme: Scheme) -> Result<SparseOperator> {
    let grid = *t.grid();
    let stencils = cell_stencils(t, scheme)?;
    let scale = grid.spacing().powi(-2);
    let n = grid.len();

    let mut diag = vec![0.0; n];
    let mut links: Vec<(usize, usize, f64)> = Vec::with_capacity(n * if grid.dim() == 2 { 3 } else { 6 });
    for (z, s) in stencils.iter().enumerate() {
        for e in s.positive_entries() {
            let Some(zp) = grid.neighbor(z, e.offset) else { continue };
            if zp == z {
                continue;
            }
            let c = e.weight * scale;
            diag[z] += c;
            diag[zp] += c;
            links.push((z.min(zp), z.max(zp), c));
        }
    }
    let triplets = diag
        .iter()
        .enumerate()
        .map(|(i, &d)| (i, i, d))
        .chain(links.into_iter().flat_map(|(i, j, c)| [(i, j, -c), (j, i, -c)]));
    Ok(SparseOperator::from_triplets(grid, scheme, triplets))
}

/// Tensor of cell `(x, y)`, with out-of-range indices mirrored back into the
/// grid (or wrapped when periodic). A reflection across one axis flips the
/// sign of the off-diagonal entry.
fn ghost_tensor(grid: &Grid, v: &[SymMat2], x: i64, y: i64) -> SymMat2 {
    let [nx, ny, _] = grid.extents3().map(|n| n as i64);
    match grid.boundary() {
        Boundary::Periodic => v[grid.index([x.rem_euclid(nx) as usize, y.rem_euclid(ny) as usize, 0])],
        Boundary::NeumannTruncate => {
            let mirror = |c: i64, n: i64| -> (i64, bool) {
                if c < 0 {
                    (-c - 1, true)
                } else if c >= n {
                    (2 * n - c - 1, true)
                } else {
                    (c, false)
                }
            };
            let (mx, fx) = mirror(x, nx);
            let (my, fy) = mirror(y, ny);
            let d = v[grid.index([mx as usize, my as usize, 0])];
            if fx != fy {
                SymMat2::new(d.xx, -d.xy, d.yy)
            } else {
                d
            }
        }
    }
}

/// Centered finite differences on a 9-point stencil, with the tensor at cell
/// corners taken as the mean of the four adjacent cells.
///
/// The operator is the matrix of
/// `sum_edges D11 (dx u)^2 + sum_edges D22 (dy u)^2 + sum_corners 2 D12 X Y`
/// where `X`, `Y` are the corner-averaged differences; on a periodic grid
/// this is exactly the classical centered divergence form. With Neumann
/// boundaries, differences across the boundary vanish (mirror ghosts), so
/// edges and corners on the boundary drop out.
fn assemble_fd(t: &TensorField) -> Result<SparseOperator> {
    let grid = *t.grid();
    let TensorData::D2(v) = t.data() else {
        return Err(Error::Unsupported("finite differences are implemented in 2D only".into()));
    };
    for d in v {
        d.check_spd()?;
    }
    let [nx, ny, _] = grid.extents3();
    let periodic = grid.boundary() == Boundary::Periodic;
    let scale = grid.spacing().powi(-2);
    let corner = |cx: i64, cy: i64| -> SymMat2 {
        // corner between cells (cx, cy) and (cx + 1, cy + 1)
        let s = [(0, 0), (1, 0), (0, 1), (1, 1)]
            .iter()
            .map(|&(a, b)| ghost_tensor(&grid, v, cx + a, cy + b))
            .fold(SymMat2::ZERO, |acc, d| SymMat2::new(acc.xx + d.xx, acc.xy + d.xy, acc.yy + d.yy));
        s.scale(0.25)
    };
    let cell = |x: i64, y: i64| grid.index([x.rem_euclid(nx as i64) as usize, y.rem_euclid(ny as i64) as usize, 0]);

    let mut t3: Vec<(usize, usize, f64)> = Vec::with_capacity(grid.len() * 28);
    let mut pair = |a: usize, b: usize, w: f64| {
        // w (u_b - u_a)^2
        t3.push((a, a, w));
        t3.push((b, b, w));
        t3.push((a, b, -w));
        t3.push((b, a, -w));
    };
    let (ex, ey) = if periodic { (nx, ny) } else { (nx - 1, ny - 1) };
    // x-edges between (i, j) and (i + 1, j)
    for j in 0..ny as i64 {
        for i in 0..ex as i64 {
            let w = 0.5 * (corner(i, j).xx + corner(i, j - 1).xx) * scale;
            pair(cell(i, j), cell(i + 1, j), w);
        }
    }
    for j in 0..ey as i64 {
        for i in 0..nx as i64 {
            let w = 0.5 * (corner(i, j).yy + corner(i - 1, j).yy) * scale;
            pair(cell(i, j), cell(i, j + 1), w);
        }
    }
    // corners: 2 D12 X Y with X = xi.u, Y = eta.u over cells 00, 10, 01, 11
    const XI: [f64; 4] = [-0.5, 0.5, -0.5, 0.5];
    const ETA: [f64; 4] = [-0.5, -0.5, 0.5, 0.5];
    for j in 0..ey as i64 {
        for i in 0..ex as i64 {
            let b = corner(i, j).xy * scale;
            if b == 0.0 {
                continue;
            }
            let ids = [cell(i, j), cell(i + 1, j), cell(i, j + 1), cell(i + 1, j + 1)];
            for k in 0..4 {
                for l in 0..4 {
                    let w = b * (XI[k] * ETA[l] + ETA[k] * XI[l]);
                    if w != 0.0 {
                        t3.push((ids[k], ids[l], w));
                    }
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(grid, Scheme::Fd, t3))
}

/// `E_h(u) = h^(d-2) sum_z sum_e gamma_z(e) |u(z + h e) - u(z)|^2` for the
/// AD-LBR stencils of `t`.
pub fn energy(u: &ScalarField, t: &TensorField) -> Result<f64> {
    stencil_energy(u, t, Scheme::AdLbr)
}

/// [`energy`] for any stencil scheme.
pub fn stencil_energy(u: &ScalarField, t: &TensorField, scheme: Scheme) -> Result<f64> {
    let grid = *t.grid();
    if !u.grid().same_shape(&grid) {
        return Err(Error::GridMismatch(format!(
            "field on {:?} vs tensors on {:?}",
            u.grid().extents(),
            grid.extents()
        )));
    }
    let stencils = cell_stencils(t, scheme)?;
    let x = u.data();
    let total: f64 = stencils
        .par_iter()
        .enumerate()
        .map(|(z, s)| {
            s.positive_entries()
                .filter_map(|e| grid.neighbor(z, e.offset).map(|zp| e.weight * (x[zp] - x[z]).powi(2)))
                .sum::<f64>()
        })
        .sum();
    Ok(grid.spacing().powi(grid.dim() as i32 - 2) * total)
}

/// One explicit Euler step `u - dt A u`.
pub fn explicit_step(u: &ScalarField, a: &SparseOperator, dt: f64) -> Result<ScalarField> {
    let au = a.apply_field(u)?;
    let data = u.data().iter().zip(au.data()).map(|(x, y)| x - dt * y).collect();
    ScalarField::new(*u.grid(), data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    /// Defaults to ten times the number of unknowns.
    pub max_iterations: Option<usize>,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: None, jacobi: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub solution: ScalarField,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `(I + lambda A) u = v` to `||r|| <= tol ||v||`.
pub fn cg_solve(a: &SparseOperator, lambda: f64, v: &ScalarField, tol: f64) -> Result<ScalarField> {
    cg_solve_with(a, lambda, v, &CgOptions { tol, ..CgOptions::default() }).map(|r| r.solution)
}

pub fn cg_solve_with(a: &SparseOperator, lambda: f64, v: &ScalarField, opts: &CgOptions) -> Result<CgReport> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} must be non-negative")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {} must be positive", opts.tol)));
    }
    a.check_field(v)?;
    let n = a.size();
    let b = v.data();
    let bnorm = dot(b, b).sqrt();
    let done = |x: Vec<f64>, iterations, res: f64| {
        Ok(CgReport { solution: ScalarField::new(*v.grid(), x)?, iterations, relative_residual: res })
    };
    if bnorm == 0.0 {
        return done(vec![0.0; n], 0, 0.0);
    }
    let inv_diag: Vec<f64> =
        if opts.jacobi { a.diagonal().iter().map(|d| 1.0 / (1.0 + lambda * d)).collect() } else { vec![1.0; n] };
    let op = |x: &[f64], y: &mut [f64]| {
        a.apply_into(x, y);
        y.iter_mut().zip(x).for_each(|(yi, xi)| *yi = xi + lambda * *yi);
    };

    let mut x = b.to_vec();
    let mut r = vec![0.0; n];
    op(&x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let cap = opts.max_iterations.unwrap_or(10 * n);
    let mut res = dot(&r, &r).sqrt() / bnorm;
    for it in 0..=cap {
        if res <= opts.tol {
            return done(x, it, res);
        }
        if it == cap {
            break;
        }
        op(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
    }
    Err(Error::CgNotConverged { iterations: cap, residual: res })
}

/// Largest eigenvalue by power iteration from a seeded random start.
///
/// Stops once the eigen-residual `||A x - rho x||` drops below
/// `POWER_ITERATION_TOL * rho`, which bounds the relative error of the
/// Rayleigh quotient `rho` by the same tolerance.
pub fn eigen_max(a: &SparseOperator) -> Result<f64> {
    eigen_max_counted(a).map(|(v, _)| v)
}

pub fn eigen_max_counted(a: &SparseOperator) -> Result<(f64, usize)> {
    let n = a.size();
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = |v: &[f64]| dot(v, v).sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; n];
    for it in 1..=POWER_ITERATION_CAP {
        a.apply_into(&x, &mut y);
        let rho = dot(&x, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok((0.0, it));
        }
        let res = y.iter().zip(&x).map(|(yi, xi)| (yi - rho * xi).powi(2)).sum::<f64>().sqrt();
        if res <= POWER_ITERATION_TOL * rho.abs() {
            return Ok((rho, it));
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
    }
    Err(Error::PowerIterationNotConverged(POWER_ITERATION_CAP))
}

/// The `k` smallest eigenvalues, ascending, by a dense symmetric solve.
pub fn eigen_smallest(a: &SparseOperator, k: usize) -> Result<Vec<f64>> {
    let n = a.size();
    if n > DENSE_CELL_CAP {
        return Err(Error::GridTooLarge { cells: n, cap: DENSE_CELL_CAP });
    }
    let mut values = symmetric_eigenvalues(&a.to_dense(), n);
    values.truncate(k);
    Ok(values)
}
