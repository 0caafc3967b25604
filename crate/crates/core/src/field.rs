//! Cartesian grids and the scalar / tensor fields sampled on them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sym::{SymMat2, SymMat3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Stencil arms leaving the grid are dropped.
    NeumannTruncate,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => write!(f, "periodic"),
            Boundary::NeumannTruncate => write!(f, "neumann"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "neumann" | "neumann-truncate" | "reflect" => Ok(Boundary::NeumannTruncate),
            other => Err(Error::InvalidParameter(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// Row-major cell grid: `x` varies fastest, then `y`, then `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    extents: [usize; 3],
    h: f64,
    boundary: Boundary,
}

impl Grid {
    pub fn new(extents: &[usize], h: f64, boundary: Boundary) -> Result<Self> {
        let dim = extents.len();
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension {dim} is not 2 or 3")));
        }
        if extents.contains(&0) {
            return Err(Error::InvalidGrid(format!("empty extent in {extents:?}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing {h} must be positive")));
        }
        let mut e = [1; 3];
        e[..dim].copy_from_slice(extents);
        extents
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidGrid("cell count overflows".into()))?;
        Ok(Self { dim, extents: e, h, boundary })
    }

    pub fn square(n: usize, h: f64, boundary: Boundary) -> Result<Self> {
        Self::new(&[n, n], h, boundary)
    }

    pub fn cube(n: usize, h: f64, boundary: Boundary) -> Result<Self> {
        Self::new(&[n, n, n], h, boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents[..self.dim]
    }

    pub fn extents3(&self) -> [usize; 3] {
        self.extents
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self { boundary, ..*self }
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.extents[1] + c[1]) * self.extents[0] + c[0]
    }

    pub fn coords(&self, i: usize) -> [usize; 3] {
        let [nx, ny, _] = self.extents;
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// Cell reached from `i` by the integer offset, or `None` when the arm
    /// leaves a non-periodic grid.
    pub fn neighbor(&self, i: usize, offset: [i64; 3]) -> Option<usize> {
        let c = self.coords(i);
        let mut out = [0usize; 3];
        for a in 0..3 {
            let n = self.extents[a] as i64;
            let x = c[a] as i64 + offset[a];
            out[a] = match self.boundary {
                Boundary::Periodic => x.rem_euclid(n) as usize,
                Boundary::NeumannTruncate => {
                    if x < 0 || x >= n {
                        return None;
                    }
                    x as usize
                }
            };
        }
        Some(self.index(out))
    }

    /// Cell-center position `(c + 1/2) h`.
    pub fn center(&self, i: usize) -> [f64; 3] {
        let c = self.coords(i);
        c.map(|x| (x as f64 + 0.5) * self.h)
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.extents == other.extents && self.h == other.h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} samples for a grid of {} cells", data.len(), grid.len())));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { data: vec![0.0; grid.len()], grid }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self { data: vec![value; grid.len()], grid }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let data = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, data)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    D2(Vec<SymMat2>),
    D3(Vec<SymMat3>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: Grid,
    data: TensorData,
}

impl TensorField {
    pub fn new(grid: Grid, data: TensorData) -> Result<Self> {
        let (len, dim) = match &data {
            TensorData::D2(v) => (v.len(), 2),
            TensorData::D3(v) => (v.len(), 3),
        };
        if dim != grid.dim() {
            return Err(Error::GridMismatch(format!("{dim}D tensors on a {}D grid", grid.dim())));
        }
        if len != grid.len() {
            return Err(Error::GridMismatch(format!("{len} tensors for a grid of {} cells", grid.len())));
        }
        Ok(Self { grid, data })
    }

    pub fn constant2(grid: Grid, d: SymMat2) -> Result<Self> {
        Self::new(grid, TensorData::D2(vec![d; grid.len()]))
    }

    pub fn constant3(grid: Grid, d: SymMat3) -> Result<Self> {
        Self::new(grid, TensorData::D3(vec![d; grid.len()]))
    }

    pub fn from_fn2(grid: Grid, f: impl Fn([f64; 3]) -> SymMat2) -> Result<Self> {
        let v = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, TensorData::D2(v))
    }

    pub fn from_fn3(grid: Grid, f: impl Fn([f64; 3]) -> SymMat3) -> Result<Self> {
        let v = (0..grid.len()).map(|i| f(grid.center(i))).collect();
        Self::new(grid, TensorData::D3(v))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.grid = self.grid.with_boundary(boundary);
        self
    }

    /// Largest anisotropy ratio over all cells.
    pub fn max_kappa(&self) -> f64 {
        match &self.data {
            TensorData::D2(v) => v.iter().map(SymMat2::kappa).fold(1.0, f64::max),
            TensorData::D3(v) => v.iter().map(SymMat3::kappa).fold(1.0, f64::max),
        }
    }
}
