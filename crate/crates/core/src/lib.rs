//! Anisotropic diffusion on Cartesian grids with non-negative stencils
//! obtained from lattice basis reduction (AD-LBR), together with two
//! comparison discretizations, elliptic and parabolic solvers, structure
//! tensor pipelines and an analytic restoration benchmark.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dense;
pub mod error;
pub mod field;
pub mod imageio;
pub mod lattice;
pub mod operator;
pub mod stencil;
pub mod sym;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
pub use sym::{LatticeVector2, LatticeVector3, SymMat2, SymMat3};
