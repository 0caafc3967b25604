//! Small symmetric matrices: diffusion tensors and their metrics.

use crate::dense::jacobi_eigen;
use crate::error::{Error, Result};

pub type LatticeVector2 = [i64; 2];
pub type LatticeVector3 = [i64; 3];

/// Relative tolerance of the leading-minor SPD test.
const SPD_RTOL: f64 = 1e-12;

/// Symmetric 2x2 matrix, upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Symmetric 3x3 matrix, upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat3 {
    pub xx: f64,
    pub xy: f64,
    pub xz: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
}

/// Common view of 2x2 and 3x3 symmetric tensors.
pub trait Tensor: Copy + Send + Sync {
    const DIM: usize;
    /// Full 3x3 array; 2x2 tensors occupy the upper-left block.
    fn to_full3(&self) -> [[f64; 3]; 3];
    fn check_spd(&self) -> Result<()>;
    fn kappa(&self) -> f64;
    fn frobenius(&self) -> f64;
}

impl Tensor for SymMat2 {
    const DIM: usize = 2;
    fn to_full3(&self) -> [[f64; 3]; 3] {
        [[self.xx, self.xy, 0.0], [self.xy, self.yy, 0.0], [0.0, 0.0, 0.0]]
    }
    fn check_spd(&self) -> Result<()> {
        SymMat2::check_spd(self)
    }
    fn kappa(&self) -> f64 {
        SymMat2::kappa(self)
    }
    fn frobenius(&self) -> f64 {
        SymMat2::frobenius(self)
    }
}

impl Tensor for SymMat3 {
    const DIM: usize = 3;
    fn to_full3(&self) -> [[f64; 3]; 3] {
        self.to_full()
    }
    fn check_spd(&self) -> Result<()> {
        SymMat3::check_spd(self)
    }
    fn kappa(&self) -> f64 {
        SymMat3::kappa(self)
    }
    fn frobenius(&self) -> f64 {
        SymMat3::frobenius(self)
    }
}

/// Eigenvalues sorted in decreasing order, with matching unit eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen<const D: usize> {
    pub values: [f64; D],
    pub vectors: [[f64; D]; D],
}

impl SymMat2 {
    pub const IDENTITY: Self = Self { xx: 1.0, xy: 0.0, yy: 1.0 };
    pub const ZERO: Self = Self { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    /// `sum_i values[i] v_i v_i^T`.
    pub fn from_eigen(values: [f64; 2], vectors: [[f64; 2]; 2]) -> Self {
        let mut m = Self::ZERO;
        for (l, v) in values.iter().zip(vectors.iter()) {
            m.xx += l * v[0] * v[0];
            m.xy += l * v[0] * v[1];
            m.yy += l * v[1] * v[1];
        }
        m
    }

    /// The tensor `R diag(1, kappa^-2) R^T`, with `R` the rotation by `theta`.
    pub fn rotated_anisotropic(kappa: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::from_eigen([1.0, kappa.powi(-2)], [[c, s], [-s, c]])
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(self.yy / d, -self.xy / d, self.xx / d)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `<e, M f>` for integer vectors.
    pub fn dot(&self, e: LatticeVector2, f: LatticeVector2) -> f64 {
        let (e0, e1, f0, f1) = (e[0] as f64, e[1] as f64, f[0] as f64, f[1] as f64);
        self.xx * e0 * f0 + self.xy * (e0 * f1 + e1 * f0) + self.yy * e1 * f1
    }

    /// `||e||_M^2`.
    pub fn norm2(&self, e: LatticeVector2) -> f64 {
        self.dot(e, e)
    }

    fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Leading principal minors positive, relative to the entry scale.
    pub fn check_spd(&self) -> Result<()> {
        let s = self.max_abs();
        if !self.is_finite() || s == 0.0 {
            return Err(Error::NotSpd(format!("{self:?}")));
        }
        if self.xx <= SPD_RTOL * s || self.det() <= SPD_RTOL * s * s {
            return Err(Error::NotSpd(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn eigen(&self) -> Eigen<2> {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = half_diff.hypot(self.xy);
        let values = [mean + r, mean - r];
        // angle of the leading eigenvector
        let phi = 0.5 * (2.0 * self.xy).atan2(self.xx - self.yy);
        let (s, c) = phi.sin_cos();
        Eigen { values, vectors: [[c, s], [-s, c]] }
    }

    /// `sqrt(||M|| ||M^-1||)` for an SPD matrix.
    pub fn kappa(&self) -> f64 {
        let e = self.eigen().values;
        (e[0] / e[1]).sqrt()
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        let e = self.eigen().values;
        e[0].abs().max(e[1].abs())
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    pub fn to_full(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }
}

impl SymMat3 {
    pub const IDENTITY: Self = Self { xx: 1.0, xy: 0.0, xz: 0.0, yy: 1.0, yz: 0.0, zz: 1.0 };
    pub const ZERO: Self = Self { xx: 0.0, xy: 0.0, xz: 0.0, yy: 0.0, yz: 0.0, zz: 0.0 };

    pub const fn new(xx: f64, xy: f64, xz: f64, yy: f64, yz: f64, zz: f64) -> Self {
        Self { xx, xy, xz, yy, yz, zz }
    }

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, 0.0, 0.0, b, 0.0, c)
    }

    pub fn from_full(m: [[f64; 3]; 3]) -> Self {
        Self::new(m[0][0], m[0][1], m[0][2], m[1][1], m[1][2], m[2][2])
    }

    pub fn to_full(&self) -> [[f64; 3]; 3] {
        [[self.xx, self.xy, self.xz], [self.xy, self.yy, self.yz], [self.xz, self.yz, self.zz]]
    }

    pub fn from_eigen(values: [f64; 3], vectors: [[f64; 3]; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (l, v) in values.iter().zip(vectors.iter()) {
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += l * v[i] * v[j];
                }
            }
        }
        Self::from_full(m)
    }

    pub fn det(&self) -> f64 {
        self.xx * (self.yy * self.zz - self.yz * self.yz) - self.xy * (self.xy * self.zz - self.yz * self.xz)
            + self.xz * (self.xy * self.yz - self.yy * self.xz)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.xz * s, self.yy * s, self.yz * s, self.zz * s)
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self::new(
            (self.yy * self.zz - self.yz * self.yz) / d,
            (self.xz * self.yz - self.xy * self.zz) / d,
            (self.xy * self.yz - self.xz * self.yy) / d,
            (self.xx * self.zz - self.xz * self.xz) / d,
            (self.xy * self.xz - self.xx * self.yz) / d,
            (self.xx * self.yy - self.xy * self.xy) / d,
        )
    }

    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        [
            self.xx * v[0] + self.xy * v[1] + self.xz * v[2],
            self.xy * v[0] + self.yy * v[1] + self.yz * v[2],
            self.xz * v[0] + self.yz * v[1] + self.zz * v[2],
        ]
    }

    pub fn dot(&self, e: LatticeVector3, f: LatticeVector3) -> f64 {
        let e = e.map(|x| x as f64);
        let mf = self.apply(f.map(|x| x as f64));
        e[0] * mf[0] + e[1] * mf[1] + e[2] * mf[2]
    }

    pub fn norm2(&self, e: LatticeVector3) -> f64 {
        self.dot(e, e)
    }

    fn max_abs(&self) -> f64 {
        [self.xx, self.xy, self.xz, self.yy, self.yz, self.zz].iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        [self.xx, self.xy, self.xz, self.yy, self.yz, self.zz].iter().all(|x| x.is_finite())
    }

    pub fn check_spd(&self) -> Result<()> {
        let s = self.max_abs();
        if !self.is_finite() || s == 0.0 {
            return Err(Error::NotSpd(format!("{self:?}")));
        }
        let m2 = self.xx * self.yy - self.xy * self.xy;
        if self.xx <= SPD_RTOL * s || m2 <= SPD_RTOL * s * s || self.det() <= SPD_RTOL * s * s * s {
            return Err(Error::NotSpd(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn eigen(&self) -> Eigen<3> {
        let full = self.to_full();
        let flat: Vec<f64> = full.iter().flatten().copied().collect();
        let e = jacobi_eigen(&flat, 3);
        let mut values = [0.0; 3];
        let mut vectors = [[0.0; 3]; 3];
        // jacobi_eigen sorts ascending
        for k in 0..3 {
            values[k] = e.values[2 - k];
            for i in 0..3 {
                vectors[k][i] = e.vectors[i * 3 + (2 - k)];
            }
        }
        Eigen { values, vectors }
    }

    pub fn kappa(&self) -> f64 {
        let e = self.eigen().values;
        (e[0] / e[2]).sqrt()
    }

    pub fn norm(&self) -> f64 {
        let e = self.eigen().values;
        e[0].abs().max(e[2].abs())
    }

    pub fn frobenius(&self) -> f64 {
        let m = self.to_full();
        m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Frobenius norm of the difference of two 3x3 arrays.
pub(crate) fn frobenius_diff(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = a[i][j] - b[i][j];
            s += d * d;
        }
    }
    s.sqrt()
}

pub fn cross(a: LatticeVector3, b: LatticeVector3) -> LatticeVector3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn det2(a: LatticeVector2, b: LatticeVector2) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn det3(a: LatticeVector3, b: LatticeVector3, c: LatticeVector3) -> i64 {
    let x = cross(b, c);
    a[0] * x[0] + a[1] * x[1] + a[2] * x[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spd_check() {
        assert!(SymMat2::IDENTITY.check_spd().is_ok());
        assert!(SymMat2::new(1.0, 1.0, 1.0).check_spd().is_err());
        assert!(SymMat2::new(1.0, 0.0, -1.0).check_spd().is_err());
        assert!(SymMat2::new(f64::NAN, 0.0, 1.0).check_spd().is_err());
        assert!(SymMat3::diag(1.0, 2.0, 3.0).check_spd().is_ok());
        assert!(SymMat3::new(1.0, 1.0, 0.0, 1.0, 0.0, 1.0).check_spd().is_err());
    }

    #[test]
    fn eigen2_reconstructs() {
        let m = SymMat2::new(0.775, 0.3897, 0.325);
        let e = m.eigen();
        assert!(e.values[0] >= e.values[1]);
        let r = SymMat2::from_eigen(e.values, e.vectors);
        assert!((r.xx - m.xx).abs() < 1e-14);
        assert!((r.xy - m.xy).abs() < 1e-14);
        assert!((r.yy - m.yy).abs() < 1e-14);
    }

    #[test]
    fn rotated_tensor_has_requested_anisotropy() {
        let d = SymMat2::rotated_anisotropic(10f64.sqrt(), std::f64::consts::FRAC_PI_6);
        assert!((d.kappa() - 10f64.sqrt()).abs() < 1e-12);
        assert!((d.det() - 0.1).abs() < 1e-14);
        let e = d.eigen();
        let c = std::f64::consts::FRAC_PI_6.cos();
        assert!((e.vectors[0][0].abs() - c).abs() < 1e-12);
    }

    #[test]
    fn inverse3() {
        let m = SymMat3::new(4.0, 1.0, 0.5, 3.0, -0.2, 2.0);
        let inv = m.inverse();
        let a = m.to_full();
        let b = inv.to_full();
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                assert!((p - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }
}
