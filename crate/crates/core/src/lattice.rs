//! Lattice basis reduction and obtuse superbases of Z^2 and Z^3.
//!
//! A basis `(e_1, .., e_d)` is *M-reduced* when each `e_i` has minimal
//! `M`-norm among the integer vectors outside the sublattice spanned by the
//! previous ones; the resulting norms are the Minkowski minima of `M`.
//! A superbase `(e_0, .., e_d)` sums to zero and any `d` of its members
//! form a basis. It is *M-obtuse* when all pairwise scalar products
//! `<e_i, M e_j>` are non-positive.

use crate::error::Result;
use crate::sym::{det2, det3, LatticeVector2, LatticeVector3, SymMat2, SymMat3};

/// Iteration cap for the reduction loops. Lagrange's algorithm needs
/// `O(ln kappa)` iterations, so this is never reached for finite SPD input.
const MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Basis2 {
    pub e: LatticeVector2,
    pub f: LatticeVector2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Basis3(pub [LatticeVector3; 3]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Superbase2(pub [LatticeVector2; 3]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Superbase3(pub [LatticeVector3; 4]);

impl Basis2 {
    pub fn det(&self) -> i64 {
        det2(self.e, self.f)
    }
}

impl Basis3 {
    pub fn det(&self) -> i64 {
        det3(self.0[0], self.0[1], self.0[2])
    }
}

impl Superbase2 {
    pub fn is_obtuse(&self, m: &SymMat2) -> bool {
        let v = &self.0;
        (0..3).all(|i| (i + 1..3).all(|j| m.dot(v[i], v[j]) <= 0.0))
    }
}

impl Superbase3 {
    pub fn is_obtuse(&self, m: &SymMat3) -> bool {
        let v = &self.0;
        (0..4).all(|i| (i + 1..4).all(|j| m.dot(v[i], v[j]) <= 0.0))
    }
}

fn round_half_away(x: f64) -> i64 {
    // f64::round rounds half-way cases away from zero
    x.round() as i64
}

fn combine3(c: [i64; 2], a: LatticeVector3, b: LatticeVector3) -> LatticeVector3 {
    [c[0] * a[0] + c[1] * b[0], c[0] * a[1] + c[1] * b[1], c[0] * a[2] + c[1] * b[2]]
}

fn neg2(v: LatticeVector2) -> LatticeVector2 {
    [-v[0], -v[1]]
}

fn neg3(v: LatticeVector3) -> LatticeVector3 {
    [-v[0], -v[1], -v[2]]
}

fn add3(a: LatticeVector3, b: LatticeVector3) -> LatticeVector3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Lagrange's algorithm from the canonical basis, without the SPD check.
/// Returns the reduced basis and the number of loop iterations.
///
/// Each iteration size-reduces the longer vector against the shorter one,
/// `f := f - Round(<e,Mf>/||e||^2) e`, and swaps the two while that makes
/// `f` the shorter.
fn lagrange_raw(m: &SymMat2) -> (Basis2, usize) {
    let mut e: LatticeVector2 = [1, 0];
    let mut f: LatticeVector2 = [0, 1];
    if m.norm2(e) > m.norm2(f) {
        std::mem::swap(&mut e, &mut f);
    }
    let mut iterations = 0;
    loop {
        iterations += 1;
        let r = round_half_away(m.dot(e, f) / m.norm2(e));
        f = [f[0] - r * e[0], f[1] - r * e[1]];
        if m.norm2(f) >= m.norm2(e) || iterations >= MAX_ITERATIONS {
            break;
        }
        std::mem::swap(&mut e, &mut f);
    }
    (Basis2 { e, f }, iterations)
}

/// M-reduced basis of Z^2, `||e||_M <= ||f||_M`.
pub fn lagrange_reduce(m: &SymMat2) -> Result<Basis2> {
    lagrange_reduce_counted(m).map(|(b, _)| b)
}

/// Same as [`lagrange_reduce`], also reporting the loop iteration count.
pub fn lagrange_reduce_counted(m: &SymMat2) -> Result<(Basis2, usize)> {
    m.check_spd()?;
    Ok(lagrange_raw(m))
}

/// Minkowski-reduced basis of Z^3, sorted by increasing `M`-norm.
///
/// Greedy iteration: Lagrange-reduce the two shortest vectors, then replace
/// the longest by the shortest member of its coset modulo their span. The
/// candidates are the 3x3 integer neighbourhood of the rounded real
/// projection coefficients. Every update is unimodular.
pub fn reduce3(m: &SymMat3) -> Result<Basis3> {
    m.check_spd()?;
    let mut b: [LatticeVector3; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

    for _ in 0..MAX_ITERATIONS {
        b.sort_by(|x, y| m.norm2(*x).total_cmp(&m.norm2(*y)));

        let gram = SymMat2::new(m.norm2(b[0]), m.dot(b[0], b[1]), m.norm2(b[1]));
        let (red, _) = lagrange_raw(&gram);
        let b0 = combine3(red.e, b[0], b[1]);
        let b1 = combine3(red.f, b[0], b[1]);

        let g00 = m.norm2(b0);
        let g01 = m.dot(b0, b1);
        let g11 = m.norm2(b1);
        let r0 = m.dot(b[2], b0);
        let r1 = m.dot(b[2], b1);
        let det = g00 * g11 - g01 * g01;
        let x0 = (g11 * r0 - g01 * r1) / det;
        let x1 = (g00 * r1 - g01 * r0) / det;
        let (c0, c1) = (round_half_away(x0), round_half_away(x1));

        let mut best = b[2];
        let mut best_norm = m.norm2(best);
        for i in -1..=1 {
            for j in -1..=1 {
                let (k0, k1) = (c0 + i, c1 + j);
                let cand = [
                    b[2][0] - k0 * b0[0] - k1 * b1[0],
                    b[2][1] - k0 * b0[1] - k1 * b1[1],
                    b[2][2] - k0 * b0[2] - k1 * b1[2],
                ];
                let n = m.norm2(cand);
                if n < best_norm {
                    best = cand;
                    best_norm = n;
                }
            }
        }

        b = [b0, b1, best];
        if best_norm >= g11 {
            break;
        }
    }
    Ok(Basis3(b))
}

/// Minkowski minima `(lambda_1, lambda_2)` of a 2x2 SPD form.
pub fn minkowski_minima2(m: &SymMat2) -> Result<[f64; 2]> {
    let b = lagrange_reduce(m)?;
    Ok([m.norm2(b.e).sqrt(), m.norm2(b.f).sqrt()])
}

/// Minkowski minima `(lambda_1, lambda_2, lambda_3)` of a 3x3 SPD form.
pub fn minkowski_minima3(m: &SymMat3) -> Result<[f64; 3]> {
    let b = reduce3(m)?;
    Ok(b.0.map(|v| m.norm2(v).sqrt()))
}

/// `|<e, M f>|` for an M-reduced basis; zero iff Z^2 has an M-orthogonal basis.
pub fn mu(m: &SymMat2) -> Result<f64> {
    let b = lagrange_reduce(m)?;
    Ok(m.dot(b.e, b.f).abs())
}

/// M-obtuse superbase `(e, f, -e-f)` from a reduced basis with `<e, M f> <= 0`.
pub fn obtuse_superbase2(m: &SymMat2) -> Result<Superbase2> {
    let Basis2 { e, mut f } = lagrange_reduce(m)?;
    if m.dot(e, f) > 0.0 {
        f = neg2(f);
    }
    let g = [-e[0] - f[0], -e[1] - f[1]];
    Ok(Superbase2([e, f, g]))
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// D-obtuse superbase of Z^3 obtained from a D-reduced basis.
///
/// The reduced vectors are permuted so that
/// `|<b1,Db2>| <= |<b1,Db3>| <= |<b2,Db3>|` (first such permutation in
/// lexicographic order), then signed so that `<b1,Db3>, <b2,Db3> <= 0`.
/// The superbase is `(b1, b2, b3, -b1-b2-b3)` when `<b1,Db2> <= 0`, and
/// `(-b1, b2, b1+b3, -b2-b3)` otherwise.
pub fn obtuse_superbase3(d: &SymMat3) -> Result<Superbase3> {
    let e = reduce3(d)?.0;
    let p = |i: usize, j: usize| d.dot(e[i], e[j]).abs();
    let sigma = PERMUTATIONS
        .iter()
        .find(|s| p(s[0], s[1]) <= p(s[0], s[2]) && p(s[0], s[2]) <= p(s[1], s[2]))
        .expect("some permutation sorts three reals");

    let b3 = e[sigma[2]];
    let mut b1 = e[sigma[0]];
    let mut b2 = e[sigma[1]];
    if d.dot(b1, b3) > 0.0 {
        b1 = neg3(b1);
    }
    if d.dot(b2, b3) > 0.0 {
        b2 = neg3(b2);
    }

    let sb = if d.dot(b1, b2) <= 0.0 {
        [b1, b2, b3, neg3(add3(add3(b1, b2), b3))]
    } else {
        [neg3(b1), b2, add3(b1, b3), neg3(add3(b2, b3))]
    };
    Ok(Superbase3(sb))
}
