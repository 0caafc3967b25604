//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

/// Eigen-decomposition of a dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `k` is the unit eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
    pub n: usize,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.vectors[i * self.n + k]).collect()
    }
}

const MAX_SWEEPS: usize = 100;

/// Diagonalizes the symmetric row-major `n x n` matrix `a` by cyclic Jacobi
/// rotations. Only symmetric input is meaningful; the lower triangle is read
/// as the mirror of the upper one.
pub fn jacobi_eigen(a: &[f64], n: usize) -> SymmetricEigen {
    assert_eq!(a.len(), n * n, "matrix size does not match n");
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let frob: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tiny = f64::EPSILON * f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 =
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m[i * n + j] * m[i * n + j]).sum();
        if off.sqrt() <= f64::EPSILON * frob || off <= tiny {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + new_col] = v[r * n + old_col];
        }
    }
    SymmetricEigen { values, vectors, n }
}

/// Eigenvalues of a dense symmetric matrix, ascending.
///
/// Householder reduction to tridiagonal form followed by implicit QL with
/// Wilkinson shifts; `O(n^3)` and suited to a few thousand unknowns, where
/// [`jacobi_eigen`] becomes slow.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n, "matrix size does not match n");
    if n == 0 {
        return Vec::new();
    }
    let (mut d, mut e) = tridiagonalize(a.to_vec(), n);
    tridiagonal_ql(&mut d, &mut e);
    d.sort_by(f64::total_cmp);
    d
}

/// Householder tridiagonalization; returns the diagonal and the
/// sub-diagonal (`e[i]` couples `i - 1` and `i`, `e[0] = 0`).
fn tridiagonalize(mut m: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let scale: f64 = (0..=l).map(|k| m[i * n + k].abs()).sum();
        if l == 0 || scale == 0.0 {
            e[i] = m[i * n + l];
            d[i] = 0.0;
            continue;
        }
        let mut h = 0.0;
        for k in 0..=l {
            m[i * n + k] /= scale;
            h += m[i * n + k] * m[i * n + k];
        }
        let f = m[i * n + l];
        let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
        e[i] = scale * g;
        h -= f * g;
        m[i * n + l] = f - g;
        let mut ff = 0.0;
        for j in 0..=l {
            let mut gg = 0.0;
            for k in 0..=j {
                gg += m[j * n + k] * m[i * n + k];
            }
            for k in j + 1..=l {
                gg += m[k * n + j] * m[i * n + k];
            }
            e[j] = gg / h;
            ff += e[j] * m[i * n + j];
        }
        let hh = ff / (h + h);
        for j in 0..=l {
            let f = m[i * n + j];
            let g = e[j] - hh * f;
            e[j] = g;
            for k in 0..=j {
                m[j * n + k] -= f * e[k] + g * m[i * n + k];
            }
        }
        d[i] = h;
    }
    for i in 0..n {
        d[i] = m[i * n + i];
    }
    (d, e)
}

fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_path_matches_jacobi() {
        let n = 23;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = (((i * 37 + j * 11) % 19) as f64 / 5.0 - 1.7) / (1.0 + (i as f64 - j as f64).abs());
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let j = jacobi_eigen(&a, n).values;
        let q = symmetric_eigenvalues(&a, n);
        for (x, y) in j.iter().zip(&q) {
            assert!((x - y).abs() < 1e-11, "{x} vs {y}");
        }
        assert_eq!(symmetric_eigenvalues(&[2.5], 1), vec![2.5]);
    }

    #[test]
    fn diagonal_matrix_is_sorted() {
        let a = [3.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0];
        let e = jacobi_eigen(&a, 3);
        assert_eq!(e.values, vec![-1.0, 2.0, 3.0]);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let n = 7;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x = ((i * 31 + j * 17) % 13) as f64 / 7.0 - 0.9;
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let e = jacobi_eigen(&a, n);
        for i in 0..n {
            for j in 0..n {
                let r: f64 = (0..n).map(|k| e.vectors[i * n + k] * e.values[k] * e.vectors[j * n + k]).sum();
                assert!((r - a[i * n + j]).abs() < 1e-12, "entry ({i},{j})");
                let g: f64 = (0..n).map(|k| e.vectors[k * n + i] * e.vectors[k * n + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-12);
            }
        }
    }
}
