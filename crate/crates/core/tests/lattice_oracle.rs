mod common;

use adlbr::lattice::{
    lagrange_reduce, lagrange_reduce_counted, minkowski_minima2, minkowski_minima3, mu, obtuse_superbase2,
    obtuse_superbase3, reduce3,
};
use adlbr::{SymMat2, SymMat3};
use common::*;
use rand::Rng;

const KAPPA_MAX: f64 = 50.0;

fn assert_minima_within_eigen_bounds(lmin: f64, lmax: f64, minima: &[f64]) {
    // ||M^-1||^(-1/2) <= lambda_i <= ||M||^(1/2)
    for &l in minima {
        assert!(l >= lmin.sqrt() * (1.0 - 1e-12), "{l} below {}", lmin.sqrt());
        assert!(l <= lmax.sqrt() * (1.0 + 1e-12), "{l} above {}", lmax.sqrt());
    }
}

#[test]
fn minima_2d_match_enumeration() {
    let mut r = rng(1);
    for _ in 0..200 {
        let m = random_spd2(&mut r, KAPPA_MAX);
        let got = minkowski_minima2(&m).unwrap();
        let want = brute_minima2(&m, KAPPA_MAX as i64);
        for i in 0..2 {
            assert!(rel_close(got[i], want[i], 1e-12), "{m:?}: {got:?} vs {want:?}");
        }
        let e = m.eigen();
        assert_minima_within_eigen_bounds(e.values[1], e.values[0], &got);
    }
}

#[test]
fn reduced_basis_2d_properties() {
    let mut r = rng(2);
    for _ in 0..200 {
        let m = random_spd2(&mut r, KAPPA_MAX);
        let b = lagrange_reduce(&m).unwrap();
        assert_eq!(b.det().abs(), 1);
        let (ne, nf) = (m.norm2(b.e), m.norm2(b.f));
        assert!(ne <= nf);
        // near orthogonality: 2 |<e_i, M e_j>| <= |e_i|^2 for i, j
        let s = m.dot(b.e, b.f).abs();
        assert!(2.0 * s <= ne * (1.0 + 1e-12));
        assert!(2.0 * s <= nf * (1.0 + 1e-12));
        // mu = sqrt(l1^2 l2^2 - det M), and 0 <= 2 mu <= l1^2
        let [l1, l2] = brute_minima2(&m, KAPPA_MAX as i64);
        let ident = (l1 * l1 * l2 * l2 - m.det()).max(0.0).sqrt();
        let mv = mu(&m).unwrap();
        assert!((mv - ident).abs() <= 1e-10 * (l1 * l2).max(mv), "{mv} vs {ident}");
        assert!(2.0 * mv <= l1 * l1 * (1.0 + 1e-12));
    }
}

#[test]
fn sorted_obtuse_superbase_is_reduced() {
    let mut r = rng(3);
    for _ in 0..200 {
        let m = random_spd2(&mut r, KAPPA_MAX);
        let sb = obtuse_superbase2(&m).unwrap();
        let v = sb.0;
        assert_eq!([v[0][0] + v[1][0] + v[2][0], v[0][1] + v[1][1] + v[2][1]], [0, 0]);
        assert_eq!((v[0][0] * v[1][1] - v[0][1] * v[1][0]).abs(), 1);
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(m.dot(v[i], v[j]) <= 1e-12 * m.norm());
            }
        }
        let mut n: Vec<f64> = v.iter().map(|&x| m.norm2(x).sqrt()).collect();
        n.sort_by(f64::total_cmp);
        let want = brute_minima2(&m, KAPPA_MAX as i64);
        assert!(rel_close(n[0], want[0], 1e-12) && rel_close(n[1], want[1], 1e-12));
    }
}

#[test]
fn lagrange_iterations_grow_logarithmically() {
    // empirically the loop runs at most about 1 + ln(kappa) / ln(2) times
    const C: f64 = 2.0;
    let mut r = rng(4);
    for _ in 0..2000 {
        let kappa = 10f64.powf(r.random_range(0.0..4.0));
        let m = spd2_with_kappa(&mut r, kappa);
        let (_, it) = lagrange_reduce_counted(&m).unwrap();
        let bound = C * (1.0 + kappa.ln());
        assert!((it as f64) <= bound, "kappa {kappa}: {it} iterations");
    }
}

#[test]
fn minima_3d_match_enumeration() {
    let mut r = rng(5);
    for _ in 0..100 {
        let m = random_spd3(&mut r, KAPPA_MAX);
        let got = minkowski_minima3(&m).unwrap();
        let want = brute_minima3(&m, 60);
        for i in 0..3 {
            assert!(rel_close(got[i], want[i], 1e-10), "{m:?}: {got:?} vs {want:?}");
        }
        let b = reduce3(&m).unwrap();
        assert_eq!(b.det().abs(), 1);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let ni = m.norm2(b.0[i]);
                    assert!(2.0 * m.dot(b.0[i], b.0[j]).abs() <= ni * (1.0 + 1e-10));
                }
            }
        }
        let e = m.eigen();
        assert_minima_within_eigen_bounds(e.values[2], e.values[0], &got);
    }
}

#[test]
fn obtuse_superbase_3d_invariants() {
    let mut r = rng(6);
    for _ in 0..500 {
        let d = random_spd3(&mut r, 100.0);
        let sb = obtuse_superbase3(&d).unwrap().0;
        let sum = [0, 1, 2].map(|a| sb.iter().map(|v| v[a]).sum::<i64>());
        assert_eq!(sum, [0, 0, 0]);
        assert_eq!(dot3(cross(sb[0], sb[1]), sb[2]).abs(), 1);
        for i in 0..4 {
            for j in i + 1..4 {
                assert!(d.dot(sb[i], sb[j]) <= 1e-12 * d.norm(), "{d:?} {sb:?}");
            }
        }
    }
}

#[test]
fn small_diagonal_examples() {
    let b = lagrange_reduce(&SymMat2::IDENTITY).unwrap();
    assert_eq!((b.e, b.f), ([1, 0], [0, 1]));
    let b = lagrange_reduce(&SymMat2::diag(1.0, 100.0)).unwrap();
    assert_eq!((b.e, b.f), ([1, 0], [0, 1]));
    let m3 = minkowski_minima3(&SymMat3::diag(1.0, 4.0, 9.0)).unwrap();
    assert_eq!(m3, [1.0, 2.0, 3.0]);
    assert_eq!(minkowski_minima3(&SymMat3::IDENTITY).unwrap(), [1.0; 3]);
}
