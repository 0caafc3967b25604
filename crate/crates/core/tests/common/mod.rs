#![allow(dead_code)]

use adlbr::{SymMat2, SymMat3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SPD 2x2 matrix with `sqrt(lmax / lmin) = kappa`, random orientation and scale.
pub fn spd2_with_kappa(r: &mut impl Rng, kappa: f64) -> SymMat2 {
    let theta = r.random_range(0.0..std::f64::consts::PI);
    let scale = 10f64.powf(r.random_range(-1.0..1.0));
    SymMat2::rotated_anisotropic(kappa, theta).scale(scale)
}

/// SPD 2x2 matrix with anisotropy ratio drawn log-uniformly in `[1, kmax]`.
pub fn random_spd2(r: &mut impl Rng, kmax: f64) -> SymMat2 {
    let k = kmax.powf(r.random_range(0.0..1.0));
    spd2_with_kappa(r, k)
}

fn random_rotation3(r: &mut impl Rng) -> [[f64; 3]; 3] {
    // uniform unit quaternion
    let (u1, u2, u3): (f64, f64, f64) = (r.random(), r.random(), r.random());
    let tau = std::f64::consts::TAU;
    let q = [
        (1.0 - u1).sqrt() * (tau * u2).sin(),
        (1.0 - u1).sqrt() * (tau * u2).cos(),
        u1.sqrt() * (tau * u3).sin(),
        u1.sqrt() * (tau * u3).cos(),
    ];
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// SPD 3x3 matrix with anisotropy ratio at most `kmax`; the middle
/// eigenvalue is drawn between the extreme ones.
pub fn random_spd3(r: &mut impl Rng, kmax: f64) -> SymMat3 {
    let k = kmax.powf(r.random_range(0.0..1.0));
    let lo = 1.0 / (k * k);
    let mid = lo.powf(r.random_range(0.0..1.0));
    let scale = 10f64.powf(r.random_range(-1.0..1.0));
    let q = random_rotation3(r);
    let vals = [scale, scale * mid, scale * lo];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| q[i][k] * vals[k] * q[j][k]).sum();
        }
    }
    SymMat3::from_full(m)
}

/// Successive minima by exhaustive enumeration of the box `|v|_inf <= r`:
/// vectors sorted by norm are accepted greedily while linearly independent.
pub fn brute_minima2(m: &SymMat2, r: i64) -> [f64; 2] {
    let mut v = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            if (x, y) != (0, 0) {
                v.push((m.norm2([x, y]), [x, y]));
            }
        }
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let first = v[0];
    let second = v.iter().find(|(_, w)| first.1[0] * w[1] - first.1[1] * w[0] != 0).unwrap();
    [first.0.sqrt(), second.0.sqrt()]
}

pub fn brute_minima3(m: &SymMat3, r: i64) -> [f64; 3] {
    // lambda_3 <= max diagonal entry, attained by some axis vector
    let cut = m.xx.max(m.yy).max(m.zz) * (1.0 + 1e-12);
    let mut v = Vec::new();
    for x in -r..=r {
        for y in -r..=r {
            for z in -r..=r {
                if (x, y, z) == (0, 0, 0) {
                    continue;
                }
                let n = m.norm2([x, y, z]);
                if n <= cut {
                    v.push((n, [x, y, z]));
                }
            }
        }
    }
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut picked: Vec<[i64; 3]> = Vec::new();
    let mut out = [0.0; 3];
    for (n, w) in v {
        let independent = match picked.len() {
            0 => true,
            1 => cross(picked[0], w) != [0, 0, 0],
            _ => dot3(cross(picked[0], picked[1]), w) != 0,
        };
        if independent {
            out[picked.len()] = n.sqrt();
            picked.push(w);
            if picked.len() == 3 {
                break;
            }
        }
    }
    assert_eq!(picked.len(), 3, "enumeration box too small");
    out
}

pub fn cross(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn dot3(a: [i64; 3], b: [i64; 3]) -> i64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
