mod common;

use adlbr::field::{Boundary, Grid, ScalarField, TensorData};
use adlbr::tensor::{ced2, ced3, ced_tensor, eed2, eed3, eed_tensor, gaussian_blur, structure_tensor, StructureParams};
use adlbr::{SymMat2, SymMat3};
use common::*;
use rand::Rng;

fn random_psd2(r: &mut impl Rng, scale: f64) -> SymMat2 {
    // sum of two random outer products, occasionally rank one
    let mut m = SymMat2::ZERO;
    let terms = if r.random_bool(0.2) { 1 } else { 2 };
    for _ in 0..terms {
        let g = [r.random_range(-scale..scale), r.random_range(-scale..scale)];
        m.xx += g[0] * g[0];
        m.xy += g[0] * g[1];
        m.yy += g[1] * g[1];
    }
    m
}

fn random_psd3(r: &mut impl Rng, scale: f64) -> SymMat3 {
    let mut m = [[0.0; 3]; 3];
    let terms = r.random_range(1..=4);
    for _ in 0..terms {
        let g: [f64; 3] = std::array::from_fn(|_| r.random_range(-scale..scale));
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += g[i] * g[j];
            }
        }
    }
    SymMat3::from_full(m)
}

fn random_rotation3(r: &mut impl Rng) -> [[f64; 3]; 3] {
    let q: [f64; 4] = std::array::from_fn(|_| r.random_range(-1.0..1.0));
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

fn conj3(r: &[[f64; 3]; 3], m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    out[i][j] += r[i][k] * m[k][l] * r[j][l];
                }
            }
        }
    }
    out
}

fn max_diff3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    (0..9).map(|k| (a[k / 3][k % 3] - b[k / 3][k % 3]).abs()).fold(0.0, f64::max)
}

#[test]
fn ced_conditioning_is_bounded_by_alpha() {
    let mut r = rng(31);
    for alpha in [1e-3, 1e-2, 0.2] {
        let p = StructureParams::new(0.5, 4.0, 1e-5, alpha).unwrap();
        for _ in 0..1000 {
            let scale = 10f64.powf(r.random_range(-4.0..1.0));
            let d2 = ced2(&random_psd2(&mut r, scale), &p).unwrap();
            d2.check_spd().unwrap();
            assert!(d2.kappa() <= alpha.powf(-0.5) * (1.0 + 1e-9));
            let e = d2.eigen().values;
            assert!(e[1] >= alpha * (1.0 - 1e-12) && e[0] <= 1.0 + 1e-12);
            let d3 = ced3(&random_psd3(&mut r, scale), &p).unwrap();
            d3.check_spd().unwrap();
            assert!(d3.kappa() <= alpha.powf(-0.5) * (1.0 + 1e-9));
        }
    }
}

#[test]
fn eed_eigenvalues_lie_in_unit_interval() {
    let mut r = rng(32);
    let p = StructureParams::default();
    for _ in 0..1000 {
        let scale = 10f64.powf(r.random_range(-5.0..2.0));
        let d2 = eed2(&random_psd2(&mut r, scale), &p).unwrap();
        let d3 = eed3(&random_psd3(&mut r, scale), &p).unwrap();
        for v in d2.eigen().values.iter().chain(d3.eigen().values.iter()) {
            assert!(*v > 0.0 && *v <= 1.0 + 1e-12, "{v}");
        }
        d2.check_spd().unwrap();
        d3.check_spd().unwrap();
    }
}

#[test]
fn diffusion_tensors_are_rotation_equivariant() {
    let mut r = rng(33);
    let p = StructureParams::default();
    for _ in 0..500 {
        let j = random_psd3(&mut r, 0.01);
        let q = random_rotation3(&mut r);
        let rotated = SymMat3::from_full(conj3(&q, &j.to_full()));
        for (a, b) in
            [(ced3(&rotated, &p).unwrap(), ced3(&j, &p).unwrap()), (eed3(&rotated, &p).unwrap(), eed3(&j, &p).unwrap())]
        {
            let diff = max_diff3(&a.to_full(), &conj3(&q, &b.to_full()));
            assert!(diff < 1e-10, "{diff}");
        }

        let j2 = random_psd2(&mut r, 0.01);
        let t: f64 = r.random_range(0.0..std::f64::consts::TAU);
        let (s, c) = t.sin_cos();
        let rot = |m: &SymMat2| {
            let f = m.to_full();
            let rm = [
                [c * f[0][0] - s * f[1][0], c * f[0][1] - s * f[1][1]],
                [s * f[0][0] + c * f[1][0], s * f[0][1] + c * f[1][1]],
            ];
            SymMat2::new(rm[0][0] * c - rm[0][1] * s, rm[0][0] * s + rm[0][1] * c, rm[1][0] * s + rm[1][1] * c)
        };
        for (a, b) in [
            (ced2(&rot(&j2), &p).unwrap(), rot(&ced2(&j2, &p).unwrap())),
            (eed2(&rot(&j2), &p).unwrap(), rot(&eed2(&j2, &p).unwrap())),
        ] {
            let diff = (a.xx - b.xx).abs().max((a.xy - b.xy).abs()).max((a.yy - b.yy).abs());
            assert!(diff < 1e-10, "{diff}");
        }
    }
}

fn brute_blur2(u: &ScalarField, s: f64) -> Vec<f64> {
    let g = u.grid();
    let [nx, ny, _] = g.extents3();
    let r = (3.0 * s).ceil() as i64;
    let fold = |i: i64, n: usize| -> usize {
        let mut i = i;
        let n = n as i64;
        loop {
            if i < 0 {
                i = -i - 1;
            } else if i >= n {
                i = 2 * n - 1 - i;
            } else {
                return i as usize;
            }
        }
    };
    let w = |k: i64| (-(k * k) as f64 / (2.0 * s * s)).exp();
    let norm: f64 = (-r..=r).map(w).sum();
    let mut out = vec![0.0; g.len()];
    for y in 0..ny {
        for x in 0..nx {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let xi = fold(x as i64 + dx, nx);
                    let yi = fold(y as i64 + dy, ny);
                    acc += w(dx) * w(dy) * u.data()[g.index([xi, yi, 0])];
                }
            }
            out[g.index([x, y, 0])] = acc / (norm * norm);
        }
    }
    out
}

#[test]
fn blur_matches_direct_convolution() {
    let mut r = rng(34);
    let g = Grid::new(&[13, 7], 1.0, Boundary::NeumannTruncate).unwrap();
    let u = ScalarField::new(g, (0..g.len()).map(|_| r.random_range(0.0..1.0)).collect()).unwrap();
    for s in [0.5, 1.0, 2.5, 4.0] {
        let fast = gaussian_blur(&u, s).unwrap();
        let slow = brute_blur2(&u, s);
        for (a, b) in fast.data().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-13, "s={s}: {a} vs {b}");
        }
        assert!((fast.sum() - u.sum()).abs() < 1e-10 * u.sum());
    }
    assert_eq!(gaussian_blur(&u, 0.0).unwrap(), u);
}

#[test]
fn blur_of_centered_impulse_is_symmetric() {
    let g = Grid::cube(11, 1.0, Boundary::NeumannTruncate).unwrap();
    let mut u = ScalarField::zeros(g);
    u.data_mut()[g.index([5, 5, 5])] = 1.0;
    let b = gaussian_blur(&u, 1.2).unwrap();
    for i in 0..g.len() {
        let [x, y, z] = g.coords(i);
        let v = b.data()[i];
        for c in [[10 - x, y, z], [x, 10 - y, z], [y, x, z], [z, y, x], [x, z, y]] {
            assert!((b.data()[g.index(c)] - v).abs() < 1e-16);
        }
    }
    assert!((b.sum() - 1.0).abs() < 1e-12);
}

#[test]
fn structure_tensor_of_constant_vanishes() {
    let g = Grid::cube(6, 1.0, Boundary::NeumannTruncate).unwrap();
    let j = structure_tensor(&ScalarField::constant(g, 0.7), &StructureParams::default()).unwrap();
    let TensorData::D3(v) = j.data() else { panic!("expected 3D tensors") };
    assert!(v.iter().all(|m| *m == SymMat3::ZERO));
    let d = ced_tensor(&j, &StructureParams::default()).unwrap();
    let TensorData::D3(v) = d.data() else { panic!("expected 3D tensors") };
    assert!(v.iter().all(|m| (m.xx - 0.01).abs() < 1e-15 && m.xy == 0.0));
    let e = eed_tensor(&j, &StructureParams::default()).unwrap();
    let TensorData::D3(v) = e.data() else { panic!("expected 3D tensors") };
    assert!(v.iter().all(|m| *m == SymMat3::IDENTITY));
}

#[test]
fn structure_tensor_of_ramp_points_along_x() {
    let n = 24;
    let h = 1.0 / n as f64;
    let g = Grid::square(n, h, Boundary::NeumannTruncate).unwrap();
    let u = ScalarField::from_fn(g, |x| x[0]);
    let p = StructureParams::new(1.0, 2.0, 1e-5, 1e-2).unwrap();
    let j = structure_tensor(&u, &p).unwrap();
    let TensorData::D2(v) = j.data() else { panic!("expected 2D tensors") };
    for i in 0..g.len() {
        let [x, y, _] = g.coords(i);
        let m = v[i];
        assert!(m.xy.abs() < 1e-14 && m.yy.abs() < 1e-14);
        if (10..14).contains(&x) && (4..20).contains(&y) {
            assert!((m.xx - 1.0).abs() < 1e-10, "{m:?}");
        }
    }
    // coherent direction is y, so CED diffuses along y and stalls along x
    let d = ced_tensor(&j, &p).unwrap();
    let TensorData::D2(dv) = d.data() else { panic!("expected 2D tensors") };
    let mid = dv[g.index([12, 12, 0])];
    let across = p.alpha + (1.0 - p.alpha) * (-p.contrast).exp();
    assert!((mid.xx - p.alpha).abs() < 1e-10 && (mid.yy - across).abs() < 1e-10, "{mid:?}");
}

#[test]
fn rank_one_structure_gives_alpha_across_the_gradient() {
    let p = StructureParams::default();
    let mut r = rng(35);
    for _ in 0..200 {
        let t: f64 = r.random_range(0.0..std::f64::consts::PI);
        let mag: f64 = r.random_range(0.1..10.0);
        let g = [mag * t.cos(), mag * t.sin()];
        let j = SymMat2::new(g[0] * g[0], g[0] * g[1], g[1] * g[1]);
        let d = ced2(&j, &p).unwrap();
        let gg = g[0] * g[0] + g[1] * g[1];
        let along = d.dot_f([g[0], g[1]], [g[0], g[1]]) / gg;
        let across = d.dot_f([-g[1], g[0]], [-g[1], g[0]]) / gg;
        assert!((along - p.alpha).abs() < 1e-12);
        let want = p.alpha + (1.0 - p.alpha) * (-p.contrast / (gg * gg)).exp();
        assert!(rel_close(across, want, 1e-12));
    }
}

trait DotF {
    fn dot_f(&self, a: [f64; 2], b: [f64; 2]) -> f64;
}

impl DotF for SymMat2 {
    fn dot_f(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let m = self.apply(b);
        a[0] * m[0] + a[1] * m[1]
    }
}
