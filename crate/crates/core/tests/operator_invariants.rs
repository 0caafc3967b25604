mod common;

use std::f64::consts::{FRAC_PI_6, PI};

use adlbr::field::{Boundary, Grid, ScalarField, TensorData, TensorField};
use adlbr::operator::{
    assemble, cg_solve, cg_solve_with, eigen_max, eigen_smallest, energy, explicit_step, stencil_energy, CgOptions,
    Scheme, SparseOperator,
};
use adlbr::{SymMat2, SymMat3};
use common::*;
use rand::Rng;

fn random_field2(seed: u64, n: usize, h: f64, bc: Boundary) -> TensorField {
    let mut r = rng(seed);
    let g = Grid::square(n, h, bc).unwrap();
    let data = (0..g.len()).map(|_| random_spd2(&mut r, 12.0)).collect();
    TensorField::new(g, TensorData::D2(data)).unwrap()
}

fn random_field3(seed: u64, n: usize, bc: Boundary) -> TensorField {
    let mut r = rng(seed);
    let g = Grid::cube(n, 0.5, bc).unwrap();
    let data = (0..g.len()).map(|_| random_spd3(&mut r, 8.0)).collect();
    TensorField::new(g, TensorData::D3(data)).unwrap()
}

fn random_vec(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn operators() -> Vec<SparseOperator> {
    let mut out = Vec::new();
    for (k, bc) in [Boundary::Periodic, Boundary::NeumannTruncate].into_iter().enumerate() {
        let t = random_field2(20 + k as u64, 12, 0.1, bc);
        for s in Scheme::ALL {
            out.push(assemble(&t, s).unwrap());
        }
        out.push(assemble(&random_field3(30 + k as u64, 6, bc), Scheme::AdLbr).unwrap());
    }
    out
}

#[test]
fn symmetric_with_zero_row_sums() {
    for a in operators() {
        assert!(a.is_symmetric(), "{} not symmetric", a.scheme());
        for i in 0..a.size() {
            let sum: f64 = a.row(i).map(|(_, v)| v).sum();
            let scale = a.row(i).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            assert!(sum.abs() <= 1e-12 * scale, "{} row {i}: {sum}", a.scheme());
        }
    }
}

#[test]
fn sign_pattern_of_nonnegative_schemes() {
    for a in operators().into_iter().filter(|a| a.scheme().is_nonnegative()) {
        for i in 0..a.size() {
            for (j, v) in a.row(i) {
                if i == j {
                    assert!(v >= 0.0);
                } else {
                    assert!(v <= 0.0, "{} A[{i},{j}] = {v}", a.scheme());
                }
            }
        }
    }
}

#[test]
fn fd_has_positive_off_diagonals() {
    let g = Grid::square(8, 1.0, Boundary::Periodic).unwrap();
    let d = SymMat2::rotated_anisotropic(2f64.sqrt(), FRAC_PI_6);
    let a = assemble(&TensorField::constant2(g, d).unwrap(), Scheme::Fd).unwrap();
    assert!((0..a.size()).any(|i| a.row(i).any(|(j, v)| j != i && v > 0.0)));
}

#[test]
fn energy_matches_quadratic_form() {
    let mut r = rng(40);
    let cases = [
        random_field2(41, 10, 0.1, Boundary::Periodic),
        random_field2(42, 10, 0.1, Boundary::NeumannTruncate),
        random_field3(43, 5, Boundary::NeumannTruncate),
    ];
    for t in &cases {
        let g = *t.grid();
        let hd = g.spacing().powi(g.dim() as i32);
        let a = assemble(t, Scheme::AdLbr).unwrap();
        for _ in 0..100 {
            let u = ScalarField::new(g, random_vec(&mut r, g.len())).unwrap();
            let e = energy(&u, t).unwrap();
            let q = hd * a.quadratic_form(u.data());
            assert!(rel_close(e, q, 1e-10), "{e} vs {q}");
        }
    }
    let t = random_field2(44, 9, 0.2, Boundary::NeumannTruncate);
    let a = assemble(&t, Scheme::Ann).unwrap();
    let u = ScalarField::new(*t.grid(), random_vec(&mut r, 81)).unwrap();
    let q = 0.04 * a.quadratic_form(u.data());
    assert!(rel_close(stencil_energy(&u, &t, Scheme::Ann).unwrap(), q, 1e-10));
}

#[test]
fn energy_of_constants_and_linear_ramp() {
    let n = 64;
    let g = Grid::square(n, 1.0 / n as f64, Boundary::NeumannTruncate).unwrap();
    let t = TensorField::constant2(g, SymMat2::IDENTITY).unwrap();
    assert_eq!(energy(&ScalarField::constant(g, 3.0), &t).unwrap(), 0.0);
    let e = energy(&ScalarField::from_fn(g, |p| p[0]), &t).unwrap();
    assert!((e - 1.0).abs() < 0.05, "{e}");
    let other = Grid::square(n + 1, 1.0 / n as f64, Boundary::NeumannTruncate).unwrap();
    assert!(energy(&ScalarField::zeros(other), &t).is_err());
}

#[test]
fn constant_tensor_operators_are_psd() {
    let mut r = rng(50);
    for s in Scheme::ALL {
        for bc in [Boundary::Periodic, Boundary::NeumannTruncate] {
            let d = spd2_with_kappa(&mut r, 7.0);
            let g = Grid::square(10, 1.0, bc).unwrap();
            let a = assemble(&TensorField::constant2(g, d).unwrap(), s).unwrap();
            for _ in 0..100 {
                let u = random_vec(&mut r, g.len());
                assert!(a.quadratic_form(&u) >= -1e-12 * a.max_diagonal(), "{s}");
            }
        }
    }
}

#[test]
fn second_order_consistency() {
    let d = SymMat2::rotated_anisotropic(3.0, 0.4);
    let u = |p: [f64; 3]| (2.0 * PI * p[0]).sin() * (4.0 * PI * p[1]).cos() + (2.0 * PI * (p[0] + p[1])).cos();
    let minus_div = |p: [f64; 3]| {
        let (x, y) = (p[0], p[1]);
        let tp = 2.0 * PI;
        let s = (tp * (x + y)).cos();
        let uxx = -tp * tp * (tp * x).sin() * (2.0 * tp * y).cos() - tp * tp * s;
        let uyy = -4.0 * tp * tp * (tp * x).sin() * (2.0 * tp * y).cos() - tp * tp * s;
        let uxy = -2.0 * tp * tp * (tp * x).cos() * (2.0 * tp * y).sin() - tp * tp * s;
        -(d.xx * uxx + 2.0 * d.xy * uxy + d.yy * uyy)
    };
    for s in Scheme::ALL {
        let err = |n: usize| {
            let g = Grid::square(n, 1.0 / n as f64, Boundary::Periodic).unwrap();
            let a = assemble(&TensorField::constant2(g, d).unwrap(), s).unwrap();
            let au = a.apply(ScalarField::from_fn(g, u).data());
            let exact = ScalarField::from_fn(g, minus_div);
            au.iter().zip(exact.data()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let ratio = err(48) / err(96);
        assert!((3.5..=4.5).contains(&ratio), "{s}: ratio {ratio}");
    }
}

#[test]
fn explicit_step_maximum_principle_and_conservation() {
    let mut r = rng(60);
    for (k, bc) in [Boundary::Periodic, Boundary::NeumannTruncate].into_iter().enumerate() {
        let t = random_field2(61 + k as u64, 16, 0.25, bc);
        for s in [Scheme::AdLbr, Scheme::Ann] {
            let a = assemble(&t, s).unwrap();
            let dt = 1.0 / a.max_diagonal();
            let mut u = ScalarField::new(*t.grid(), random_vec(&mut r, 256)).unwrap();
            for _ in 0..20 {
                let next = explicit_step(&u, &a, dt).unwrap();
                assert!(next.min() >= u.min() - 1e-12 && next.max() <= u.max() + 1e-12, "{s} {bc}");
                if bc == Boundary::Periodic {
                    assert!(rel_close(next.sum(), u.sum(), 1e-12) || (next.sum() - u.sum()).abs() < 1e-12);
                }
                u = next;
            }
        }
    }
    let t = random_field3(62, 6, Boundary::Periodic);
    let a = assemble(&t, Scheme::AdLbr).unwrap();
    let u = ScalarField::new(*t.grid(), random_vec(&mut r, 216)).unwrap();
    let next = explicit_step(&u, &a, 1.0 / a.max_diagonal()).unwrap();
    assert!(next.min() >= u.min() - 1e-12 && next.max() <= u.max() + 1e-12);
    assert!((next.sum() - u.sum()).abs() <= 1e-12 * u.data().iter().map(|x| x.abs()).sum::<f64>());
}

fn fourier_mode(n: usize, kx: f64, ky: f64) -> (ScalarField, f64) {
    // eigenvector of the periodic 5-point Laplacian with h = 1
    let g = Grid::square(n, 1.0, Boundary::Periodic).unwrap();
    let (tx, ty) = (2.0 * PI * kx / n as f64, 2.0 * PI * ky / n as f64);
    let u = ScalarField::from_fn(g, |p| (tx * (p[0] - 0.5) + ty * (p[1] - 0.5)).cos());
    let mu = 4.0 * (tx / 2.0).sin().powi(2) + 4.0 * (ty / 2.0).sin().powi(2);
    (u, mu)
}

#[test]
fn explicit_step_on_an_eigenvector() {
    let (u, mu) = fourier_mode(16, 3.0, 5.0);
    let a = assemble(&TensorField::constant2(*u.grid(), SymMat2::IDENTITY).unwrap(), Scheme::AdLbr).unwrap();
    let dt = 0.07;
    let next = explicit_step(&u, &a, dt).unwrap();
    for (x, y) in next.data().iter().zip(u.data()) {
        assert!((x - (1.0 - dt * mu) * y).abs() < 1e-12);
    }
}

#[test]
fn cg_on_an_eigenvector() {
    let (v, mu) = fourier_mode(20, 2.0, 7.0);
    let a = assemble(&TensorField::constant2(*v.grid(), SymMat2::IDENTITY).unwrap(), Scheme::AdLbr).unwrap();
    let lambda = 0.8;
    let u = cg_solve(&a, lambda, &v, 1e-12).unwrap();
    for (x, y) in u.data().iter().zip(v.data()) {
        assert!((x - y / (1.0 + lambda * mu)).abs() < 1e-10);
    }
}

#[test]
fn cg_reaches_the_requested_residual() {
    let t = random_field2(70, 24, 1.0 / 24.0, Boundary::NeumannTruncate);
    let a = assemble(&t, Scheme::AdLbr).unwrap();
    let mut r = rng(71);
    let v = ScalarField::new(*t.grid(), random_vec(&mut r, 576)).unwrap();
    for jacobi in [false, true] {
        let rep = cg_solve_with(&a, 1e-3, &v, &CgOptions { tol: 1e-9, max_iterations: None, jacobi }).unwrap();
        let au = a.apply(rep.solution.data());
        let res: f64 =
            (0..576).map(|i| (rep.solution.data()[i] + 1e-3 * au[i] - v.data()[i]).powi(2)).sum::<f64>().sqrt();
        let vn = v.data().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(res <= 1e-9 * vn * 1.0001, "jacobi={jacobi}: {res}");
    }
}

#[test]
fn laplacian_spectrum() {
    for n in [8, 16, 32] {
        let g = Grid::square(n, 1.0, Boundary::Periodic).unwrap();
        let a = assemble(&TensorField::constant2(g, SymMat2::IDENTITY).unwrap(), Scheme::AdLbr).unwrap();
        assert!((eigen_max(&a).unwrap() - 8.0).abs() <= 8e-6);
    }
    let g = Grid::square(4, 0.25, Boundary::Periodic).unwrap();
    let a = assemble(&TensorField::constant2(g, SymMat2::IDENTITY).unwrap(), Scheme::AdLbr).unwrap();
    let ev = eigen_smallest(&a, 16).unwrap();
    // exact spectrum 16 (4 sin^2(pi kx / 4) + 4 sin^2(pi ky / 4))
    let mut want: Vec<f64> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| 16.0 * (4.0 * (PI * i as f64 / 4.0).sin().powi(2) + 4.0 * (PI * j as f64 / 4.0).sin().powi(2)))
        .collect();
    want.sort_by(f64::total_cmp);
    for (x, y) in ev.iter().zip(&want) {
        assert!((x - y).abs() <= 1e-8 * y.max(1.0), "{x} vs {y}");
    }
}

fn smallest_nonzero(scheme: Scheme, n: usize) -> f64 {
    let d = SymMat2::new(9.5, 6.0, 4.0);
    let g = Grid::square(n, 1.0 / n as f64, Boundary::Periodic).unwrap();
    let a = assemble(&TensorField::constant2(g, d).unwrap(), scheme).unwrap();
    let ev = eigen_smallest(&a, 7).unwrap();
    let cut = 1e-8 * ev[6].abs();
    ev.into_iter().find(|&x| x > cut).unwrap()
}

#[test]
fn adlbr_spectrum_converges() {
    let target = 4.0 * PI * PI * 1.5;
    let v = smallest_nonzero(Scheme::AdLbr, 12);
    assert!((v - target).abs() <= 0.1 * target, "{v} vs {target}");
    let jumps = |s: Scheme| {
        let v: Vec<f64> = (8..=12).map(|n| smallest_nonzero(s, n)).collect();
        v.windows(2).map(|w| (w[1] - w[0]).abs() / w[0]).fold(0.0f64, f64::max)
    };
    assert!(jumps(Scheme::AdLbr) < jumps(Scheme::Ann));
}

#[test]
fn assembly_is_independent_of_thread_count() {
    let t = random_field2(80, 40, 0.1, Boundary::NeumannTruncate);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    for s in Scheme::ALL {
        let a = one.install(|| assemble(&t, s).unwrap());
        let b = many.install(|| assemble(&t, s).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn matrix_market_round_trip() {
    let t = random_field2(90, 5, 1.0, Boundary::Periodic);
    let a = assemble(&t, Scheme::AdLbr).unwrap();
    let mut buf = Vec::new();
    a.write_matrix_market(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('%'));
    let dims: Vec<usize> = lines.next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(dims[..2], [25, 25]);
    let mut count = 0;
    for l in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        let (i, j): (usize, usize) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        let v: f64 = f[2].parse().unwrap();
        assert!(j <= i);
        assert_eq!(v, a.get(i - 1, j - 1));
        count += 1;
    }
    assert_eq!(count, dims[2]);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let t = random_field2(91, 6, 1.0, Boundary::Periodic);
    let a = assemble(&t, Scheme::AdLbr).unwrap();
    let other = ScalarField::zeros(Grid::square(7, 1.0, Boundary::Periodic).unwrap());
    assert!(explicit_step(&other, &a, 0.1).is_err());
    assert!(cg_solve(&a, 1.0, &other, 1e-8).is_err());
    let v = ScalarField::zeros(*t.grid());
    assert!(cg_solve(&a, -1.0, &v, 1e-8).is_err());
    assert!(cg_solve(&a, 1.0, &v, 0.0).is_err());
    let bad = TensorField::constant2(*t.grid(), SymMat2::new(1.0, 2.0, 1.0)).unwrap();
    assert!(assemble(&bad, Scheme::AdLbr).is_err());
    assert!(assemble(&bad, Scheme::Fd).is_err());
    let t3 = TensorField::constant3(Grid::cube(3, 1.0, Boundary::Periodic).unwrap(), SymMat3::IDENTITY).unwrap();
    assert!(assemble(&t3, Scheme::Ann).is_err());
}
