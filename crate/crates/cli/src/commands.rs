use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::path::Path;

use log::{info, warn};
use thiserror::Error;

use adlbr::field::{Boundary, Grid, ScalarField, TensorField};
use adlbr::imageio::{read_pgm, read_volume, write_pgm, write_volume, Volume};
use adlbr::operator::{assemble, cg_solve_with, eigen_max, eigen_smallest, CgOptions, Scheme, SparseOperator};
use adlbr::stencil::{
    adlbr_stencil_2d, adlbr_stencil_3d, ann_stencil_2d, decomposition_residual, stencil_radius, symbol_max, Stencil,
};
use adlbr::synthetic::{phantom, run_benchmark, BenchResult, SyntheticCase};
use adlbr::tensor::{diffusion_tensor, run_nonlinear, DiffusionKind, NonlinearOptions, StructureParams};
use adlbr::{Error, SymMat2, SymMat3};

use crate::args::*;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Errors caused by flag values rather than by input data or numerics.
pub fn is_validation(e: &Error) -> bool {
    matches!(
        e,
        Error::NotSpd(_)
            | Error::InvalidParameter(_)
            | Error::InvalidGrid(_)
            | Error::Unsupported(_)
            | Error::EmptyClipRange
            | Error::GridTooLarge { .. }
    )
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Stencil(a) => stencil(&a),
        Command::Ced(a) => ced(&a),
        Command::Restore(a) => restore(&a),
        Command::Bench(a) => bench(&a),
        Command::Eigen(a) => eigen(&a),
        Command::Ced3d(a) => volume_diffusion(&a, DiffusionKind::Ced),
        Command::Eed3d(a) => volume_diffusion(&a, DiffusionKind::Eed),
    }
}

#[derive(Debug, Clone, Copy)]
enum ConstTensor {
    D2(SymMat2),
    D3(SymMat3),
}

impl TensorSpec {
    fn resolve(&self) -> Result<ConstTensor> {
        let t = match (self.d11, self.kappa) {
            (Some(d11), _) => {
                let (d12, d22) = (self.d12.unwrap_or_default(), self.d22.unwrap_or_default());
                match (self.d13, self.d23, self.d33) {
                    (Some(d13), Some(d23), Some(d33)) => ConstTensor::D3(SymMat3::new(d11, d12, d13, d22, d23, d33)),
                    _ => ConstTensor::D2(SymMat2::new(d11, d12, d22)),
                }
            }
            (None, Some(kappa)) => {
                if !(kappa >= 1.0 && kappa.is_finite()) {
                    return Err(usage(format!("--kappa {kappa} must be >= 1")));
                }
                ConstTensor::D2(SymMat2::rotated_anisotropic(kappa, self.theta))
            }
            (None, None) => return Err(usage("give a tensor with --d11 --d12 --d22 [--d13 --d23 --d33] or --kappa")),
        };
        match t {
            ConstTensor::D2(d) => d.check_spd()?,
            ConstTensor::D3(d) => d.check_spd()?,
        }
        Ok(t)
    }
}

fn constant_stencil(t: ConstTensor, scheme: Scheme) -> Result<Stencil> {
    let s = match (t, scheme) {
        (_, Scheme::Fd) => return Err(Error::Unsupported("finite differences have no cell stencil".into()).into()),
        (ConstTensor::D2(d), Scheme::AdLbr) => adlbr_stencil_2d(&d)?,
        (ConstTensor::D2(d), Scheme::Ann) => ann_stencil_2d(&d)?,
        (ConstTensor::D3(d), Scheme::AdLbr) => adlbr_stencil_3d(&d)?,
        (ConstTensor::D3(_), Scheme::Ann) => {
            return Err(Error::Unsupported("the A-NN scheme is two-dimensional".into()).into())
        }
    };
    Ok(s)
}

fn fmt_offset(o: [i64; 3], dim: usize) -> String {
    if dim == 2 {
        format!("({}, {})", o[0], o[1])
    } else {
        format!("({}, {}, {})", o[0], o[1], o[2])
    }
}

fn stencil(a: &StencilArgs) -> Result<()> {
    let t = a.tensor.resolve()?;
    let s = constant_stencil(t, a.scheme)?;
    let dim = s.dim();
    let residual = match t {
        ConstTensor::D2(d) => decomposition_residual(&s, &d),
        ConstTensor::D3(d) => decomposition_residual(&s, &d),
    };
    let mut out = String::new();
    match a.format {
        Format::Csv => {
            let axes = if dim == 2 { "offset_x,offset_y" } else { "offset_x,offset_y,offset_z" };
            writeln!(out, "{axes},weight,operator_coefficient").unwrap();
            for e in s.entries() {
                let o = &e.offset[..dim];
                let o: Vec<String> = o.iter().map(i64::to_string).collect();
                writeln!(out, "{},{},{}", o.join(","), e.weight, e.operator_coefficient() + 0.0).unwrap();
            }
            let zeros = vec!["0"; dim].join(",");
            writeln!(out, "{zeros},0,{}", s.center_coefficient()).unwrap();
        }
        Format::Table => {
            let tensor = match t {
                ConstTensor::D2(d) => format!("[[{}, {}], [{}, {}]]", d.xx, d.xy, d.xy, d.yy),
                ConstTensor::D3(d) => format!(
                    "[[{}, {}, {}], [{}, {}, {}], [{}, {}, {}]]",
                    d.xx, d.xy, d.xz, d.xy, d.yy, d.yz, d.xz, d.yz, d.zz
                ),
            };
            writeln!(out, "scheme {}  D = {tensor}", a.scheme).unwrap();
            writeln!(out, "{:>14}  {:>12}  {:>12}", "offset", "weight", "coefficient").unwrap();
            writeln!(out, "{:>14}  {:>12}  {:>12.6}", fmt_offset([0; 3], dim), "", s.center_coefficient()).unwrap();
            for e in s.entries() {
                let o = fmt_offset(e.offset, dim);
                writeln!(out, "{o:>14}  {:>12.6}  {:>12.6}", e.weight, e.operator_coefficient()).unwrap();
            }
            let radius = stencil_radius(&s).map(|r| format!("{r:.6}")).unwrap_or_else(|_| "-".into());
            writeln!(out, "radius                  {radius}").unwrap();
            writeln!(out, "cardinality             {}", s.cardinality()).unwrap();
            writeln!(out, "decomposition residual  {residual:.3e}").unwrap();
            writeln!(out, "symbol max              {:.6}", symbol_max(&s)).unwrap();
        }
    }
    print!("{out}");
    Ok(())
}

fn check_scale(scale: f64) -> Result<()> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(usage(format!("--intensity-scale {scale} must be positive")));
    }
    Ok(())
}

fn read_image(path: &Path, scale: f64, boundary: Boundary) -> Result<ScalarField> {
    let u = read_pgm(path)?;
    let g = u.grid().with_boundary(boundary);
    Ok(ScalarField::new(g, u.data().iter().map(|x| x * scale).collect())?)
}

fn write_image(u: &ScalarField, path: &Path, scale: f64) -> Result<()> {
    write_pgm(u, path, (0.0, scale))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn step_count(s: &StepArgs) -> Result<usize> {
    if !(s.dt > 0.0 && s.dt.is_finite()) {
        return Err(usage(format!("--dt {} must be positive", s.dt)));
    }
    if !(s.time >= 0.0 && s.time.is_finite()) {
        return Err(usage(format!("--time {} must be non-negative", s.time)));
    }
    if s.resume_every == 0 {
        return Err(usage("--resume-every must be at least 1"));
    }
    let steps = (s.time / s.dt).round() as usize;
    let reached = steps as f64 * s.dt;
    if (reached - s.time).abs() > 1e-9 * s.time.max(1.0) {
        warn!("final time {} is not a multiple of dt; stopping at t = {reached}", s.time);
    }
    Ok(steps)
}

fn diffuse(u: &ScalarField, opts: &NonlinearOptions) -> Result<ScalarField> {
    info!(
        "{} with {}: {} steps of dt = {}, operator rebuilt every {} steps",
        opts.kind, opts.scheme, opts.steps, opts.dt, opts.rebuild_every
    );
    let dt = opts.dt;
    let log_operator = |step: usize, a: &SparseOperator| {
        if step == 0 {
            info!("maximum-principle time step bound 1 / max diag A = {:.6e}", 1.0 / a.max_diagonal());
            match eigen_max(a) {
                Ok(l) => {
                    info!("lambda_max at t = 0: {l:.6e} (dt * lambda_max = {:.3})", dt * l);
                    if dt * l > 2.0 {
                        warn!("dt * lambda_max > 2: the explicit scheme is likely unstable");
                    }
                }
                Err(e) => warn!("lambda_max at t = 0 unavailable: {e}"),
            }
        } else {
            info!("step {step}: operator rebuilt");
        }
    };
    info!("t = 0: mean {:.15e}, range [{:.6}, {:.6}]", u.mean(), u.min(), u.max());
    let out = run_nonlinear(u, opts, log_operator)?;
    let t = opts.steps as f64 * dt;
    info!("t = {t}: mean {:.15e}, range [{:.6}, {:.6}]", out.mean(), out.min(), out.max());
    Ok(out)
}

fn boundary(periodic: bool) -> Boundary {
    if periodic {
        Boundary::Periodic
    } else {
        Boundary::NeumannTruncate
    }
}

fn ced(a: &CedArgs) -> Result<()> {
    let params = a.structure.params()?;
    let steps = step_count(&a.steps)?;
    check_scale(a.intensity_scale)?;
    let opts = NonlinearOptions {
        params,
        kind: a.kind,
        scheme: a.scheme,
        dt: a.steps.dt,
        steps,
        rebuild_every: a.steps.resume_every,
    };
    opts.validate()?;
    let u = read_image(&a.input, a.intensity_scale, boundary(a.steps.periodic))?;
    let out = diffuse(&u, &opts)?;
    write_image(&out, &a.output, a.intensity_scale)
}

fn restore(a: &RestoreArgs) -> Result<()> {
    let params = a.structure.params()?;
    check_scale(a.intensity_scale)?;
    if !(a.lambda >= 0.0 && a.lambda.is_finite()) {
        return Err(usage(format!("--lambda {} must be non-negative", a.lambda)));
    }
    if !(a.tol > 0.0) {
        return Err(usage(format!("--tol {} must be positive", a.tol)));
    }
    let v = read_image(&a.input, a.intensity_scale, Boundary::NeumannTruncate)?;
    let t = match &a.tensor {
        Some(path) => {
            let t = read_volume(path)?.into_tensor()?;
            if t.grid().extents() != v.grid().extents() {
                return Err(Error::GridMismatch(format!(
                    "tensor volume extents {:?} differ from image extents {:?}",
                    t.grid().extents(),
                    v.grid().extents()
                ))
                .into());
            }
            TensorField::new(*v.grid(), t.into_data())?
        }
        None => diffusion_tensor(&v, &params, a.kind)?,
    };
    info!("max tensor anisotropy {:.3}", t.max_kappa());
    let op = assemble(&t, a.scheme)?;
    let report = cg_solve_with(&op, a.lambda, &v, &CgOptions { tol: a.tol, ..CgOptions::default() })?;
    info!("conjugate gradients: {} iterations, relative residual {:.3e}", report.iterations, report.relative_residual);
    write_image(&report.solution, &a.output, a.intensity_scale)
}

fn dedup<T: Copy>(values: &[T], key: impl Fn(&T) -> String) -> Vec<T> {
    let mut seen = HashSet::new();
    values.iter().copied().filter(|v| seen.insert(key(v))).collect()
}

fn bench(a: &BenchArgs) -> Result<()> {
    let kappas = dedup(&a.kappa, |k| k.to_bits().to_string());
    let ns = dedup(&a.n, usize::to_string);
    let schemes = dedup(&a.scheme, Scheme::to_string);
    if kappas.is_empty() || ns.is_empty() || schemes.is_empty() {
        return Err(usage("--kappa, --n and --scheme need at least one value each"));
    }
    let mut cases = Vec::new();
    for &kappa in &kappas {
        for &n in &ns {
            let mut c = SyntheticCase::new(kappa, n)?;
            c.lambda = a.lambda;
            c.validate()?;
            cases.push(c);
        }
    }

    let mut csv = match &a.out {
        Some(path) => Some(open_csv(path)?),
        None => None,
    };
    println!(
        "{:>6} {:>7} {:>6} {:>12} {:>12} {:>8} {:>10}",
        "scheme", "kappa", "n", "l2_rel", "h1_rel", "cg_iter", "wall_ms"
    );
    for c in &cases {
        for &s in &schemes {
            let r = run_benchmark(c, s)?;
            println!(
                "{:>6} {:>7} {:>6} {:>12.4e} {:>12.4e} {:>8} {:>10.1}",
                r.scheme, r.kappa, r.n, r.l2_rel, r.h1_rel, r.cg_iterations, r.wall_ms
            );
            if let Some(f) = csv.as_mut() {
                writeln!(f, "{r}")?;
            }
        }
    }
    if let Some(path) = &a.out {
        info!("appended results to {}", path.display());
    }
    Ok(())
}

fn open_csv(path: &Path) -> Result<fs::File> {
    let existing = match fs::read_to_string(path) {
        Ok(s) => Some(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(e.into()),
    };
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    match existing.as_deref().and_then(|s| s.lines().next()) {
        None => writeln!(f, "{}", BenchResult::CSV_HEADER)?,
        Some(h) if h == BenchResult::CSV_HEADER => {}
        Some(h) => {
            return Err(Error::MalformedHeader(format!(
                "{} starts with {h:?}, expected {:?}",
                path.display(),
                BenchResult::CSV_HEADER
            ))
            .into())
        }
    }
    Ok(f)
}

fn eigen(a: &EigenArgs) -> Result<()> {
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    if let Some(h) = a.h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(usage(format!("--h {h} must be positive")));
        }
    }
    if a.mode == EigenMode::Smallest && a.k == 0 {
        return Err(usage("-k must be positive"));
    }
    let n_max = a.n_max.unwrap_or(a.n);
    if n_max < a.n {
        return Err(usage(format!("--n-max {n_max} is below --n {}", a.n)));
    }
    if a.n_max.is_some() && a.mode == EigenMode::Max {
        return Err(usage("--n-max only applies to --mode smallest"));
    }
    let schemes = dedup(&a.scheme, Scheme::to_string);

    // Tensor field on an n x n grid with spacing h.
    let field: Box<dyn Fn(usize, f64) -> Result<TensorField>> = match &a.from_image {
        Some(path) => {
            let params = a.structure.params()?;
            let u = read_pgm(path)?;
            let t = diffusion_tensor(&u, &params, DiffusionKind::Ced)?;
            info!("{}: {:?} cells, max tensor anisotropy {:.3}", path.display(), t.grid().extents(), t.max_kappa());
            let extents = t.grid().extents().to_vec();
            Box::new(move |_, h| {
                let g = Grid::new(&extents, h, Boundary::NeumannTruncate)?;
                Ok(TensorField::new(g, t.data().clone())?)
            })
        }
        None => {
            let c = a.tensor.resolve()?;
            Box::new(move |n, h| {
                Ok(match c {
                    ConstTensor::D2(d) => TensorField::constant2(Grid::square(n, h, Boundary::Periodic)?, d)?,
                    ConstTensor::D3(d) => TensorField::constant3(Grid::cube(n, h, Boundary::Periodic)?, d)?,
                })
            })
        }
    };

    match a.mode {
        EigenMode::Max => {
            let h = a.h.unwrap_or(1.0);
            println!("scheme,n,h,lambda_max");
            for &s in &schemes {
                let l = eigen_max(&assemble(&field(a.n, h)?, s)?)?;
                println!("{s},{},{h},{l}", a.n);
                if a.from_image.is_none() {
                    // the symbol supremum is only attained on grids of the right parity
                    let other = a.n + 1;
                    let l2 = eigen_max(&assemble(&field(other, h)?, s)?)?;
                    info!("{s}: lambda_max {l:.6} at n = {}, {l2:.6} at n = {other}", a.n);
                    if let Ok(st) = constant_stencil(a.tensor.resolve()?, s) {
                        info!("{s}: symbol supremum {:.6}", symbol_max(&st) / (h * h));
                    }
                }
            }
        }
        EigenMode::Smallest => {
            let cols: Vec<String> = (1..=a.k).map(|i| format!("lambda_{i}")).collect();
            println!("scheme,n,h,{}", cols.join(","));
            for &s in &schemes {
                for n in a.n..=n_max {
                    let h = a.h.unwrap_or(1.0 / n as f64);
                    let ev = eigen_smallest(&assemble(&field(n, h)?, s)?, a.k)?;
                    let ev: Vec<String> = ev.iter().map(|v| format!("{v:.8e}")).collect();
                    println!("{s},{n},{h},{}", ev.join(","));
                }
            }
        }
    }
    Ok(())
}

fn volume_diffusion(a: &VolumeArgs, kind: DiffusionKind) -> Result<()> {
    let params: StructureParams = a.structure.params()?;
    let steps = step_count(&a.steps)?;
    let (u, output) = match (a.phantom, a.paths.as_slice()) {
        (Some(n), [out]) => {
            if !(a.noise_sd >= 0.0) {
                return Err(usage(format!("--noise-sd {} must be non-negative", a.noise_sd)));
            }
            info!("phantom {n}^3, noise sd {}, seed {}", a.noise_sd, a.seed);
            (phantom(n, a.noise_sd, a.seed)?, out)
        }
        (None, [input, out]) => (read_volume(input)?.into_scalar()?, out),
        (Some(_), _) => return Err(usage("with --phantom give only the output path")),
        (None, _) => return Err(usage("give INPUT and OUTPUT paths, or --phantom n and OUTPUT")),
    };
    let g = u.grid().with_boundary(boundary(a.steps.periodic));
    let u = ScalarField::new(g, u.into_data())?;
    let opts = NonlinearOptions {
        params,
        kind,
        scheme: Scheme::AdLbr,
        dt: a.steps.dt,
        steps,
        rebuild_every: a.steps.resume_every,
    };
    opts.validate()?;
    let out = diffuse(&u, &opts)?;
    write_volume(&Volume::from(out), output)?;
    info!("wrote {}", output.display());
    Ok(())
}
