use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use adlbr::operator::Scheme;
use adlbr::tensor::{DiffusionKind, StructureParams};

/// Non-negative anisotropic diffusion stencils by lattice basis reduction.
///
/// Exit status is 0 on success, 1 on a runtime or numerical failure and 2 on
/// a usage or validation error. Log verbosity can be tuned with `ADLBR_LOG`.
#[derive(Parser, Debug)]
#[command(name = "adlbr", version, about)]
pub struct Cli {
    /// Only log warnings and errors
    #[arg(short, long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the stencil of a constant tensor
    Stencil(StencilArgs),
    /// Coherence-enhancing (or edge-enhancing) diffusion of a PGM image
    Ced(CedArgs),
    /// Elliptic restoration: solve (I + lambda A) u = v for a PGM image
    Restore(RestoreArgs),
    /// Run the analytic stripe benchmark over a grid of settings
    Bench(BenchArgs),
    /// Largest or smallest eigenvalues of a discretized operator
    Eigen(EigenArgs),
    /// Coherence-enhancing diffusion of a volume
    Ced3d(VolumeArgs),
    /// Edge-enhancing diffusion of a volume
    Eed3d(VolumeArgs),
}

/// A constant diffusion tensor given by its entries or by anisotropy and angle.
#[derive(Args, Debug, Clone)]
pub struct TensorSpec {
    #[arg(long, allow_hyphen_values = true, requires_all = ["d12", "d22"], conflicts_with_all = ["kappa", "theta"])]
    pub d11: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "d11")]
    pub d12: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires = "d11")]
    pub d22: Option<f64>,
    /// Third row of a 3D tensor; give all three or none
    #[arg(long, allow_hyphen_values = true, requires_all = ["d11", "d23", "d33"])]
    pub d13: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["d11", "d13", "d33"])]
    pub d23: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["d11", "d13", "d23"])]
    pub d33: Option<f64>,
    /// Anisotropy ratio of `R diag(1, kappa^-2) R^T`
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Rotation angle of the principal direction, in radians
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_6, requires = "kappa", allow_hyphen_values = true)]
    pub theta: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Args, Debug)]
pub struct StencilArgs {
    #[command(flatten)]
    pub tensor: TensorSpec,
    /// adlbr or ann (ann is two-dimensional only)
    #[arg(long, default_value = "adlbr")]
    pub scheme: Scheme,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

/// Structure tensor and diffusion tensor parameters.
#[derive(Args, Debug, Clone, Copy)]
pub struct StructureArgs {
    /// Pre-smoothing scale of the image, in cells
    #[arg(long, default_value_t = StructureParams::default().sigma)]
    pub sigma: f64,
    /// Integration scale of the structure tensor, in cells
    #[arg(long, default_value_t = StructureParams::default().rho)]
    pub rho: f64,
    /// Contrast parameter C
    #[arg(long, default_value_t = StructureParams::default().contrast)]
    pub contrast: f64,
    /// Minimal eigenvalue alpha of the CED tensor, in (0, 1)
    #[arg(long, default_value_t = StructureParams::default().alpha)]
    pub alpha: f64,
}

impl StructureArgs {
    pub fn params(&self) -> adlbr::Result<StructureParams> {
        StructureParams::new(self.sigma, self.rho, self.contrast, self.alpha)
    }
}

/// Explicit time stepping flags shared by the diffusion drivers.
#[derive(Args, Debug, Clone, Copy)]
pub struct StepArgs {
    /// Time step
    #[arg(long, default_value_t = 0.02)]
    pub dt: f64,
    /// Final time; the number of steps is `round(T / dt)`
    #[arg(long = "time", short = 'T')]
    pub time: f64,
    /// Rebuild the diffusion tensor and operator every this many steps
    #[arg(long, default_value_t = 1)]
    pub resume_every: usize,
    /// Periodic instead of reflecting (Neumann) boundary
    #[arg(long)]
    pub periodic: bool,
}

#[derive(Args, Debug)]
pub struct CedArgs {
    /// Input PGM image (P5 or P2)
    pub input: PathBuf,
    /// Output PGM image, 8-bit
    pub output: PathBuf,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[command(flatten)]
    pub steps: StepArgs,
    /// ced or eed
    #[arg(long, default_value = "ced")]
    pub kind: DiffusionKind,
    /// adlbr, ann or fd
    #[arg(long, default_value = "adlbr")]
    pub scheme: Scheme,
    /// Multiply grey levels (read in [0, 1]) by this factor before processing
    #[arg(long, default_value_t = 1.0)]
    pub intensity_scale: f64,
}

#[derive(Args, Debug)]
pub struct RestoreArgs {
    /// Input PGM image (P5 or P2)
    pub input: PathBuf,
    /// Output PGM image, 8-bit
    pub output: PathBuf,
    /// Regularization weight lambda
    #[arg(long)]
    pub lambda: f64,
    /// Relative residual tolerance of conjugate gradients
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// adlbr, ann or fd
    #[arg(long, default_value = "adlbr")]
    pub scheme: Scheme,
    /// sym2 tensor volume to use instead of the structure-tensor map
    #[arg(long)]
    pub tensor: Option<PathBuf>,
    /// Map applied to the structure tensor: ced or eed
    #[arg(long, default_value = "ced", conflicts_with = "tensor")]
    pub kind: DiffusionKind,
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Multiply grey levels (read in [0, 1]) by this factor before processing
    #[arg(long, default_value_t = 1.0)]
    pub intensity_scale: f64,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Anisotropy ratios, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [2.0, 10.0])]
    pub kappa: Vec<f64>,
    /// Grid resolutions, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [100, 200, 400])]
    pub n: Vec<usize>,
    /// Schemes, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = Scheme::ALL)]
    pub scheme: Vec<Scheme>,
    /// Regularization weight lambda
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// CSV file to append rows to; created with a header when missing
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EigenMode {
    Max,
    Smallest,
}

#[derive(Args, Debug)]
pub struct EigenArgs {
    #[command(flatten)]
    pub tensor: TensorSpec,
    /// Use the structure-tensor CED map of this PGM image instead of a constant tensor
    #[arg(long, conflicts_with_all = ["d11", "kappa"])]
    pub from_image: Option<PathBuf>,
    #[command(flatten)]
    pub structure: StructureArgs,
    /// Schemes, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "adlbr")]
    pub scheme: Vec<Scheme>,
    #[arg(long, value_enum, default_value = "max")]
    pub mode: EigenMode,
    /// Number of eigenvalues in smallest mode
    #[arg(short, default_value_t = 7)]
    pub k: usize,
    /// Grid resolution (n x n, periodic)
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// In smallest mode, sweep the resolution from n up to this value
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Grid spacing; defaults to 1 in max mode and 1/n in smallest mode
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Args, Debug)]
pub struct VolumeArgs {
    /// `INPUT OUTPUT`, or only `OUTPUT` with --phantom
    #[arg(num_args = 1..=2, required = true)]
    pub paths: Vec<PathBuf>,
    /// Use the noisy radial phantom at resolution n^3 as input
    #[arg(long)]
    pub phantom: Option<usize>,
    /// Standard deviation of the phantom noise
    #[arg(long, default_value_t = 0.5, requires = "phantom")]
    pub noise_sd: f64,
    /// Seed of the phantom noise
    #[arg(long, default_value_t = adlbr::synthetic::PHANTOM_SEED, requires = "phantom")]
    pub seed: u64,
    #[command(flatten)]
    pub structure: StructureArgs,
    #[command(flatten)]
    pub steps: StepArgs,
}
