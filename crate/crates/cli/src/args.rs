use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "hardy", version, about = "Optimal Hardy weights, Green functions and criticality diagnostics on graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalArgs {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    #[serde(skip)]
    pub format: Format,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for residual checks and linear solves.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the optimal Hardy weight of a graph family.
    HardyWeight(HardyWeightArgs),
    /// Run the algebraic identity suite on seeded random graphs.
    Verify(VerifyArgs),
    /// Spectral sweeps and the optimality report.
    Sweep(SweepArgs),
    /// Green function values with residuals.
    Green(GreenArgs),
    /// Coarea and Stokes checks for one function on a finite graph.
    CoareaCheck(CoareaArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::HardyWeight(_) => "hardy-weight",
            Command::Verify(_) => "verify",
            Command::Sweep(_) => "sweep",
            Command::Green(_) => "green",
            Command::CoareaCheck(_) => "coarea-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Halfline,
    Lattice,
    RegularTree,
    CustomFinite,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FamilyArgs {
    #[arg(long, value_enum, default_value_t = FamilyName::Halfline)]
    pub family: FamilyName,
    /// Lattice dimension.
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    /// Tree degree.
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Graph file (JSON) for `custom-finite`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HardyWeightArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Inclusive vertex range `a:b` for the half-line and the tree.
    #[arg(long, default_value = "1:20")]
    pub range: String,
    /// Lattice points: `axis:10,20,30` or `1,0,0;2,1,0`.
    #[arg(long, default_value = "axis:10,20,30")]
    pub points: String,
    /// Dirichlet vertices for `custom-finite`, e.g. `0;7`.
    #[arg(long)]
    pub dirichlet_at: Option<String>,
    /// Quadrature nodes per axis for the lattice Green function.
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Run a single identity.
    #[arg(long)]
    pub identity: Option<String>,
    /// Integrand for the coarea identity: constant[:c], inverse-t, power:a, log, null-cutoff:n.
    #[arg(long = "f")]
    pub integrand: Option<String>,
    /// Feed an edge list with one asymmetric pair to the graph constructor.
    #[arg(long)]
    pub inject_asymmetry: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
    pub balls: Vec<usize>,
    /// Multiplier of the weight on the annuli.
    #[arg(long, default_value_t = 1.2)]
    pub scale: f64,
    /// Multiplier of the weight everywhere else.
    #[arg(long, default_value_t = 1.0)]
    pub weight_scale: f64,
    #[arg(long, default_value_t = 10)]
    pub annulus_inner: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
    pub annulus_outer: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [4.0f64, 16.0, 256.0])]
    pub null_n: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 10000, 100000])]
    pub divergence_radii: Vec<usize>,
    /// Two-column CSV `vertex,w` to use instead of a constructed weight.
    #[arg(long)]
    pub weight_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    Dirichlet,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationName {
    Laplacian,
    RandomWalk,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GreenArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Defaults to `fourier` on lattices and `dirichlet` elsewhere.
    #[arg(long, value_enum)]
    pub method: Option<MethodName>,
    /// Defaults to `random-walk` for `fourier` and `laplacian` for `dirichlet`.
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationName>,
    #[arg(long)]
    pub pole: Option<String>,
    #[arg(long)]
    pub dirichlet_at: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub radius: usize,
    /// Report only these points, `;`-separated.
    #[arg(long, alias = "points")]
    pub point: Option<String>,
    #[arg(long, default_value_t = 128)]
    pub nodes: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CoareaArgs {
    /// Graph file (JSON); a seeded random graph if absent.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Two-column CSV `vertex,value`; a seeded random function if absent.
    #[arg(long)]
    pub function: Option<PathBuf>,
    #[arg(long = "f", default_value = "constant")]
    pub integrand: String,
    /// Emit the flux table `g(t)` instead of the summary.
    #[arg(long)]
    pub flux: bool,
}
