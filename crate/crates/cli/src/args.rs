use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "thermistor",
    version,
    about = "Thermoviscoelastic Joule heating with P1 finite elements"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and dump the trajectory.
    Run(RunArgs),
    /// Convergence study against a reference run.
    Converge(StudyArgs),
    /// Run two schemes against one reference and tabulate error ratios.
    Compare(CompareArgs),
    /// Check the material data of a problem.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Joule heating of the unit square, `A = B = [[1,1,0],[1,1,0],[0,0,1]]`.
    P1,
    /// `p1` with the viscosity scaled by `--gamma`.
    P2,
    /// Manufactured heat-only problem.
    Heat,
    /// Manufactured elasticity-only problem.
    Elastic,
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::P1 => "p1",
            Preset::P2 => "p2",
            Preset::Heat => "heat",
            Preset::Elastic => "elastic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Semi,
    Ie,
}

impl From<SchemeArg> for thermistor_fem::Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Semi => thermistor_fem::Scheme::SemiImplicit,
            SchemeArg::Ie => thermistor_fem::Scheme::ImplicitEuler,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Bin,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Preset problem; takes precedence over values from --config.
    #[arg(long, value_enum)]
    pub problem: Option<Preset>,
    /// TOML file describing a custom problem.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Scale factor for the viscosity tensor.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Final time.
    #[arg(long = "t-final")]
    pub t_final: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative residual tolerance of the linear solver.
    #[arg(long = "solver-tol", default_value_t = thermistor_fem::sparse::DEFAULT_REL_TOL)]
    pub solver_tol: f64,
    /// Relative increment at which Picard iteration stops.
    #[arg(long = "picard-tol", default_value_t = 1e-8)]
    pub picard_tol: f64,
    #[arg(long = "picard-max-iter", default_value_t = 50)]
    pub picard_max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub nt: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::Semi)]
    pub scheme: SchemeArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep every `stride`-th snapshot.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long, value_enum, default_value_t = FormatArg::Bin)]
    pub format: FormatArg,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReferenceArgs {
    #[arg(long = "ref-scheme", value_enum)]
    pub ref_scheme: Option<SchemeArg>,
    #[arg(long = "ref-nx")]
    pub ref_nx: Option<usize>,
    #[arg(long = "ref-nt")]
    pub ref_nt: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Comma separated test resolutions.
    #[arg(long = "nx-list", value_delimiter = ',')]
    pub nx_list: Option<Vec<usize>>,
    /// `nx^2/2`, `nx^2/4` or a comma separated list of step counts.
    #[arg(long = "nt-rule")]
    pub nt_rule: Option<String>,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    /// Use the large study sizes instead of the quick defaults.
    #[arg(long)]
    pub full: bool,
    /// Worker threads for the test runs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Skip the SVG plots.
    #[arg(long = "no-plot")]
    pub no_plot: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = SchemeArg::Semi)]
    pub scheme: SchemeArg,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// The two schemes to compare; ratios are first / second.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [SchemeArg::Semi, SchemeArg::Ie])]
    pub schemes: Vec<SchemeArg>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Lower end of the sampled temperature range.
    #[arg(long = "theta-min", default_value_t = -1e6, allow_negative_numbers = true)]
    pub theta_min: f64,
    #[arg(long = "theta-max", default_value_t = 1e6)]
    pub theta_max: f64,
    #[arg(long, default_value_t = 20_001)]
    pub samples: usize,
}
