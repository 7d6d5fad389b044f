use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qj_core::{Statistics, Suite};

#[derive(Debug, Parser)]
#[command(name = "qj", version, about = "Free energy of dilute positive-temperature jellium")]
pub struct Cli {
    /// Optional `key = value` file; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ideal free energy, exchange term and their sum at one state point.
    FreeEnergy(PointArgs),
    /// Tabulate the two-term expansion over a geometric density grid.
    Scan(ScanArgs),
    /// Run a seeded property suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Solve for the fugacity and chemical potential at given density.
    Fugacity(PointArgs),
    /// The exchange integral by both evaluation routes.
    Exchange(PointArgs),
    /// Tabulate the short- and long-range parts of the split Coulomb potential.
    Decompose(DecomposeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TextFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Particle statistics: fermi or bose.
    #[arg(long, value_parser = parse_stats)]
    pub stats: Option<Statistics>,
    /// Spin degeneracy.
    #[arg(long)]
    pub n: Option<u32>,
    /// Coupling constant.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<TextFormat>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Hold β fixed along the grid.
    #[arg(long, conflicts_with = "beta_rho23")]
    pub beta: Option<f64>,
    /// Hold βρ^{2/3} fixed along the grid.
    #[arg(long = "beta-rho23")]
    pub beta_rho23: Option<f64>,
    #[arg(long = "rho-min")]
    pub rho_min: Option<f64>,
    #[arg(long = "rho-max")]
    pub rho_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_parser = parse_suite, default_value = "all")]
    pub suite: Suite,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct DecomposeArgs {
    /// Splitting radius R.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Largest tabulated distance; defaults to 4R.
    #[arg(long = "s-max")]
    pub s_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_stats(s: &str) -> Result<Statistics, String> {
    s.parse().map_err(|e: qj_core::Error| e.to_string())
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: qj_core::Error| e.to_string())
}
