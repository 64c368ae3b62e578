use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod output;

/// Thermal quantum channels: maximum-entropy solves, channel measures, online
/// learning and n-copy typicality experiments.
#[derive(Debug, Parser)]
#[command(name = "thermal-channel", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the thermal channel of a constraint set.
    Maxent(MaxentArgs),
    /// Channel entropy min_φ S(B|R).
    Entropy(EntropyArgs),
    /// Reference-maximized relative entropy D(A‖B).
    Relent(RelentArgs),
    /// Diamond distance ½‖A − B‖⋄.
    Diamond(DiamondArgs),
    /// Online channel learning; writes a trace CSV.
    Learn(LearnArgs),
    /// Sharp-statistics tails of T^{⊗n}; writes a table CSV.
    Micro(MicroArgs),
    /// Re-check a solution file (constraints, CPTP, Gibbs form, duality, optimality).
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ConstraintSource {
    /// Constraint preset name (none, gibbs_output, strict_conservation, avg_energy, pauli).
    #[arg(long, conflicts_with = "constraints")]
    pub preset: Option<String>,
    /// Constraint file (JSON).
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Preset parameter KEY=VALUE; VALUE is read as JSON when it parses, else as a string.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Shortcut for --param H=<operator>.
    #[arg(long = "H", value_name = "OPERATOR")]
    pub h: Option<String>,
    /// Shortcut for --param q=<value>.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
}

#[derive(Debug, Args)]
pub struct MaxentArgs {
    #[command(flatten)]
    pub source: ConstraintSource,
    /// Seed of the outer reference-state search (required).
    #[arg(long)]
    pub seed: u64,
    /// Independent restarts of the outer search.
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    /// Constraint tolerance of the inner solve.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Solution file to write (JSON).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// Channel preset spec (e.g. `depolarizing:0.2`) or channel file.
    #[arg(long)]
    pub channel: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RelentArgs {
    /// First channel (preset spec or file).
    #[arg(long)]
    pub a: String,
    /// Second channel (preset spec or file).
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiamondArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Target channel (preset spec or file); qubit channels only.
    #[arg(long = "true", value_name = "CHANNEL")]
    pub target: String,
    /// Number of rounds T.
    #[arg(long)]
    pub iters: usize,
    /// Learning rate η ∈ (0, 1).
    #[arg(long, default_value_t = 0.15)]
    pub eta: f64,
    /// Shots per round.
    #[arg(long, default_value_t = 100, conflicts_with = "exact")]
    pub shots: u64,
    /// Use exact expectation values (no shot noise).
    #[arg(long)]
    pub exact: bool,
    #[arg(long)]
    pub seed: u64,
    /// Restarts of the reference-state maximization in each update.
    #[arg(long, default_value_t = 8)]
    pub restarts: usize,
    /// Fill the wall-clock `seconds` column (makes the output non-reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Trace CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MicroArgs {
    /// Solution file from `maxent`.
    #[arg(long)]
    pub thermal: PathBuf,
    /// Constraint preset to use instead of the constraints stored in the solution.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub nmin: usize,
    #[arg(long, default_value_t = 5)]
    pub nmax: usize,
    /// Regime exponent γ: η = c_min n^{−γ}, y = n^{−γ} (capped).
    #[arg(long, default_value_t = 0.05, conflicts_with = "eta")]
    pub gamma: f64,
    /// Window scale c_min (default: smallest constraint operator norm).
    #[arg(long)]
    pub c_min: Option<f64>,
    /// Fixed window half-width instead of the regime schedule.
    #[arg(long, requires = "y")]
    pub eta: Option<f64>,
    /// Fixed eigenvalue floor (with --eta).
    #[arg(long)]
    pub y: Option<f64>,
    /// References: `mixed` (maximally mixed) and/or `phi` (the solution's reference).
    #[arg(long, value_delimiter = ',', default_values_t = ["mixed".to_string(), "phi".to_string()])]
    pub sigma: Vec<String>,
    /// Table CSV to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Solution file from `maxent`.
    #[arg(long)]
    pub solution: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Maxent(a) => commands::maxent(&a),
        Command::Entropy(a) => commands::entropy(&a),
        Command::Relent(a) => commands::relent(&a),
        Command::Diamond(a) => commands::diamond(&a),
        Command::Learn(a) => commands::learn(&a),
        Command::Micro(a) => commands::micro(&a),
        Command::Verify(a) => commands::verify(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
