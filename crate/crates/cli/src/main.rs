//! `gic-tin`: rate regions of the two-user Gaussian interference channel with
//! interference treated as noise.

mod channel_file;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "gic-tin", version, about = "Rate regions of the two-user interference channel under TIN decoding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Trace a region boundary over a beta grid and write it as CSV.
    Region(RegionArgs),
    /// Run the verification suites and print a report.
    Verify(VerifyArgs),
    /// Solve one time-sharing boundary point and write the solution as JSON.
    Solve(SolveArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Channel description (JSON).
    #[arg(long)]
    pub channel: PathBuf,
    /// Power budget of user 1.
    #[arg(long, default_value_t = 10.0)]
    pub p1: f64,
    /// Power budget of user 2.
    #[arg(long, default_value_t = 10.0)]
    pub p2: f64,
    /// Stopping gap of the cutting-plane loop (bits).
    #[arg(long = "eps-cp", default_value_t = 1e-4)]
    pub eps_cp: f64,
    /// Optimality gap of the inner branch-and-bound.
    #[arg(long = "eps-bnb", default_value_t = 1e-6)]
    pub eps_bnb: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodArg {
    PureProper,
    HullProper,
    TsProper,
    PureImproperSamples,
    HullImproper,
}

#[derive(Args, Debug)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Number of evenly spaced beta values from 1 to 0.
    #[arg(long, default_value_t = 101)]
    pub betas: usize,
    /// Evaluate this single beta instead of a grid.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Output CSV file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed of the improper random sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Lemma1,
    Theorem1,
    Duality,
    Nesting,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
    /// Random trials per sampling suite (default 100000 for lemma1, 1000 for theorem1).
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Beta grid size of the sweeps used by theorem1, duality and nesting.
    #[arg(long, default_value_t = 101)]
    pub betas: usize,
    /// Replace every coefficient by its modulus before verifying.
    #[arg(long)]
    pub enhance: bool,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub beta: f64,
    /// Output JSON file (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Region(args) => commands::region(&args),
        Command::Verify(args) => commands::verify(&args),
        Command::Solve(args) => commands::solve(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("gic-tin: {}", e.message);
            e.code.into()
        }
    }
}
