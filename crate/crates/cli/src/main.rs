use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flipdyn::Error;

mod check;
mod lp;
mod sim;

#[derive(Parser)]
#[command(
    name = "flipdyn",
    version,
    about = "Flip dynamics for graph colorings: coupling LPs, exact checks and simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, solve or check the coupling linear programs.
    #[command(subcommand)]
    Lp(LpCommand),
    /// Monte Carlo runs of the variable-length coupling.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Write a member of the worst-case family in the graph text format.
    Construct {
        #[arg(long)]
        index: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact enumeration checks; exit 1 on failure.
    #[command(subcommand)]
    Check(CheckCommand),
}

#[derive(Subcommand)]
enum LpCommand {
    /// Export every row as exact JSON, or as CPLEX LP text with `--cplex`.
    Build {
        #[command(flatten)]
        lp: LpArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cplex: bool,
    },
    /// Solve exactly; `--float-check` also re-solves in floating point.
    Solve {
        #[command(flatten)]
        lp: LpArgs,
        #[arg(long)]
        float_check: bool,
        #[arg(long)]
        json: bool,
    },
    /// Slack of every row at a probability vector; exit 1 if any row is violated.
    Slack {
        #[command(flatten)]
        lp: LpArgs,
        #[arg(long, default_value = "alt")]
        vector: String,
        /// Value given to every λ variable.
        #[arg(long, default_value = "11/6")]
        lambda: String,
        #[arg(long)]
        json: bool,
    },
    /// The mixing-time bound `2⌈2βW/α⌉·⌈ln n/α⌉`.
    Bound {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value = "1833239/1000000")]
        lambda: String,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LpKind {
    Vigoda,
    Tight,
    Mixed,
}

#[derive(Args)]
struct LpArgs {
    /// A file written by `lp build`; overrides the other flags.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "vigoda")]
    kind: LpKind,
    #[arg(long, default_value_t = 7)]
    nmax: usize,
    #[arg(long, default_value_t = 3)]
    mstar: usize,
    #[arg(long, default_value = "25.597784")]
    gamma: String,
    #[arg(long)]
    cap3: bool,
    /// Charge only the `B = 7` / `A = 7` rows to `λ_bad`.
    #[arg(long)]
    seven_only: bool,
    /// Every ordering of the index pairs instead of sorted ones.
    #[arg(long)]
    full: bool,
    /// Tight program only: drop the `(6,3,(3,3),(1,1))` row.
    #[arg(long)]
    without_p6: bool,
}

#[derive(Subcommand)]
enum SimCommand {
    /// Replicas of the variable-length coupling.
    Couple(SimArgs),
    /// Stage walks from a pair in `Bad(c)`.
    Stages {
        #[command(flatten)]
        sim: SimArgs,
        /// Tracked color; defaults to the smallest `Bad` color.
        #[arg(long)]
        color: Option<usize>,
    },
    /// `E[N_bad]/E[N_good]` at `T_stop − 1` against `γ`.
    Gamma(SimArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Construction index; ignored with `--graph`.
    #[arg(long, default_value_t = 1)]
    index: usize,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Start pair in the graph text format (needs a `tau` line).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// `vigoda`, `alt`, `mixed` or a JSON file.
    #[arg(long, default_value = "mixed")]
    vector: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000)]
    replicas: u64,
    #[arg(long)]
    step_cap: Option<u64>,
    #[arg(long)]
    json: bool,
    /// Per-replica rows.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Both marginals of the greedy coupling against the chain, on every pair
    /// over all graphs with up to `n` vertices.
    Marginals {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// `vigoda`, `alt`, `mixed` or a JSON file; both paper vectors by default.
        #[arg(long)]
        vector: Option<String>,
    },
    /// Symmetry and uniform stationarity over all colorings of a tiny graph.
    Stationary {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "vigoda")]
        vector: String,
    },
    /// Tight rows of the coupling LP at `λ = 11/6` against the expected set.
    Observation {
        #[arg(long, default_value = "alt")]
        vector: String,
        #[arg(long, default_value_t = 6)]
        nmax: usize,
        #[arg(long)]
        json: bool,
    },
}

/// Whether the command's checks passed.
type Outcome = flipdyn::Result<bool>;

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Lp(cmd) => lp::run(cmd),
        Command::Sim(cmd) => sim::run(cmd),
        Command::Construct { index, d, k, out } => sim::construct(index, d, k, out),
        Command::Check(cmd) => check::run(cmd),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Input(_) | Error::Domain(_) | Error::Usage(_) => 2,
        Error::Capacity(_) => 3,
        Error::Invariant(_) | Error::Infeasible => 1,
    }
}

pub(crate) fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> Error {
    Error::Input(format!("{}: {e}", path.display()))
}

/// Writes `text` to `path`, or to standard output.
pub(crate) fn emit(path: Option<&std::path::Path>, text: &str) -> flipdyn::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("flipdyn: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
