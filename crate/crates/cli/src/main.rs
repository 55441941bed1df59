//! `kopt`: find improving k-opt moves, run local search, report exponents.
//!
//! Exit codes: 0 on success, 1 when `find-move` or `oracle` finds nothing
//! (no improving move, no negative triangle), 2 on errors.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "kopt", version, about = "k-opt move search by DP over tree decompositions")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "KOPT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Best (or first improving) k-move for a tour.
    FindMove(SearchArgs),
    /// Apply improving k-moves until none is left.
    LocalSearch {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long, default_value_t = 1000)]
        max_steps: usize,
        /// Write the final tour here.
        #[arg(long)]
        tour_out: Option<PathBuf>,
    },
    /// Running-time exponent c(k) and the optimal bucket exponent.
    Ck {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        per_pattern: bool,
        /// Allow k = 9, 10 (hours of computation).
        #[arg(long)]
        allow_large_k: bool,
    },
    /// Count or list valid connection patterns.
    Patterns {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        list: bool,
    },
    /// Generate instances.
    Gen(GenArgs),
    /// Brute-force reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Time dp against naive search; CSV on stdout.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Dp,
    Naive,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Best,
    First,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    k: usize,
    /// Bucket exponent `p/q`; defaults to the optimum for k.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Dp)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = PolicyArg::Best)]
    policy: PolicyArg,
    /// Instance file, JSON or TSPLIB.
    #[arg(long = "in")]
    input: PathBuf,
    /// Tour file (JSON, 1-based); the identity tour if omitted.
    #[arg(long)]
    tour: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Candidate limit for naive mode.
    #[arg(long, default_value_t = 100_000_000)]
    budget: u128,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenType {
    Random,
    NegTriangle,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long = "type", value_enum)]
    kind: GenType,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest absolute random weight.
    #[arg(long)]
    wmax: Option<i64>,
    /// Upper-triangle weights for neg-triangle, row by row.
    #[arg(long, allow_hyphen_values = true)]
    weights: Option<String>,
    /// Shift the reduction's weights to be nonnegative.
    #[arg(long)]
    nonnegative: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tour_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum OracleCommand {
    /// Exhaustive best k-move.
    BestMove {
        #[arg(long)]
        k: usize,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        tour: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000_000)]
        budget: u128,
    },
    /// Treewidth by the subset DP and by brute force.
    Treewidth {
        #[arg(long)]
        vertices: usize,
        /// Edges as `1-2,2-3` (1-based).
        #[arg(long, default_value = "")]
        edges: String,
    },
    /// Search a weighted complete graph for a negative triangle.
    NegTriangle {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        weights: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        wmax: i64,
    },
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "4")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "20,30,40")]
    n: Vec<usize>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, value_delimiter = ',', value_enum, default_values_t = [Mode::Dp, Mode::Naive])]
    modes: Vec<Mode>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match cli.command {
        Command::FindMove(a) => commands::find_move(&a),
        Command::LocalSearch { search, max_steps, tour_out } => {
            commands::local_search(&search, max_steps, tour_out.as_deref())
        }
        Command::Ck { k, per_pattern, allow_large_k } => commands::ck(k, per_pattern, allow_large_k),
        Command::Patterns { k, list } => commands::patterns(k, list),
        Command::Gen(a) => commands::gen(&a),
        Command::Oracle(OracleCommand::BestMove { k, input, tour, budget }) => {
            commands::oracle_best_move(k, &input, tour.as_deref(), budget)
        }
        Command::Oracle(OracleCommand::Treewidth { vertices, edges }) => commands::oracle_treewidth(vertices, &edges),
        Command::Oracle(OracleCommand::NegTriangle { n, weights, seed, wmax }) => {
            commands::oracle_neg_triangle(n, weights.as_deref(), seed, wmax)
        }
        Command::Bench(a) => commands::bench(&a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
