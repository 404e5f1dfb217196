mod commands;
mod load;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "noise", version, about = "Finite noise Boolean algebras from the command line")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct GlobalArgs {
    /// Scenario JSON file.
    #[arg(long, global = true, conflicts_with = "gen")]
    pub scenario: Option<PathBuf>,
    /// Built-in generator: signs, nonclassical, tweaked, voter, split-words, counterexample.
    #[arg(long, global = true)]
    pub gen: Option<String>,
    /// Generator parameter as key=value; repeatable.
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Shorthand for --param m=<M>.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Shorthand for --param depth=<DEPTH>.
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Shorthand for --param n=<N>.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Numerical tolerance, in (0, 1e-3).
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the scenario as JSON.
    Scenario,
    /// Check the axioms and the invariant suites on a scenario.
    Verify,
    /// Spectral measure of a random variable.
    Spectral(commands::RvArgs),
    /// Chaos decomposition of a random variable.
    Chaos(commands::RvArgs),
    /// Influences and the first-chaos functionals.
    Influence(commands::RvArgs),
    /// Decay curve t -> <f, U_t f>.
    Semigroup(commands::SemigroupArgs),
    /// Exact (or sampled) self-joining correlation.
    Joining(commands::JoiningArgs),
    /// Bonferroni-type operator inequalities.
    Bonferroni(commands::BonferroniArgs),
    /// Binomial dominance and the averaging step.
    Dominance(commands::DominanceArgs),
    /// Exploration of spectral points along a nested chain.
    Explore(commands::ExploreArgs),
}

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Exit 1; the payload is printed on stdout.
    Invariant(String),
    /// Exit 2.
    Load(String),
    /// Exit 3.
    Compute(String),
}

impl From<noise_core::Error> for Failure {
    fn from(e: noise_core::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let g = &cli.global;
    if !(g.tol > 0.0 && g.tol < 1e-3) {
        return Err(Failure::Load(format!("tolerance {} outside (0, 1e-3)", g.tol)));
    }
    match &cli.command {
        Command::Scenario => commands::scenario(g),
        Command::Verify => commands::verify(g),
        Command::Spectral(a) => commands::spectral(g, a),
        Command::Chaos(a) => commands::chaos(g, a),
        Command::Influence(a) => commands::influence(g, a),
        Command::Semigroup(a) => commands::semigroup(g, a),
        Command::Joining(a) => commands::joining(g, a),
        Command::Bonferroni(a) => commands::bonferroni(g, a),
        Command::Dominance(a) => commands::dominance(g, a),
        Command::Explore(a) => commands::explore(g, a),
    }
}

fn emit(g: &GlobalArgs, text: &str) -> Result<(), Failure> {
    match &g.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Compute(format!("{}: {e}", path.display()))),
        None => {
            write_stdout(text);
            Ok(())
        }
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn write_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let global = cli.global.clone();
    let result = run(cli).and_then(|text| emit(&global, &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(report)) => {
            write_stdout(&format!("{report}\n"));
            ExitCode::from(1)
        }
        Err(Failure::Load(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
