//! `nonloc`: reproduce worked examples, evaluate scenario files, print bound
//! tables, optimize settings and evaluate witnesses.
//!
//! Exit status: 0 success, 2 a check failed its tolerance, 3 input error,
//! 4 internal error.

mod commands;
mod report;
mod reproduce;
mod scenario;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Parser)]
#[command(name = "nonloc", version, about = "Post-selected Bell nonlocality toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// RNG seed for optimizer restarts and sampling.
    #[arg(long, global = true, env = "NONLOC_SEED")]
    seed: Option<u64>,
    /// Worker threads for optimizer restarts; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Absolute tolerance for exact checks. Search results use max(tol, 1e-6).
    #[arg(long, global = true, default_value_t = nonloc::TOL)]
    tol: f64,
    /// Write the record here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Recompute a worked example: ex1, ex2-grid, ex3, ex4(n), s1, s2-surface,
    /// s3, s4(n), e-facet-state, visibility.
    Reproduce {
        target: String,
        /// Size for ex4 and s4.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Chained value of a scenario file.
    Eval { file: PathBuf },
    /// Bound table with oracle columns.
    Bounds {
        #[arg(value_enum)]
        family: BoundsFamily,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Maximize a functional over measurement settings.
    Optimize { file: PathBuf },
    /// Stabilizer witness, its lift, or a biseparable sample batch.
    Witness { file: PathBuf },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundsFamily {
    Delta3,
    Svetlichny,
    ChainNetwork,
}

pub struct Context {
    pub seed: u64,
    pub jobs: usize,
    pub tol: f64,
}

/// Bad arguments or file contents.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

#[derive(Debug)]
struct LibError(nonloc::Error);

impl fmt::Display for LibError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for LibError {}

pub fn lib_error(e: nonloc::Error) -> anyhow::Error {
    LibError(e).into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InputError>().is_some() {
        return 3;
    }
    match e.downcast_ref::<LibError>() {
        Some(LibError(nonloc::Error::Lp(_))) | None => 4,
        Some(_) => 3,
    }
}

fn error_json(e: &anyhow::Error) -> serde_json::Value {
    let kind = if exit_code(e) == 3 { "input" } else { "internal" };
    let mut v = json!({ "error": { "kind": kind, "message": format!("{e:#}") } });
    if let Some(LibError(nonloc::Error::ZeroProbabilityRound { round, party })) = e.downcast_ref() {
        v["error"]["round"] = json!(round);
        v["error"]["party"] = json!(party);
    }
    v
}

fn run(cli: &Cli) -> anyhow::Result<report::Report> {
    if !(cli.tol.is_finite() && cli.tol >= 0.0) {
        anyhow::bail!(InputError(format!("--tol must be a nonnegative number, got {}", cli.tol)));
    }
    let ctx = Context { seed: cli.seed.unwrap_or(DEFAULT_SEED), jobs: cli.jobs, tol: cli.tol };
    match &cli.command {
        Command::Reproduce { target, n } => reproduce::run(&ctx, target, *n),
        Command::Eval { file } => commands::eval(&ctx, file),
        Command::Bounds { family, n, k } => commands::bounds(&ctx, *family, *n, *k),
        Command::Optimize { file } => commands::optimize(&ctx, file),
        Command::Witness { file } => commands::witness(&ctx, file),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(r) => {
            if let Err(e) = r.write(cli.format, cli.out.as_deref()) {
                eprintln!("{}", json!({ "error": { "kind": "internal", "message": e.to_string() } }));
                return ExitCode::from(4);
            }
            if r.passed() {
                ExitCode::SUCCESS
            } else {
                for c in r.checks.iter().filter(|c| !c.pass) {
                    eprintln!("FAIL {}: computed {} expected {} (tol {})", c.name, c.computed, c.expected, c.tolerance);
                }
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
