use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use fracbranch::solver::{estimate_profile, SolverOptions};
use fracbranch_cli::config::{Format, RunConfig};
use fracbranch_cli::output::{render, write_atomically, Metadata, Row};
use fracbranch_cli::suites::{self, Suite, SuiteOptions};

const VALIDATION_FAILURE: u8 = 1;
const RUNTIME_FAILURE: u8 = 2;

/// Monte Carlo solver for semilinear fractional elliptic problems on balls.
#[derive(Debug, Parser)]
#[command(name = "fracbranch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the solution at the configured points and write a table.
    Solve(SolveArgs),
    /// Run a statistical check of the samplers or kernels.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output.path`. Without either, the table goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Samples per point; overrides `samples`.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Draws per check (random pairs for the kernel suite).
    #[arg(long)]
    samples: Option<u64>,
    /// Observation step of the exit-law suite.
    #[arg(long)]
    step_h: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn solve(args: SolveArgs) -> ExitCode {
    let mut config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION_FAILURE);
        }
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if let Some(samples) = args.samples {
        config.samples = samples;
    }
    if let Some(format) = args.format {
        config.output.format = format;
    }
    if let Some(out) = args.out {
        config.output.path = Some(out);
    }
    let run = match config.prepare() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION_FAILURE);
        }
    };
    let cfg = &run.config;
    let start = Instant::now();
    let options = SolverOptions::with_workers(cfg.workers);
    let profile = match estimate_profile(&run.model, &run.points, cfg.root_mark, cfg.samples, cfg.seed, &options) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(RUNTIME_FAILURE);
        }
    };
    let rows: Vec<Row> = profile.iter().map(Row::from).collect();
    let metadata = Metadata::new(cfg.clone(), start.elapsed().as_secs_f64());
    let written = render(cfg.output.format, &metadata, &rows).and_then(|bytes| match &cfg.output.path {
        Some(path) => write_atomically(path, &bytes),
        None => std::io::stdout().lock().write_all(&bytes),
    });
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(RUNTIME_FAILURE);
    }
    if let Some(path) = &cfg.output.path {
        eprintln!("wrote {} rows to {} in {:.1}s", rows.len(), path.display(), metadata.wall_time);
    }
    ExitCode::SUCCESS
}

fn validate(args: ValidateArgs) -> ExitCode {
    let opts = SuiteOptions { alpha: args.alpha, dim: args.dim, samples: args.samples, step_h: args.step_h, seed: args.seed };
    let checks = match suites::run(args.suite, &opts) {
        Ok(c) => c,
        Err(e @ fracbranch::Error::InvalidParameter { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(VALIDATION_FAILURE);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(RUNTIME_FAILURE);
        }
    };
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        ExitCode::from(VALIDATION_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(VALIDATION_FAILURE) } else { ExitCode::SUCCESS };
        }
    };
    match cli.command {
        Command::Solve(args) => solve(args),
        Command::Validate(args) => validate(args),
    }
}
