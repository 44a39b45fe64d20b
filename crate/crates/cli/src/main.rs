//! `friedrichs`: run least-squares Friedrichs experiments from a flat config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use friedrichs::config::{load_config, RunConfig};
use friedrichs::experiments as ex;
use friedrichs::{Error, ErrorKind};

/// Illposed-study thresholds: ratio decay and envelope spread.
const MAX_DECAY: f64 = 0.3;
const MAX_ENVELOPE_SPREAD: f64 = 3.0;

#[derive(Parser)]
#[command(
    name = "friedrichs",
    version,
    about = "Least-squares solvers and inf-sup certification for Friedrichs systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config `output` key, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write a JSON summary.
    Solve(Common),
    /// Error table over successively doubled meshes.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Discrete inf-sup constants over successively doubled meshes.
    Infsup {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Sup-ratios of the unstabilized advection form on oscillating modes.
    Illposed {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        nmax: usize,
    },
    /// Identity suite and stability bound for the configured problem.
    Verify(Common),
    /// Boundary multiplier and fractional-norm checks.
    Fracnorm(Common),
}

/// Outcome of a successful run: text to emit and whether all checks held.
struct Report {
    text: String,
    passed: bool,
}

fn run(command: &Command) -> Result<(Report, &Common), Error> {
    let (common, report) = match command {
        Command::Solve(c) => {
            let s = ex::run_solve(&load(c)?)?;
            (
                c,
                Report {
                    passed: s.stability_ok,
                    text: s.to_json(),
                },
            )
        }
        Command::Convergence { common, levels } => {
            let rows = ex::run_convergence(&load(common)?, *levels)?;
            (
                common,
                Report {
                    passed: true,
                    text: ex::convergence_csv(&rows),
                },
            )
        }
        Command::Infsup { common, levels } => {
            let rows = ex::run_infsup(&load(common)?, *levels)?;
            (
                common,
                Report {
                    passed: rows.iter().all(|r| r.pass),
                    text: ex::infsup_csv(&rows),
                },
            )
        }
        Command::Illposed { common, nmax } => {
            let rows = ex::run_illposed(&load(common)?, *nmax)?;
            let (spread, decay) = ex::illposed_summary(&rows);
            let passed = spread <= MAX_ENVELOPE_SPREAD && (*nmax < 8 || decay <= MAX_DECAY);
            (
                common,
                Report {
                    passed,
                    text: ex::illposed_csv(&rows),
                },
            )
        }
        Command::Verify(c) => {
            let r = ex::run_verify(&load(c)?)?;
            (
                c,
                Report {
                    passed: r.iter().all(|c| c.passed),
                    text: ex::checks_csv(&r),
                },
            )
        }
        Command::Fracnorm(c) => {
            let r = ex::run_fracnorm(&load(c)?)?;
            (
                c,
                Report {
                    passed: r.iter().all(|c| c.passed),
                    text: ex::checks_csv(&r),
                },
            )
        }
    };
    Ok((report, common))
}

fn load(c: &Common) -> Result<RunConfig, Error> {
    load_config(&c.config)
}

fn output_path(c: &Common) -> Option<PathBuf> {
    c.out
        .clone()
        .or_else(|| load_config(&c.config).ok().and_then(|cfg| cfg.output))
}

fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config | ErrorKind::Io => 2,
        ErrorKind::Numeric => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((report, common)) => {
            if let Err(e) = emit(output_path(common).as_deref(), &report.text) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(2);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("one or more checks failed");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
