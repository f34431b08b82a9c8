use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use gencov::cli::{ce_report, run_suite, RunConfig, CHECKS};
use gencov::Error;

/// Exact CE cohomology and numerical covariance checks on periodic meshes.
#[derive(Parser)]
#[command(name = "gencov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks selected in the config and write JSON/CSV reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides GENCOV_OUT and the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: number of cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Tangent complexes and CE cohomology of the built-in actions.
    Ce {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available checks with their anchors.
    List,
}

const CONFIG_ERROR: u8 = 2;
const CHECK_FAILURE: u8 = 1;

fn output_dir(flag: Option<PathBuf>, configured: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("GENCOV_OUT").map(PathBuf::from))
        .or(configured)
        .unwrap_or_else(|| PathBuf::from("gencov-out"))
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if matches!(e, Error::Config(_)) { CONFIG_ERROR } else { CHECK_FAILURE })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { CONFIG_ERROR } else { 0 });
        }
    };
    match cli.command {
        Command::List => {
            for c in CHECKS {
                println!("{:<26} {}", c.name, c.anchor);
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, jobs } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let dir = output_dir(out, cfg.run.output.clone());
            let start = Instant::now();
            match run_suite(&cfg, &dir, jobs) {
                Ok(summary) => {
                    for e in &summary.checks {
                        let seed = e.seed.map(|s| format!(" seed {s}")).unwrap_or_default();
                        let order = e.order.map(|o| format!(" order {o:.3}")).unwrap_or_default();
                        println!(
                            "{} {}{}{} finest {:.3e}",
                            if e.passed { "PASS" } else { "FAIL" },
                            e.report,
                            seed,
                            order,
                            e.finest_relative
                        );
                    }
                    println!(
                        "{}/{} passed in {:.1}s; reports in {}",
                        summary.passed,
                        summary.total,
                        start.elapsed().as_secs_f64(),
                        dir.display()
                    );
                    if summary.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(CHECK_FAILURE)
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Ce { config, out } => {
            let cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let dir = output_dir(out, cfg.ce.output.clone().or(cfg.run.output.clone()));
            match ce_report(&cfg, &dir) {
                Ok(path) => {
                    println!("wrote {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
