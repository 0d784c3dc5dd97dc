use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use bcrb_cli::acceptance::{run_acceptance, AcceptOptions, Injection};
use bcrb_cli::config::{run_scenario, RunOptions};
use bcrb_cli::output::write_json;
use bcrb_cli::sweep::{run_sweep, write_sweep, SweepKind, SweepParams};
use bcrb_cli::{init_threads, CliError, EXIT_CHECK_FAILED};

/// Bayesian Cramér–Rao and mutual-information bounds for log-concave priors.
///
/// Worker threads: set BCRB_THREADS.
#[derive(Parser)]
#[command(name = "bcrb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct Common {
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Seed for Monte Carlo and randomized checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Quadrature nodes per axis.
    #[arg(long, global = true)]
    quad_nodes: Option<usize>,
    /// Write JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write CSV.
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every bound and oracle for one or more scenario files.
    Report {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Export a parameter sweep as CSV.
    Sweep {
        /// g-delta, bound-vs-jp, reverse-epi-k or snr-curve.
        kind: String,
        /// Prior preset: gaussian, laplace, laplace-unit-variance, exponential, quartic, uniform.
        #[arg(long)]
        prior: Option<String>,
        /// Lower end of the swept parameter.
        #[arg(long)]
        from: Option<f64>,
        /// Upper end of the swept parameter.
        #[arg(long)]
        to: Option<f64>,
        /// Number of log-spaced points.
        #[arg(long)]
        points: Option<usize>,
        /// KP for bound-vs-jp.
        #[arg(long)]
        kp: Option<f64>,
        /// Largest k for reverse-epi-k.
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite.
    Accept {
        /// Deliberately break a component to check that the suite fails.
        #[arg(long, hide = true, value_parser = ["flip-phi-branch"])]
        inject: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn report(configs: &[PathBuf], c: &Common) -> i32 {
    let opts = RunOptions {
        out_dir: c.out_dir.clone(),
        seed: c.seed,
        quad_nodes: c.quad_nodes,
        json: c.json,
        csv: c.csv,
    };
    let codes: Vec<i32> = configs
        .par_iter()
        .map(|path| match run_scenario(path, &opts) {
            Ok(out) => {
                for check in out.report.failed_checks() {
                    eprintln!("{}: FAILED {}: {} < {}", out.report.name, check.name, check.lhs, check.rhs);
                }
                for e in &out.report.errors {
                    eprintln!("{}: {} ({}): {}", out.report.name, e.component, e.kind, e.message);
                }
                for p in &out.written {
                    println!("{}", p.display());
                }
                out.exit_code()
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        })
        .collect();
    codes.into_iter().max().unwrap_or(0)
}

fn sweep(kind: &str, params: SweepParams, prior: Option<String>, c: &Common) -> Result<i32, CliError> {
    let kind: SweepKind = kind.parse()?;
    let params = SweepParams { prior: prior.map(|p| p.parse()).transpose()?, quad_nodes: c.quad_nodes, ..params };
    let table = run_sweep(kind, &params)?;
    let dir = c.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    for p in write_sweep(&table, &dir, c.json, c.csv)? {
        println!("{}", p.display());
    }
    for n in &table.notes {
        eprintln!("{kind}: {n}");
    }
    Ok(if table.passed { 0 } else { EXIT_CHECK_FAILED })
}

fn accept(inject: Option<String>, c: &Common) -> Result<i32, CliError> {
    let opts = AcceptOptions {
        seed: c.seed,
        quad_nodes: c.quad_nodes,
        inject: inject.map(|_| Injection::FlipPhiBranch),
    };
    let (summary, times) = run_acceptance(&opts)?;
    for (line, (_, t)) in summary.lines().iter().zip(&times) {
        println!("{line} ({:.2} s)", t.as_secs_f64());
    }
    if c.json || c.out_dir.is_some() {
        let dir = c.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let p = dir.join("acceptance.json");
        write_json(&p, &summary)?;
        println!("{}", p.display());
    }
    Ok(if summary.passed { 0 } else { EXIT_CHECK_FAILED })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let result = match cli.command {
        Command::Report { configs, common } => Ok(report(&configs, &common)),
        Command::Sweep { kind, prior, from, to, points, kp, k_max, common } => {
            let params = SweepParams { from, to, points, kp, k_max, ..Default::default() };
            sweep(&kind, params, prior, &common)
        }
        Command::Accept { inject, common } => accept(inject, &common),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
