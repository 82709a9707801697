use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ldpc_sdp::workflow::{
    cmd_optimize_lambda, cmd_optimize_rho, cmd_sweep, cmd_threshold, cmd_verify, parse_distribution,
    OptimizeLambdaArgs, OptimizeRhoArgs, PartialSpec, RunReport, SweepArgs, ThresholdArgs, ThresholdMethod,
};

/// Exit code for malformed input of any kind.
const INPUT_ERROR: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "ldpc-sdp", version, about = "Design and check LDPC degree distributions for the erasure channel")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Shared {
    /// Interior-point tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Output format (default: json, csv for `sweep`).
    #[arg(long, global = true, value_enum)]
    output: Option<Format>,
    /// JSON file with any of `lambda`, `rho`, `epsilon`; inline flags override it.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Variable-node distribution, e.g. '{"2": 0.5, "3": 0.5}'.
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Check-node distribution, e.g. '{"6": 1.0}'.
    #[arg(long, global = true)]
    rho: Option<String>,
    /// Erasure probability.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Method {
    Sdp,
    Bisect,
    Both,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximise the rate over λ for a fixed ρ and ε.
    OptimizeLambda {
        #[arg(long)]
        max_var_degree: usize,
    },
    /// Maximise the rate over ρ for a fixed λ and ε.
    OptimizeRho {
        #[arg(long)]
        max_check_degree: usize,
    },
    /// Decoding threshold of (λ, ρ).
    Threshold {
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
    },
    /// Check a given (λ, ρ, ε).
    Verify,
    /// Discretised LP baseline over several grid sizes, plus the SDP reference row.
    Sweep {
        #[arg(long)]
        max_var_degree: usize,
        /// Comma-separated grid sizes; empty for the reference row only.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        grid_sizes: Vec<usize>,
    },
}

fn resolve_spec(shared: &Shared) -> Result<PartialSpec> {
    let base = match &shared.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("spec: cannot read {}", path.display()))?;
            PartialSpec::from_json(&text)?
        }
        None => PartialSpec::default(),
    };
    let inline = PartialSpec {
        lambda: shared.lambda.as_deref().map(|s| parse_distribution("lambda", s)).transpose()?,
        rho: shared.rho.as_deref().map(|s| parse_distribution("rho", s)).transpose()?,
        epsilon: shared.epsilon,
    };
    Ok(base.overlay(inline))
}

fn emit(report: &RunReport, format: Format) -> u8 {
    match format {
        Format::Json => println!("{}", report.to_json()),
        Format::Csv => print!("{}", report.to_csv()),
    }
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    let code = report.exit_code();
    eprintln!("{}: {:?} (exit {code})", report.command, report.status);
    code as u8
}

fn run(cli: Cli) -> Result<u8> {
    let spec = resolve_spec(&cli.shared)?;
    let tol = cli.shared.tol;
    let format = cli.shared.output;
    let report = match cli.command {
        Command::OptimizeLambda { max_var_degree } => cmd_optimize_lambda(&OptimizeLambdaArgs {
            rho: spec.require_rho()?,
            epsilon: spec.require_epsilon()?,
            max_var_degree,
            tol,
        })?,
        Command::OptimizeRho { max_check_degree } => cmd_optimize_rho(&OptimizeRhoArgs {
            lambda: spec.require_lambda()?,
            epsilon: spec.require_epsilon()?,
            max_check_degree,
            tol,
        })?,
        Command::Threshold { method } => cmd_threshold(&ThresholdArgs {
            lambda: spec.require_lambda()?,
            rho: spec.require_rho()?,
            method: match method {
                Method::Sdp => ThresholdMethod::Sdp,
                Method::Bisect => ThresholdMethod::Bisect,
                Method::Both => ThresholdMethod::Both,
            },
            tol,
        })?,
        Command::Verify => cmd_verify(&spec.require_full()?)?,
        Command::Sweep { max_var_degree, grid_sizes } => {
            let out = cmd_sweep(&SweepArgs {
                rho: spec.require_rho()?,
                epsilon: spec.require_epsilon()?,
                max_var_degree,
                grid_sizes,
                tol,
            })?;
            match format.unwrap_or(Format::Csv) {
                Format::Csv => print!("{}", out.csv),
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.rows)?),
            }
            let failed = out.rows.iter().filter(|r| r.status != ldpc_sdp::solver::SolveStatus::Optimal).count();
            eprintln!("sweep: {} of {} rows solved (exit {})", out.rows.len() - failed, out.rows.len(), out.exit_code);
            return Ok(out.exit_code as u8);
        }
    };
    Ok(emit(&report, format.unwrap_or(Format::Json)))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(INPUT_ERROR)
        }
    }
}
