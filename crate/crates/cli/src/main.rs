use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlsv_core::experiment::{run, ExperimentConfig, ExperimentKind, REPORT_FILE};
use nlsv_core::Error;
use serde_json::json;

/// Experiment driver for the cubic NLS with a potential.
#[derive(Parser)]
#[command(name = "nlsv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Free Q by radial shooting, or the maximizer of W_V for an attractive potential.
    GroundState(RunArgs),
    /// ME, alpha and c_GN, and the verdict for the initial data if given.
    Thresholds(RunArgs),
    /// Evolve the initial data and record the time series.
    Evolve(RunArgs),
    /// Classify and evolve scaled ground states.
    DichotomyScan(RunArgs),
    /// Compare the virial identity against finite differences of z_R.
    VirialCheck(RunArgs),
    /// Fit the sup-norm decay exponent of a linear run.
    DispersiveCheck(RunArgs),
    /// Defocusing run with the beta constant and L4 monotonicity.
    DefocusingEvolve(RunArgs),
    /// Seeded random checks of the positivity, sandwich and splitting bounds.
    InequalityFuzz(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (replaces `output_dir` from the config).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Seed for randomized checks (replaces `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Replace a config value, e.g. `evolution.dt=5e-4`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::GroundState(a) => (ExperimentKind::GroundState, a),
            Command::Thresholds(a) => (ExperimentKind::Thresholds, a),
            Command::Evolve(a) => (ExperimentKind::Evolve, a),
            Command::DichotomyScan(a) => (ExperimentKind::DichotomyScan, a),
            Command::VirialCheck(a) => (ExperimentKind::VirialCheck, a),
            Command::DispersiveCheck(a) => (ExperimentKind::DispersiveCheck, a),
            Command::DefocusingEvolve(a) => (ExperimentKind::DefocusingEvolve, a),
            Command::InequalityFuzz(a) => (ExperimentKind::InequalityFuzz, a),
        }
    }
}

/// 2 configuration, 3 numerical abort, 4 IO.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Snapshot { .. } => 4,
        Error::Abort { .. }
        | Error::UnderResolved { .. }
        | Error::NotConverged { .. }
        | Error::NonFinite
        | Error::Quadrature(_)
        | Error::Bracket(_)
        | Error::NotCoercive(_) => 3,
        _ => 2,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidConfig(_) => "invalid_config",
        Error::InvalidGrid(_) => "invalid_grid",
        Error::GridMismatch { .. } => "grid_mismatch",
        Error::UnsupportedExponent(_) => "unsupported_exponent",
        Error::NonFinite => "non_finite",
        Error::Unsupported(_) => "unsupported",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::NonIntegrable(_) => "non_integrable",
        Error::Quadrature(_) => "quadrature",
        Error::NotCoercive(_) => "not_coercive",
        Error::Bracket(_) => "bracket",
        Error::SupremumNotAttained(_) => "supremum_not_attained",
        Error::NotAdmissible(_) => "not_admissible",
        Error::NotConverged { .. } => "not_converged",
        Error::MissingGroundState(_) => "missing_ground_state",
        Error::Abort { .. } => "abort",
        Error::UnderResolved { .. } => "under_resolved",
        Error::Window(_) => "window",
        Error::Snapshot { .. } => "snapshot",
        Error::Io { .. } => "io",
    }
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<PathBuf, Error> {
    let mut overrides = vec![format!("experiment=\"{}\"", kind.name())];
    if let Some(seed) = args.seed {
        overrides.push(format!("seed={seed}"));
    }
    overrides.extend(args.overrides);
    let mut cfg = ExperimentConfig::load(&args.config, &overrides)?;
    if let Some(out) = args.output {
        cfg.output_dir = out;
    }
    let out = run(&cfg)?;
    Ok(out.output_dir.join(REPORT_FILE))
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, args) {
        Ok(report) => {
            println!("{}", json!({ "status": "ok", "experiment": kind.name(), "report": report }));
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            let mut body = json!({
                "status": "error",
                "experiment": kind.name(),
                "kind": error_kind(&e),
                "exit_code": code,
                "message": e.to_string(),
            });
            if let Error::InvalidConfig(v) = &e {
                body["violations"] = json!(v);
            }
            eprintln!("{body}");
            ExitCode::from(code)
        }
    }
}
