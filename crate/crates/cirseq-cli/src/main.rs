//! Command-line front end.
//!
//! Exit codes: 0 on success/PASS, 1 on configuration or runtime error,
//! 2 when a bound verdict FAILed.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use cirseq_cli::config::{ConfigError, ExperimentConfig, Procedure, Resolved};
use cirseq_cli::{lab, report, runner};

#[derive(Parser)]
#[command(
    name = "cirseq",
    about = "Truncated sequential drift estimation for square-root diffusions: \
             simulation, guaranteed-accuracy experiments, bound verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// TOML experiment configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replicate count.
    #[arg(long)]
    replicates: Option<u64>,
    /// Override the simulation grid step.
    #[arg(long)]
    step: Option<f64>,
    /// Write the JSON report here (stdout otherwise).
    #[arg(long, value_name = "PATH")]
    out_json: Option<PathBuf>,
    /// Write the CSV table here (skipped otherwise).
    #[arg(long, value_name = "PATH")]
    out_csv: Option<PathBuf>,
    /// Emit per-stage diagnostics (two-step procedure) into the CSV.
    #[arg(long)]
    verbose_stages: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trajectory and write it as CSV (t, X, int_x, int_invx).
    Simulate(CommonOpts),
    /// Run the configured estimation procedure over seeded replicates.
    Estimate {
        #[command(flatten)]
        common: CommonOpts,
        /// Procedure override: b | a | 2d | mle-b | mle-a.
        #[arg(long)]
        procedure: Option<String>,
    },
    /// Monte Carlo verification of the concentration bounds.
    VerifyBounds(CommonOpts),
    /// Sequential procedure vs fixed-horizon MLE, side by side.
    Compare(CommonOpts),
    /// Evaluate and dump every bound constant for the config.
    DumpConstants(CommonOpts),
}

fn load(common: &CommonOpts, procedure: Option<&str>) -> Result<Resolved, ConfigError> {
    let mut cfg = ExperimentConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.replicates {
        cfg.replicates = n;
    }
    if let Some(step) = common.step {
        cfg.step = step;
    }
    if let Some(p) = procedure {
        cfg.procedure = match p {
            "b" => Procedure::B,
            "a" => Procedure::A,
            "2d" => Procedure::TwoDim,
            "mle-b" => Procedure::MleB,
            "mle-a" => Procedure::MleA,
            other => {
                return Err(ConfigError::Invalid(vec![format!(
                    "unknown procedure '{other}' (expected b | a | 2d | mle-b | mle-a)"
                )]))
            }
        };
    }
    cfg.resolve()
}

fn emit_json<T: serde::Serialize>(value: &T, out: &Option<PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => report::write_json(value, path)?,
        None => print!("{}", report::to_json(value)),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    let code = match cli.command {
        Command::Simulate(common) => {
            let res = load(&common, None)?;
            let rows = runner::simulate_rows(&res)?;
            let path = common
                .out_csv
                .clone()
                .unwrap_or_else(|| PathBuf::from("path.csv"));
            report::write_csv(&path, &["t", "x", "int_x", "int_invx"], &rows)?;
            eprintln!("wrote {} nodes to {}", rows.len(), path.display());
            ExitCode::SUCCESS
        }
        Command::Estimate { common, procedure } => {
            let res = load(&common, procedure.as_deref())?;
            let (rep, rows) = runner::run_experiment_with_rows(&res)?;
            report::print_verdicts(std::io::stderr(), &rep.verdicts)?;
            emit_json(&rep, &common.out_json)?;
            if let Some(csv) = &common.out_csv {
                if common.verbose_stages && res.cfg.procedure == Procedure::TwoDim {
                    let stage_rows = runner::stage_rows(&res)?;
                    report::write_csv(
                        csv,
                        &[
                            "n",
                            "kappa",
                            "t_stop",
                            "weight_sq",
                            "estimate_a",
                            "estimate_b",
                        ],
                        &stage_rows,
                    )?;
                } else {
                    report::write_csv(csv, &runner::REPLICATE_COLUMNS, &rows)?;
                }
            }
            if rep.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::VerifyBounds(common) => {
            let res = load(&common, None)?;
            let (bundle, sample) = lab::verify_bounds(&res)?;
            report::print_verdicts(std::io::stderr(), &lab::bundle_verdicts(&bundle))?;
            emit_json(&bundle, &common.out_json)?;
            if let Some(csv) = &common.out_csv {
                report::write_csv(
                    csv,
                    &["replicate", "t_horizon", "deviation_d", "deviation_delta"],
                    &lab::deviation_rows(&sample),
                )?;
            }
            if bundle.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Compare(common) => {
            let res = load(&common, None)?;
            let cmp = runner::compare_sequential_vs_fixed(&res)?;
            emit_json(&cmp, &common.out_json)?;
            if let Some(csv) = &common.out_csv {
                let rows = vec![vec![
                    cmp.fixed_mle_mse.estimate,
                    cmp.sequential_mse.estimate,
                    cmp.mean_sequential_stop.estimate,
                    cmp.t_horizon,
                    cmp.normalized_risk_sequential,
                    cmp.normalized_risk_fixed,
                ]];
                report::write_csv(
                    csv,
                    &[
                        "fixed_mle_mse",
                        "sequential_mse",
                        "mean_stop",
                        "t_horizon",
                        "normalized_risk_sequential",
                        "normalized_risk_fixed",
                    ],
                    &rows,
                )?;
            }
            ExitCode::SUCCESS
        }
        Command::DumpConstants(common) => {
            let res = load(&common, None)?;
            let dump = runner::dump_constants(&res)?;
            emit_json(&dump, &common.out_json)?;
            ExitCode::SUCCESS
        }
    };
    eprintln!("elapsed: {:.3}s", started.elapsed().as_secs_f64());
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
