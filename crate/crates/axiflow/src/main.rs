use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use axiflow::harness::{
    output, run_convergence_study, run_simulation, verify_suite, ConvergenceStudy,
    ExperimentConfig, VerifyTag,
};

/// Finite element evolution of axisymmetric surfaces under curvature flows.
#[derive(Parser)]
#[command(name = "axiflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write curve snapshots every n steps (overrides the config).
    #[arg(long)]
    snapshot_every: Option<usize>,
    /// Dump the first assembled step system in triplet text form.
    #[arg(long)]
    dump_matrices: bool,
    /// Accepted for interface stability; simulations are deterministic and
    /// the seed is only meaningful to randomized property tests.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a convergence study (config holds `base` and `j_values`).
    Converge {
        config: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a canned verification suite: stability, equidistribution,
    /// conservation, convergence, or assumptions.
    Verify { tag: String },
}

fn load<T: serde::de::DeserializeOwned>(path: &PathBuf) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn apply_common(config: &mut ExperimentConfig, common: &CommonOpts) {
    if let Some(every) = common.snapshot_every {
        config.output.snapshot_every = Some(every);
    }
    if common.dump_matrices {
        config.output.dump_matrices = true;
    }
    if common.seed.is_some() {
        eprintln!("note: --seed has no effect on simulations (they are deterministic)");
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, common } => {
            let mut config: ExperimentConfig = load(&config)?;
            apply_common(&mut config, &common);
            let svg = config.output.svg;
            let outcome = run_simulation(&config)?;
            output::emit_outputs(&outcome, &common.out, svg)?;
            println!(
                "status {:?} after {} steps (t = {:.6}); outputs in {}",
                outcome.status,
                outcome.steps,
                outcome.stop_time,
                common.out.display()
            );
            if !outcome.detail.is_empty() {
                println!("  {}", outcome.detail);
            }
            if outcome.guard_warnings > 0 {
                println!(
                    "  warning: time-step guard fired on {} steps",
                    outcome.guard_warnings
                );
            }
            if let Some(t) = outcome.first_oscillation {
                println!("  warning: curvature oscillation detected at t = {t:.6}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Converge { config, common } => {
            let mut study: ConvergenceStudy = load(&config)?;
            apply_common(&mut study.base, &common);
            let report = run_convergence_study(&study)?;
            output::emit_convergence(&report, &common.out)?;
            print!("{}", output::convergence_csv(&report));
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { tag } => {
            let tag = VerifyTag::parse(&tag)
                .with_context(|| format!("unknown verify tag {tag:?} (expected one of: stability, equidistribution, conservation, convergence, assumptions)"))?;
            let report = verify_suite(tag)?;
            print!("{}", report.render());
            Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
