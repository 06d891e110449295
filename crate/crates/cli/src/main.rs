//! `lipext`: generate instances, run experiments, validate instance files.
//!
//! Exit status: 0 on success, 1 when some trial fails or an instance is
//! invalid, 2 on usage, configuration or I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use lipext::instance::{check_instance, Instance};
use lipext::lab::{generate_instance, run_experiment, Experiment, ExperimentConfig, InstanceKind};

#[derive(Parser)]
#[command(name = "lipext", version, about = "Lipschitz extension experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the seeded instance of a config as JSON.
    Gen {
        /// euclidean, supnorm or tree
        kind: InstanceKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment and write its CSV.
    Run {
        /// Experiment tag, e.g. phi_lsc or kirszbraun.
        tag: Experiment,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV destination; falls back to `output` in the config, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate an instance file: metric axioms, values, Lipschitz constant.
    Check { instance: PathBuf },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::from_path(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Gen { kind, config, out } => {
            let config = load_config(config.as_deref())?;
            let inst = generate_instance(&config, kind)?;
            emit(out.as_deref(), &inst.to_json())?;
            Ok(true)
        }
        Command::Run { tag, config, out } => {
            let mut config = load_config(config.as_deref())?;
            config.experiment = tag.tag().to_string();
            let report = run_experiment(&config)?;
            let dest = out.or_else(|| config.output.clone());
            emit(dest.as_deref(), &report.to_csv())?;
            let s = report.summary();
            eprintln!(
                "{}: {} trials, pass rate {}, min slack {:e}, max violation {:e}",
                tag.tag(),
                s.trials,
                s.pass_rate,
                s.min_slack,
                s.max_violation
            );
            Ok(report.all_passed())
        }
        Command::Check { instance } => {
            let text = std::fs::read_to_string(&instance).with_context(|| format!("reading {}", instance.display()))?;
            let verdict = Instance::from_json(&text).and_then(|inst| check_instance(&inst));
            match verdict {
                Ok(r) => {
                    println!("ok: {} instance, |X| = {}, |A| = {}, Lip(f, A) = {}", r.kind, r.n, r.domain_size, r.lip);
                    Ok(true)
                }
                Err(e) => {
                    println!("invalid: {e}");
                    Ok(false)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
