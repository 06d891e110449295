//! Experiment harness: seeded trials, measured quantities and CSV output.

pub mod config;
mod experiments;
pub mod gen;

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use config::{ExperimentConfig, PsiBranchChoice, Tolerances};
pub use gen::{generate_instance, trial_rng, InstanceKind};

/// Every experiment the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    PhiLsc,
    PsiLsc,
    Quadrilateral,
    ProjectionStability,
    HullContraction,
    Kirszbraun,
    TreeExtension,
    MidpointNonexp,
    ClampedHull,
    TransportSupnorm,
    TransportTree,
    ExternalHyperconvex,
    AlphaC,
    AlphaCChain,
    Continuity,
}

impl Experiment {
    pub const ALL: [Experiment; 15] = [
        Experiment::PhiLsc,
        Experiment::PsiLsc,
        Experiment::Quadrilateral,
        Experiment::ProjectionStability,
        Experiment::HullContraction,
        Experiment::Kirszbraun,
        Experiment::TreeExtension,
        Experiment::MidpointNonexp,
        Experiment::ClampedHull,
        Experiment::TransportSupnorm,
        Experiment::TransportTree,
        Experiment::ExternalHyperconvex,
        Experiment::AlphaC,
        Experiment::AlphaCChain,
        Experiment::Continuity,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Experiment::PhiLsc => "phi_lsc",
            Experiment::PsiLsc => "psi_lsc",
            Experiment::Quadrilateral => "lemma_41",
            Experiment::ProjectionStability => "lemma_42",
            Experiment::HullContraction => "lemma_43",
            Experiment::Kirszbraun => "kirszbraun",
            Experiment::TreeExtension => "tree_extension",
            Experiment::MidpointNonexp => "midpoint_nonexp",
            Experiment::ClampedHull => "clamped_hull",
            Experiment::TransportSupnorm => "transport_supnorm",
            Experiment::TransportTree => "transport_tree",
            Experiment::ExternalHyperconvex => "external_hyperconvex",
            Experiment::AlphaC => "alpha_c",
            Experiment::AlphaCChain => "alpha_c_chain",
            Experiment::Continuity => "continuity",
        }
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment tag {s:?}")))
    }
}

/// Acceptance bound attached to a measured quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    AtMost(f64),
    AtLeast(f64),
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub limit: Limit,
}

impl Quantity {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Quantity {
            name: name.into(),
            value,
            limit: Limit::AtMost(bound),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Quantity {
            name: name.into(),
            value,
            limit: Limit::AtLeast(bound),
        }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Quantity {
            name: name.into(),
            value,
            limit: Limit::Info,
        }
    }

    /// Distance to the bound on the passing side; negative when violated,
    /// NaN when the value is NaN.
    pub fn slack(&self) -> Option<f64> {
        match self.limit {
            Limit::AtMost(b) => Some(b - self.value),
            Limit::AtLeast(b) => Some(self.value - b),
            Limit::Info => None,
        }
    }

    pub fn passes(&self) -> bool {
        self.slack().is_none_or(|s| s >= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment: Experiment,
    pub trial: usize,
    pub digest: String,
    pub quantities: Vec<Quantity>,
    /// Set when the trial aborted; such a trial fails.
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn pass(&self) -> bool {
        self.error.is_none() && self.quantities.iter().all(Quantity::passes)
    }

    pub fn quantity(&self, name: &str) -> Option<&Quantity> {
        self.quantities.iter().find(|q| q.name == name)
    }
}

/// Aggregates over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub trials: usize,
    pub min_slack: f64,
    pub max_violation: f64,
    pub pass_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub records: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub fn summary(&self) -> Summary {
        let slacks = self
            .records
            .iter()
            .flat_map(|r| r.quantities.iter().filter_map(Quantity::slack));
        let (min_slack, max_violation) = slacks.fold((f64::INFINITY, 0.0f64), |(lo, hi), s| {
            let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
            (lo.min(s), hi.max(-s))
        });
        let passed = self.records.iter().filter(|r| r.pass()).count();
        Summary {
            trials: self.records.len(),
            min_slack,
            max_violation,
            pass_rate: passed as f64 / self.records.len().max(1) as f64,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.records.iter().all(TrialRecord::pass)
    }

    /// Long-format CSV, one quantity per row, rows in trial order, followed
    /// by the summary rows.
    pub fn to_csv(&self) -> String {
        let tag = self.experiment.tag();
        let mut out = String::from("experiment,trial,digest,quantity,value,pass\n");
        for r in &self.records {
            for q in &r.quantities {
                let _ = writeln!(out, "{tag},{},{},{},{},{}", r.trial, r.digest, q.name, q.value, q.passes());
            }
            if r.error.is_some() {
                let _ = writeln!(out, "{tag},{},{},error,NaN,false", r.trial, r.digest);
            }
        }
        let s = self.summary();
        let all = self.all_passed();
        for (name, value) in [
            ("trials", s.trials as f64),
            ("min_slack", s.min_slack),
            ("max_violation", s.max_violation),
            ("pass_rate", s.pass_rate),
        ] {
            let _ = writeln!(out, "{tag},summary,-,{name},{value},{all}");
        }
        out
    }
}

/// Thread count from `LIPEXT_THREADS`; unset or `0` means one per core.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var("LIPEXT_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("LIPEXT_THREADS must be a nonnegative integer, got {v:?}"))),
        _ => Ok(0),
    }
}

/// Runs every trial with the thread count from `LIPEXT_THREADS`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with_threads(config, threads_from_env()?)
}

/// Runs every trial on a pool of `threads` workers (`0` = one per core).
/// Output does not depend on the thread count.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let experiment: Experiment = config.experiment.parse()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let records = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| experiments::run_trial(experiment, config, trial))
            .collect()
    });
    Ok(ExperimentReport { experiment, records })
}
