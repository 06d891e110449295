use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::euclid::solver::SolverOptions;

/// Which construction the `psi_lsc` experiment forces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PsiBranchChoice {
    Product,
    Patched,
    /// Even trials force the product construction, odd trials the patched one.
    #[default]
    Alternate,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub solver_tol: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let d = SolverOptions::default();
        Tolerances {
            solver_tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

/// One experiment run, read from TOML:
///
/// ```toml
/// experiment = "phi_lsc"
/// trials = 500
/// seed = 42
/// n = 3
/// m = 3
/// x_size = 10
/// a_size = 5
/// vary_sizes = true
/// eps = [0.1, 0.4]
///
/// [tolerance]
/// solver_tol = 1e-7
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub trials: usize,
    pub seed: u64,
    /// Source dimension.
    pub n: usize,
    /// Target dimension.
    pub m: usize,
    pub x_size: usize,
    pub a_size: usize,
    /// Treat `n`, `m`, `x_size`, `a_size` as upper bounds drawn per trial.
    pub vary_sizes: bool,
    pub eps: Vec<f64>,
    pub lip: f64,
    /// Size of the perturbations in the transport and operator experiments.
    pub perturbation: f64,
    pub tree_vertices: usize,
    pub psi_branch: PsiBranchChoice,
    pub tolerance: Tolerances,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: String::new(),
            trials: 100,
            seed: 0,
            n: 2,
            m: 2,
            x_size: 8,
            a_size: 4,
            vary_sizes: false,
            eps: vec![0.1, 0.4],
            lip: 1.0,
            perturbation: 0.25,
            tree_vertices: 8,
            psi_branch: PsiBranchChoice::default(),
            tolerance: Tolerances::default(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.n == 0 || self.m == 0 {
            return fail("dimensions n and m must be at least 1".into());
        }
        if self.a_size == 0 || self.a_size > self.x_size {
            return fail(format!(
                "need 1 <= a_size <= x_size, got a_size = {} and x_size = {}",
                self.a_size, self.x_size
            ));
        }
        if self.eps.is_empty() || self.eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return fail("eps must be a nonempty list of values in (0, 1)".into());
        }
        if !(self.lip > 0.0 && self.lip.is_finite()) {
            return fail(format!("lip must be positive, got {}", self.lip));
        }
        if !(self.perturbation >= 0.0 && self.perturbation.is_finite()) {
            return fail(format!("perturbation must be nonnegative, got {}", self.perturbation));
        }
        if self.tree_vertices < 2 {
            return fail("tree_vertices must be at least 2".into());
        }
        if !(self.tolerance.solver_tol > 0.0) || self.tolerance.max_iter == 0 {
            return fail("solver tolerance and iteration cap must be positive".into());
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tolerance.solver_tol,
            max_iter: self.tolerance.max_iter,
        }
    }
}
