//! Sequential Kirszbraun extension into `R^m`.
//!
//! Points outside the domain are assigned one at a time. Each new value solves
//! the minimax problem over balls centered at every value assigned so far, with
//! radii `L * d(x, .)`. When the map built so far is `L`-Lipschitz the balls
//! have a common point, so every step ends with a nonpositive residual up to
//! solver accuracy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::euclid::solver::{solve_minimax, BallConstraint, SolverOptions};
use crate::metric::{lip_constant, Euclidean, ExtensionResult, FiniteMetricSpace, PartialMap, LIP_REL_TOL};

/// Euclidean source points, a domain and values in `R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclideanInstance {
    pub source_points: Vec<Vec<f64>>,
    pub domain: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl EuclideanInstance {
    pub fn new(source_points: Vec<Vec<f64>>, domain: Vec<usize>, values: Vec<Vec<f64>>) -> Result<Self> {
        let inst = EuclideanInstance {
            source_points,
            domain,
            values,
        };
        inst.to_map()?;
        Ok(inst)
    }

    pub fn source_dim(&self) -> usize {
        self.source_points.first().map_or(0, Vec::len)
    }

    pub fn target_dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn to_map(&self) -> Result<PartialMap<Euclidean>> {
        if self.source_dim() == 0 || self.target_dim() == 0 {
            return Err(Error::InvalidPoint(
                "source and target dimensions must be at least 1".into(),
            ));
        }
        let space = Arc::new(FiniteMetricSpace::from_points(&self.source_points)?);
        PartialMap::new(
            space,
            Euclidean {
                dim: self.target_dim(),
            },
            self.domain.clone(),
            self.values.clone(),
        )
    }
}

/// Checks that `order` lists exactly the indices of `expected` (any order).
pub(crate) fn check_order(order: &[usize], expected: &[usize], n: usize) -> Result<()> {
    let mut want = vec![false; n];
    for &i in expected {
        want[i] = true;
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || !want[i] || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidDomain(format!(
                "order entry {i} is not an unassigned source index or is repeated"
            )));
        }
    }
    if order.len() != expected.len() {
        return Err(Error::InvalidDomain(format!(
            "order has {} entries, expected {}",
            order.len(),
            expected.len()
        )));
    }
    Ok(())
}

/// Fills the `None` slots of `known` in the given order, each as the minimax
/// point of the balls around all filled slots. `dist` is the source metric on
/// slot indices. Returns the largest positive residual seen.
pub(crate) fn sequential_fill(
    known: &mut [Option<Vec<f64>>],
    dist: impl Fn(usize, usize) -> f64,
    order: &[usize],
    lip: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &x in order {
        let constraints: Vec<BallConstraint> = known
            .iter()
            .enumerate()
            .filter_map(|(j, v)| {
                v.as_ref().map(|c| BallConstraint {
                    center: c.clone(),
                    radius: dist(x, j),
                })
            })
            .collect();
        let sol = solve_minimax(&constraints, lip, opts).map_err(|e| Error::at_point(x, e))?;
        worst = worst.max(sol.residual);
        known[x] = Some(sol.point);
    }
    Ok(worst)
}

/// Extends `f` to the whole source space with Lipschitz constant `lip`,
/// assigning the unassigned points in `order` (ascending index when `None`).
pub fn kirszbraun_extend(
    f: &PartialMap<Euclidean>,
    lip: f64,
    order: Option<&[usize]>,
    opts: &SolverOptions,
) -> Result<ExtensionResult<Vec<f64>>> {
    if !(lip > 0.0 && lip.is_finite()) {
        return Err(Error::Precondition(format!(
            "Lipschitz constant must be positive and finite, got {lip}"
        )));
    }
    let lip_a = lip_constant(f, &f.domain)?;
    if lip_a > lip * (1.0 + LIP_REL_TOL) {
        return Err(Error::Precondition(format!(
            "Lip(f, A) = {lip_a} exceeds the target constant {lip}"
        )));
    }
    let rest = f.complement();
    let order = match order {
        Some(o) => {
            check_order(o, &rest, f.space.len())?;
            o.to_vec()
        }
        None => rest,
    };
    extend_unchecked(f, lip, &order, opts)
}

/// Sequential extension without the Lipschitz precondition check.
pub(crate) fn extend_unchecked(
    f: &PartialMap<Euclidean>,
    lip: f64,
    order: &[usize],
    opts: &SolverOptions,
) -> Result<ExtensionResult<Vec<f64>>> {
    let space = &f.space;
    let mut known: Vec<Option<Vec<f64>>> = vec![None; space.len()];
    for (&i, v) in f.domain.iter().zip(&f.values) {
        known[i] = Some(v.clone());
    }
    let violation = sequential_fill(&mut known, |i, j| space.d(i, j), order, lip, opts)?;
    let values = known
        .into_iter()
        .map(|v| v.expect("every slot is filled"))
        .collect();
    ExtensionResult::certify(space, &f.target, values, violation)
}
