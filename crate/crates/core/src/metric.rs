//! Finite metric spaces, target geometries and the quantities shared by every
//! extension operator: Lipschitz constants, the supremum distance between
//! maps, the Pompeiu-Hausdorff distance and the product metric with the plane.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, MetricViolation, Result};
use crate::vector;

/// Relative tolerance on triangle-inequality slack when validating tables.
pub const TRIANGLE_REL_TOL: f64 = 1e-12;

/// Relative slack allowed when checking a Lipschitz precondition `Lip <= L`.
pub const LIP_REL_TOL: f64 = 1e-9;

/// `n` points with a full, validated distance table (row major).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    pub fn to_table(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// Euclidean distances between the given points. Always a metric, so no
    /// axiom check is run.
    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        if let Some(first) = points.first() {
            if let Some(bad) = points.iter().position(|p| p.len() != first.len()) {
                return Err(Error::InvalidPoint(format!(
                    "source point {bad} has dimension {}, expected {}",
                    points[bad].len(),
                    first.len()
                )));
            }
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint("non-finite source coordinate".into()));
        }
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = vector::dist(&points[i], &points[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(FiniteMetricSpace { n, dist })
    }

    /// Distance from `x` to the nearest index in `set`.
    pub fn dist_to_set(&self, x: usize, set: &[usize]) -> f64 {
        set.iter().map(|&a| self.d(x, a)).fold(f64::INFINITY, f64::min)
    }
}

/// Checks the metric axioms on a square table. Returns every violation found.
pub fn validate_metric(table: &[Vec<f64>]) -> Result<FiniteMetricSpace> {
    let n = table.len();
    for (row, r) in table.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NonSquare {
                row,
                len: r.len(),
                n,
            });
        }
    }
    for (i, r) in table.iter().enumerate() {
        if let Some(j) = r.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { i, j });
        }
    }

    let mut violations = Vec::new();
    for i in 0..n {
        if table[i][i] != 0.0 {
            violations.push(MetricViolation::Diagonal {
                i,
                value: table[i][i],
            });
        }
        for j in 0..n {
            if table[i][j] < 0.0 {
                violations.push(MetricViolation::Negative {
                    i,
                    j,
                    value: table[i][j],
                });
            }
            if j > i && table[i][j] != table[j][i] {
                violations.push(MetricViolation::Asymmetric { i, j });
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let direct = table[i][k];
                let detour = table[i][j] + table[j][k];
                let excess = direct - detour;
                if excess > TRIANGLE_REL_TOL * direct.max(detour) {
                    violations.push(MetricViolation::Triangle { i, j, k, excess });
                }
            }
        }
    }
    if !violations.is_empty() {
        return Err(Error::MetricViolations(violations));
    }
    Ok(FiniteMetricSpace {
        n,
        dist: table.iter().flatten().copied().collect(),
    })
}

/// A target geometry: supplies the point type and its distance.
pub trait Target: Clone + fmt::Debug + Send + Sync {
    type Point: Clone + PartialEq + fmt::Debug + Send + Sync;

    fn distance(&self, p: &Self::Point, q: &Self::Point) -> f64;

    fn check_point(&self, p: &Self::Point) -> Result<()>;
}

/// Euclidean space `R^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    pub dim: usize,
}

/// `R^dim` with the max-coordinate norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupNorm {
    pub dim: usize,
}

fn check_coords(dim: usize, p: &[f64]) -> Result<()> {
    if p.len() != dim {
        return Err(Error::InvalidPoint(format!(
            "point has dimension {}, expected {dim}",
            p.len()
        )));
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidPoint("non-finite coordinate".into()));
    }
    Ok(())
}

impl Target for Euclidean {
    type Point = Vec<f64>;

    fn distance(&self, p: &Vec<f64>, q: &Vec<f64>) -> f64 {
        vector::dist(p, q)
    }

    fn check_point(&self, p: &Vec<f64>) -> Result<()> {
        check_coords(self.dim, p)
    }
}

impl Target for SupNorm {
    type Point = Vec<f64>;

    fn distance(&self, p: &Vec<f64>, q: &Vec<f64>) -> f64 {
        vector::dist_inf(p, q)
    }

    fn check_point(&self, p: &Vec<f64>) -> Result<()> {
        check_coords(self.dim, p)
    }
}

/// Values of a map on a nonempty subset `domain` of a finite source space.
#[derive(Debug, Clone)]
pub struct PartialMap<T: Target> {
    pub space: Arc<FiniteMetricSpace>,
    pub target: T,
    pub domain: Vec<usize>,
    pub values: Vec<T::Point>,
}

impl<T: Target> PartialMap<T> {
    pub fn new(
        space: Arc<FiniteMetricSpace>,
        target: T,
        domain: Vec<usize>,
        values: Vec<T::Point>,
    ) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::InvalidDomain("domain is empty".into()));
        }
        if domain.len() != values.len() {
            return Err(Error::InvalidDomain(format!(
                "{} domain indices but {} values",
                domain.len(),
                values.len()
            )));
        }
        let mut seen = vec![false; space.len()];
        for &i in &domain {
            if i >= space.len() {
                return Err(Error::InvalidDomain(format!(
                    "index {i} out of range for {} points",
                    space.len()
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidDomain(format!("index {i} repeated")));
            }
        }
        for v in &values {
            target.check_point(v)?;
        }
        Ok(PartialMap {
            space,
            target,
            domain,
            values,
        })
    }

    /// A total map over every source point.
    pub fn total(space: Arc<FiniteMetricSpace>, target: T, values: Vec<T::Point>) -> Result<Self> {
        let domain = (0..space.len()).collect();
        PartialMap::new(space, target, domain, values)
    }

    pub fn value_at(&self, index: usize) -> Option<&T::Point> {
        self.domain
            .iter()
            .position(|&i| i == index)
            .map(|k| &self.values[k])
    }

    pub fn is_total(&self) -> bool {
        self.domain.len() == self.space.len()
    }

    /// Source indices outside the domain, ascending.
    pub fn complement(&self) -> Vec<usize> {
        let mut in_domain = vec![false; self.space.len()];
        for &i in &self.domain {
            in_domain[i] = true;
        }
        (0..self.space.len()).filter(|&i| !in_domain[i]).collect()
    }

    /// The same map with new values on the same domain.
    pub fn with_values(&self, values: Vec<T::Point>) -> Result<Self> {
        PartialMap::new(
            self.space.clone(),
            self.target.clone(),
            self.domain.clone(),
            values,
        )
    }

    /// Lipschitz constant over the whole domain.
    pub fn lip(&self) -> Result<f64> {
        lip_of_indexed(&self.space, &self.target, &self.domain, &self.values)
    }
}

/// A full map on the source space together with its certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionResult<P> {
    pub values: Vec<P>,
    pub lip_achieved: f64,
    pub max_constraint_violation: f64,
}

impl<P: Clone + PartialEq + fmt::Debug + Send + Sync> ExtensionResult<P> {
    /// Computes `lip_achieved` from the values.
    pub fn certify<T: Target<Point = P>>(
        space: &FiniteMetricSpace,
        target: &T,
        values: Vec<P>,
        max_constraint_violation: f64,
    ) -> Result<Self> {
        let lip_achieved = lip_full(space, target, &values)?;
        Ok(ExtensionResult {
            values,
            lip_achieved,
            max_constraint_violation,
        })
    }

    pub fn restrict(&self, domain: &[usize]) -> Vec<P> {
        domain.iter().map(|&i| self.values[i].clone()).collect()
    }

    pub fn to_map<T: Target<Point = P>>(
        &self,
        space: Arc<FiniteMetricSpace>,
        target: T,
    ) -> Result<PartialMap<T>> {
        PartialMap::total(space, target, self.values.clone())
    }
}

/// `Lip(f, B)`: the largest ratio `d_Y(f(x), f(y)) / d_X(x, y)` over unordered
/// pairs of `subset`. `subset` must lie in the domain of `f`.
pub fn lip_constant<T: Target>(f: &PartialMap<T>, subset: &[usize]) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::EmptySet);
    }
    let values = subset
        .iter()
        .map(|&i| {
            f.value_at(i).cloned().ok_or_else(|| {
                Error::InvalidDomain(format!("index {i} is not in the domain of the map"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    lip_of_indexed(&f.space, &f.target, subset, &values)
}

/// Lipschitz constant of `values[k]` placed at source index `indices[k]`.
pub fn lip_of_indexed<T: Target>(
    space: &FiniteMetricSpace,
    target: &T,
    indices: &[usize],
    values: &[T::Point],
) -> Result<f64> {
    let mut best = 0.0f64;
    for a in 0..indices.len() {
        for b in (a + 1)..indices.len() {
            let dy = target.distance(&values[a], &values[b]);
            let dx = space.d(indices[a], indices[b]);
            if dx == 0.0 {
                if dy != 0.0 {
                    return Err(Error::InfiniteLipschitz {
                        i: indices[a],
                        j: indices[b],
                    });
                }
                continue;
            }
            best = best.max(dy / dx);
        }
    }
    Ok(best)
}

/// Lipschitz constant of a total map given as one value per source index.
pub fn lip_full<T: Target>(
    space: &FiniteMetricSpace,
    target: &T,
    values: &[T::Point],
) -> Result<f64> {
    if values.len() != space.len() {
        return Err(Error::DomainMismatch);
    }
    let indices: Vec<usize> = (0..space.len()).collect();
    lip_of_indexed(space, target, &indices, values)
}

/// `d_inf(f, g)`: largest target distance between values on a common domain.
pub fn sup_distance<T: Target>(f: &PartialMap<T>, g: &PartialMap<T>) -> Result<f64> {
    if f.domain.len() != g.domain.len() {
        return Err(Error::DomainMismatch);
    }
    let mut best = 0.0f64;
    for (k, &i) in f.domain.iter().enumerate() {
        let gv = g.value_at(i).ok_or(Error::DomainMismatch)?;
        best = best.max(f.target.distance(&f.values[k], gv));
    }
    Ok(best)
}

/// Supremum distance between two value lists aligned by position.
pub fn sup_distance_values<T: Target>(target: &T, f: &[T::Point], g: &[T::Point]) -> Result<f64> {
    if f.len() != g.len() {
        return Err(Error::DomainMismatch);
    }
    Ok(f.iter()
        .zip(g)
        .map(|(p, q)| target.distance(p, q))
        .fold(0.0, f64::max))
}

/// Distance from `p` to the nearest point of `set`.
pub fn dist_point_set<T: Target>(target: &T, p: &T::Point, set: &[T::Point]) -> f64 {
    set.iter()
        .map(|q| target.distance(p, q))
        .fold(f64::INFINITY, f64::min)
}

/// Pompeiu-Hausdorff distance between two finite point sets.
pub fn hausdorff<T: Target>(target: &T, p: &[T::Point], q: &[T::Point]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptySet);
    }
    let one_sided = |from: &[T::Point], to: &[T::Point]| {
        from.iter()
            .map(|x| dist_point_set(target, x, to))
            .fold(0.0, f64::max)
    };
    Ok(one_sided(p, q).max(one_sided(q, p)))
}

/// Distance in `X x R^2` with the product metric `sqrt(d_X^2 + |a1 - a2|^2)`.
pub fn product_distance(
    space: &FiniteMetricSpace,
    x1: usize,
    a1: [f64; 2],
    x2: usize,
    a2: [f64; 2],
) -> f64 {
    let dx = space.d(x1, x2);
    let da = (a1[0] - a2[0]).hypot(a1[1] - a2[1]);
    dx.hypot(da)
}
