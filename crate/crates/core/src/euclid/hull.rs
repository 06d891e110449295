//! Projection onto the convex hull of finitely many points, the Hausdorff
//! distance between two such hulls, and the hull-constrained composition of an
//! extension with the projection.
//!
//! The projection works in barycentric weights and never builds facets. It is
//! Wolfe's minimum-norm-point method applied to the translated vertices
//! `v_j - p`: an active set ("corral") of affinely independent vertices is
//! kept, the affine minimizer of the corral is taken when it lies inside the
//! corral's simplex, and otherwise the iterate moves toward it until a weight
//! hits zero and that vertex leaves. The method is finite in exact arithmetic.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::euclid::solver::SolverOptions;
use crate::metric::{Euclidean, ExtensionResult, PartialMap};
use crate::vector;

/// Vertices whose convex hull is the set of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct HullVertexSet {
    vertices: Vec<Vec<f64>>,
}

impl HullVertexSet {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let first = vertices.first().ok_or(Error::EmptySet)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidPoint("zero-dimensional vertex".into()));
        }
        for v in &vertices {
            if v.len() != dim || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPoint("malformed hull vertex".into()));
            }
        }
        Ok(HullVertexSet { vertices })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub point: Vec<f64>,
    /// Barycentric weights over the hull vertices.
    pub weights: Vec<f64>,
    pub distance: f64,
}

const OPTIMALITY_TOL: f64 = 1e-14;
const WEIGHT_TOL: f64 = 1e-15;

/// Nearest point of `co(hull)` to `p`.
pub fn min_norm_projection(p: &[f64], hull: &HullVertexSet, opts: &SolverOptions) -> Result<Vec<f64>> {
    project(p, hull, opts).map(|pr| pr.point)
}

pub fn project(p: &[f64], hull: &HullVertexSet, opts: &SolverOptions) -> Result<Projection> {
    if p.len() != hull.dim() {
        return Err(Error::InvalidPoint(format!(
            "point has dimension {}, hull has {}",
            p.len(),
            hull.dim()
        )));
    }
    let shifted: Vec<Vec<f64>> = hull.vertices.iter().map(|v| vector::sub(v, p)).collect();
    let weights = min_norm_weights(&shifted, opts.max_iter)?;
    let mut point = vec![0.0; p.len()];
    for (w, v) in weights.iter().zip(&hull.vertices) {
        if *w != 0.0 {
            for (o, x) in point.iter_mut().zip(v) {
                *o += w * x;
            }
        }
    }
    // A single active vertex is returned verbatim, so vertices project onto themselves.
    if let Some(k) = weights.iter().position(|&w| w == 1.0) {
        point = hull.vertices[k].clone();
    }
    let distance = vector::dist(&point, p);
    Ok(Projection {
        point,
        weights,
        distance,
    })
}

fn combine(points: &[Vec<f64>], corral: &[usize], lam: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].len()];
    for (&j, &w) in corral.iter().zip(lam) {
        for (o, v) in x.iter_mut().zip(&points[j]) {
            *o += w * v;
        }
    }
    x
}

/// Affine weights (summing to 1) of the point of least norm in the affine
/// hull of the corral.
fn affine_minimizer(points: &[Vec<f64>], corral: &[usize]) -> Vec<f64> {
    if corral.len() == 1 {
        return vec![1.0];
    }
    let dim = points[0].len();
    let base = &points[corral[0]];
    let cols = corral.len() - 1;
    let d = DMatrix::from_fn(dim, cols, |r, c| points[corral[c + 1]][r] - base[r]);
    let rhs = DVector::from_iterator(dim, base.iter().map(|x| -x));
    let beta = d
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(cols));
    let mut alpha = Vec::with_capacity(corral.len());
    alpha.push(1.0 - beta.sum());
    alpha.extend(beta.iter());
    alpha
}

/// Barycentric weights of the least-norm point of `co(points)`.
fn min_norm_weights(points: &[Vec<f64>], max_iter: usize) -> Result<Vec<f64>> {
    let scale = points.iter().map(|v| vector::dot(v, v)).fold(0.0, f64::max);
    let mut weights = vec![0.0; points.len()];
    let start = (0..points.len())
        .min_by(|&a, &b| vector::dot(&points[a], &points[a]).total_cmp(&vector::dot(&points[b], &points[b])))
        .expect("nonempty hull");
    if scale == 0.0 {
        weights[start] = 1.0;
        return Ok(weights);
    }

    let mut corral = vec![start];
    let mut lam = vec![1.0];
    let mut x = points[start].clone();
    let mut iterations = 0;
    loop {
        let xx = vector::dot(&x, &x);
        if xx == 0.0 {
            break;
        }
        let (j, xp) = (0..points.len())
            .map(|k| (k, vector::dot(&x, &points[k])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty hull");
        if xx - xp <= OPTIMALITY_TOL * scale || corral.contains(&j) {
            break;
        }
        let (prev_corral, prev_lam) = (corral.clone(), lam.clone());
        corral.push(j);
        lam.push(0.0);

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(Error::IterationCap {
                    iterations: max_iter,
                    gap: xx - xp,
                });
            }
            let alpha = affine_minimizer(points, &corral);
            if alpha.iter().all(|&a| a > WEIGHT_TOL) {
                lam = alpha;
                break;
            }
            // Move from lam toward alpha until the first weight reaches zero.
            let (theta, leaving) = lam
                .iter()
                .zip(&alpha)
                .enumerate()
                .filter(|(_, (_, &a))| a <= WEIGHT_TOL)
                .map(|(k, (&l, &a))| (if l - a > 0.0 { (l / (l - a)).min(1.0) } else { 0.0 }, k))
                .min_by(|p, q| p.0.total_cmp(&q.0))
                .expect("some weight is at most the tolerance");
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            lam[leaving] = 0.0;
            let keep: Vec<bool> = lam.iter().map(|&l| l > WEIGHT_TOL).collect();
            corral = corral.iter().zip(&keep).filter(|(_, k)| **k).map(|(c, _)| *c).collect();
            lam = lam.iter().zip(&keep).filter(|(_, k)| **k).map(|(l, _)| *l).collect();
            let total: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= total);
            if corral.len() == 1 {
                lam = vec![1.0];
                break;
            }
        }
        let next = combine(points, &corral, &lam);
        // Each major cycle strictly lowers |x|^2 in exact arithmetic; once
        // rounding stops that, the corral only cycles.
        if vector::dot(&next, &next) >= xx {
            corral = prev_corral;
            lam = prev_lam;
            break;
        }
        x = next;
    }
    for (&j, &w) in corral.iter().zip(&lam) {
        weights[j] = w;
    }
    Ok(weights)
}

/// Distance from `p` to `co(hull)`.
pub fn dist_to_hull(p: &[f64], hull: &HullVertexSet, opts: &SolverOptions) -> Result<f64> {
    project(p, hull, opts).map(|pr| pr.distance)
}

/// Exact Hausdorff distance between `co(V1)` and `co(V2)`. The distance to a
/// convex set is a convex function, so its supremum over a hull is attained
/// at a vertex.
pub fn hull_hausdorff(v1: &HullVertexSet, v2: &HullVertexSet, opts: &SolverOptions) -> Result<f64> {
    let mut best = 0.0f64;
    for v in v1.vertices() {
        best = best.max(dist_to_hull(v, v2, opts)?);
    }
    for w in v2.vertices() {
        best = best.max(dist_to_hull(w, v1, opts)?);
    }
    Ok(best)
}

/// Composes an extension of `g` with the projection onto `co(g(A))`. Values
/// on the domain are kept verbatim since they lie in their own hull.
pub fn alpha_c_compose(
    g: &PartialMap<Euclidean>,
    ext: &ExtensionResult<Vec<f64>>,
    opts: &SolverOptions,
) -> Result<ExtensionResult<Vec<f64>>> {
    if ext.values.len() != g.space.len() {
        return Err(Error::DomainMismatch);
    }
    for (&a, v) in g.domain.iter().zip(&g.values) {
        if &ext.values[a] != v {
            return Err(Error::Precondition(format!(
                "extension differs from the partial map at source point {a}"
            )));
        }
    }
    let hull = HullVertexSet::new(g.values.clone())?;
    let mut values = Vec::with_capacity(ext.values.len());
    for (x, v) in ext.values.iter().enumerate() {
        match g.value_at(x) {
            Some(gv) => values.push(gv.clone()),
            None => values.push(min_norm_projection(v, &hull, opts).map_err(|e| Error::at_point(x, e))?),
        }
    }
    ExtensionResult::certify(&g.space, &g.target, values, ext.max_constraint_violation)
}
