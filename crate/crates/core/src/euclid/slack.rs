//! Slack checkers for the Euclidean four-point, projection-stability and hull
//! contraction inequalities. Every checker returns `RHS - LHS`.

use crate::error::{Error, Result};
use crate::euclid::hull::{hull_hausdorff, project, HullVertexSet};
use crate::euclid::solver::SolverOptions;
use crate::metric::hausdorff;
use crate::metric::Euclidean;
use crate::vector;

/// Slacks below `-WITNESS_TOL` count as violations.
pub const WITNESS_TOL: f64 = 1e-9;

/// Collected slacks of one audit.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackReport {
    pub tag: String,
    pub slacks: Vec<f64>,
    pub min_slack: f64,
    /// Trial index of the smallest slack when it is below `-WITNESS_TOL`.
    pub witness: Option<usize>,
}

impl SlackReport {
    pub fn new(tag: impl Into<String>, slacks: Vec<f64>) -> Self {
        let (arg, min_slack) = slacks
            .iter()
            .copied()
            .enumerate()
            .fold((None, f64::INFINITY), |(arg, best), (i, s)| {
                if s < best {
                    (Some(i), s)
                } else {
                    (arg, best)
                }
            });
        let witness = arg.filter(|_| min_slack < -WITNESS_TOL);
        SlackReport {
            tag: tag.into(),
            slacks,
            min_slack,
            witness,
        }
    }

    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// `d(x,v)^2 + d(y,u)^2 + 2 d(x,u) d(y,v) - d(x,y)^2 - d(u,v)^2`.
pub fn reshetnyak_slack(x: &[f64], y: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let rhs = vector::dist_sq(x, v) + vector::dist_sq(y, u) + 2.0 * vector::dist(x, u) * vector::dist(y, v);
    let lhs = vector::dist_sq(x, y) + vector::dist_sq(u, v);
    rhs - lhs
}

fn check_within(p: &[f64], z: &[f64], r: f64, what: &str) -> Result<()> {
    let d = vector::dist(p, z);
    if d > r * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "{what} lies at distance {d} from the center, outside radius {r}"
        )));
    }
    Ok(())
}

/// `2 (r1 + r2) H(co V1, co V2) - |P1(x) - P2(x)|^2` where `P_k` projects onto
/// `co V_k`. Both hulls must lie in `B(z, r1)` and `x` in `B(z, r2)`.
pub fn projection_stability_slack(
    v1: &HullVertexSet,
    v2: &HullVertexSet,
    z: &[f64],
    r1: f64,
    x: &[f64],
    r2: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Precondition("radii must be positive".into()));
    }
    if v1.dim() != v2.dim() || z.len() != v1.dim() || x.len() != v1.dim() {
        return Err(Error::InvalidPoint("dimension mismatch".into()));
    }
    // A ball is convex, so a hull lies inside it iff all vertices do.
    for v in v1.vertices().iter().chain(v2.vertices()) {
        check_within(v, z, r1, "a hull vertex")?;
    }
    check_within(x, z, r2, "x")?;
    let h = hull_hausdorff(v1, v2, opts)?;
    let p1 = project(x, v1, opts)?.point;
    let p2 = project(x, v2, opts)?.point;
    Ok(2.0 * (r1 + r2) * h - vector::dist_sq(&p1, &p2))
}

/// `H(V1, V2) - H(co V1, co V2)`.
pub fn hull_contraction_slack(v1: &HullVertexSet, v2: &HullVertexSet, opts: &SolverOptions) -> Result<f64> {
    let vertex_level = hausdorff(&Euclidean { dim: v1.dim() }, v1.vertices(), v2.vertices())?;
    Ok(vertex_level - hull_hausdorff(v1, v2, opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hull(v: &[&[f64]]) -> HullVertexSet {
        HullVertexSet::new(v.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    #[test]
    fn reshetnyak_equality_cases() {
        let x = [0.3, -1.2, 2.0];
        let y = [1.0, 0.5, -0.7];
        assert!(reshetnyak_slack(&x, &y, &x, &y).abs() <= 1e-12);
        assert_eq!(reshetnyak_slack(&x, &x, &x, &x), 0.0);
    }

    #[test]
    fn reshetnyak_square() {
        // Unit square x, y, u, v in cyclic order x, u, y, v: diagonals x-y and u-v.
        let slack = reshetnyak_slack(&[0.0, 0.0], &[1.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]);
        // RHS = 1 + 1 + 2 = 4, LHS = 2 + 2.
        assert!(slack.abs() < 1e-15);
    }

    #[test]
    fn stability_identical_hulls() {
        let v = hull(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]]);
        let s = projection_stability_slack(&v, &v, &[0.0, 0.0], 2.0, &[3.0, 3.0], 5.0, &SolverOptions::default())
            .unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn stability_two_points_closed_form() {
        let h = 0.6;
        let (r1, r2) = (0.5, 0.25);
        let s = projection_stability_slack(
            &hull(&[&[0.0]]),
            &hull(&[&[h]]),
            &[h / 2.0],
            r1,
            &[h / 2.0],
            r2,
            &SolverOptions::default(),
        )
        .unwrap();
        let expected = 2.0 * (r1 + r2) * h - h * h;
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn stability_rejects_escaping_points() {
        let opts = SolverOptions::default();
        let v = hull(&[&[0.0], &[2.0]]);
        assert!(projection_stability_slack(&v, &v, &[0.0], 1.0, &[0.0], 1.0, &opts).is_err());
        let w = hull(&[&[0.5]]);
        assert!(projection_stability_slack(&w, &w, &[0.0], 1.0, &[3.0], 1.0, &opts).is_err());
    }

    #[test]
    fn report_witness_only_below_tolerance() {
        let ok = SlackReport::new("t", vec![0.5, -1e-12, 2.0]);
        assert!(ok.passed());
        assert_eq!(ok.min_slack, -1e-12);
        let bad = SlackReport::new("t", vec![0.5, -1e-3, -1e-2]);
        assert_eq!(bad.witness, Some(2));
    }

    #[test]
    fn contraction_on_segment_endpoints() {
        // Hull of {0, 2} vs {1}: H(co) = 1, H(vertices) = 1.
        let s = hull_contraction_slack(&hull(&[&[0.0], &[2.0]]), &hull(&[&[1.0]]), &SolverOptions::default())
            .unwrap();
        assert!(s.abs() < 1e-15);
    }
}
