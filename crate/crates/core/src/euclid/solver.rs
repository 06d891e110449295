//! Single-point Kirszbraun step: find `y` minimizing
//! `V(y) = max_i (|y - c_i| - L r_i)`.
//!
//! The problem is the second-order cone program `min t` subject to
//! `|y - c_i| <= t + L r_i`. It is solved with a log-barrier path-following
//! method: Newton centering on `mu * t - sum_i log((t + L r_i)^2 - |y - c_i|^2)`
//! for an increasing sequence of `mu`. Each cone barrier has parameter 2, so a
//! centered iterate is within `2N / mu` of the optimal value. The problem is
//! translated to the mean of the centers and scaled to unit size first.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::vector;

/// Closed ball `B(center, radius)`. For a Kirszbraun step the radius is the
/// source distance and the solver multiplies it by the Lipschitz constant.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConstraint {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Required accuracy of the minimax value.
    pub tol: f64,
    /// Cap on the total number of Newton steps.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSolution {
    pub point: Vec<f64>,
    /// `V(point)`; nonpositive iff the point lies in every scaled ball.
    pub residual: f64,
    pub iterations: usize,
}

/// Normalized duality gap at which path following stops.
const GAP_FLOOR: f64 = 1e-12;
const MU_GROWTH: f64 = 10.0;
const NEWTON_DECREMENT_TOL: f64 = 1e-12;
/// Newton steps per centering stage; at large `mu` rounding can keep the
/// decrement above tolerance while the iterate no longer improves.
const CENTERING_STEPS: usize = 60;

/// `V(y) = max_i (|y - c_i| - L r_i)`.
pub fn minimax_excess(constraints: &[BallConstraint], lip: f64, y: &[f64]) -> f64 {
    constraints
        .iter()
        .map(|c| vector::dist(y, &c.center) - lip * c.radius)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Returns the point minimizing the largest excess over the balls
/// `B(c_i, lip * r_i)`.
pub fn extend_point(
    constraints: &[BallConstraint],
    lip: f64,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    solve_minimax(constraints, lip, opts).map(|s| s.point)
}

pub fn solve_minimax(
    constraints: &[BallConstraint],
    lip: f64,
    opts: &SolverOptions,
) -> Result<PointSolution> {
    let first = constraints.first().ok_or(Error::EmptySet)?;
    let dim = first.center.len();
    if !(lip > 0.0 && lip.is_finite()) {
        return Err(Error::Precondition(format!(
            "Lipschitz constant must be positive and finite, got {lip}"
        )));
    }
    for c in constraints {
        if c.center.len() != dim {
            return Err(Error::InvalidPoint(format!(
                "ball center has dimension {}, expected {dim}",
                c.center.len()
            )));
        }
        if c.center.iter().any(|x| !x.is_finite()) || !(c.radius >= 0.0 && c.radius.is_finite())
        {
            return Err(Error::InvalidPoint("malformed ball constraint".into()));
        }
    }

    let finish = |point: Vec<f64>, iterations: usize| PointSolution {
        residual: minimax_excess(constraints, lip, &point),
        point,
        iterations,
    };

    if constraints.len() == 1 {
        return Ok(finish(first.center.clone(), 0));
    }

    let origin = vector::mean(
        &constraints
            .iter()
            .map(|c| c.center.clone())
            .collect::<Vec<_>>(),
    );
    let scale = constraints
        .iter()
        .map(|c| vector::dist(&origin, &c.center) + lip * c.radius)
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(finish(origin, 0));
    }

    let centers: Vec<Vec<f64>> = constraints
        .iter()
        .map(|c| vector::scale(&vector::sub(&c.center, &origin), 1.0 / scale))
        .collect();
    let radii: Vec<f64> = constraints.iter().map(|c| lip * c.radius / scale).collect();

    let gap_target = GAP_FLOOR.min(opts.tol / scale);
    let (y, iterations) = barrier_path(&centers, &radii, gap_target, opts.max_iter)?;

    let point: Vec<f64> = y.iter().zip(&origin).map(|(v, o)| o + scale * v).collect();
    Ok(finish(point, iterations))
}

struct Barrier<'a> {
    centers: &'a [Vec<f64>],
    radii: &'a [f64],
    dim: usize,
}

impl Barrier<'_> {
    /// Cone slacks `t + rho_i - |y - u_i|`, or `None` outside the interior.
    fn slacks(&self, z: &[f64]) -> Option<Vec<(f64, f64)>> {
        let (y, t) = z.split_at(self.dim);
        let t = t[0];
        self.centers
            .iter()
            .zip(self.radii)
            .map(|(u, rho)| {
                let w = t + rho;
                let r = vector::dist(y, u);
                let gap = w - r;
                (gap > 0.0).then_some((gap, w + r))
            })
            .collect()
    }

    fn value(&self, mu: f64, z: &[f64]) -> Option<f64> {
        let s = self.slacks(z)?;
        Some(mu * z[self.dim] - s.iter().map(|(g, h)| (g * h).ln()).sum::<f64>())
    }

    /// Newton direction and the directional derivative `grad . dz`.
    fn newton_step(&self, mu: f64, z: &[f64]) -> Option<(DVector<f64>, f64)> {
        let n = self.dim + 1;
        let (y, t) = z.split_at(self.dim);
        let t = t[0];
        let mut grad = DVector::<f64>::zeros(n);
        let mut hess = DMatrix::<f64>::zeros(n, n);
        grad[self.dim] = mu;
        let mut gs = DVector::<f64>::zeros(n);
        for (u, rho) in self.centers.iter().zip(self.radii) {
            let w = t + rho;
            let r = vector::dist(y, u);
            // s = w^2 - |y - u|^2, factored to limit cancellation.
            let s = (w - r) * (w + r);
            if s <= 0.0 {
                return None;
            }
            for k in 0..self.dim {
                gs[k] = -2.0 * (y[k] - u[k]);
            }
            gs[self.dim] = 2.0 * w;
            grad -= &gs / s;
            hess.ger(1.0 / (s * s), &gs, &gs, 1.0);
            for k in 0..self.dim {
                hess[(k, k)] += 2.0 / s;
            }
            hess[(self.dim, self.dim)] -= 2.0 / s;
        }
        let rhs = -&grad;
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => hess.lu().solve(&rhs)?,
        };
        let slope = grad.dot(&step);
        (step.iter().all(|x| x.is_finite()) && slope.is_finite()).then_some((step, slope))
    }
}

fn barrier_path(
    centers: &[Vec<f64>],
    radii: &[f64],
    gap_target: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let dim = centers[0].len();
    let barrier = Barrier {
        centers,
        radii,
        dim,
    };
    let mut z = vec![0.0; dim + 1];
    let v0 = centers
        .iter()
        .zip(radii)
        .map(|(u, rho)| vector::norm(u) - rho)
        .fold(f64::NEG_INFINITY, f64::max);
    z[dim] = v0 + 1.0;

    let n_cones = centers.len() as f64;
    let mut mu = 1.0;
    let mut iterations = 0usize;
    loop {
        // Newton centering for the current mu.
        for _ in 0..CENTERING_STEPS {
            if iterations >= max_iter {
                return Err(Error::IterationCap {
                    iterations,
                    gap: 2.0 * n_cones / mu,
                });
            }
            iterations += 1;
            let Some((dz, slope)) = barrier.newton_step(mu, &z) else {
                break;
            };
            let f0 = barrier
                .value(mu, &z)
                .expect("iterate stays strictly feasible");
            // slope = -(Newton decrement)^2
            if slope.abs() / 2.0 <= NEWTON_DECREMENT_TOL {
                break;
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..80 {
                let trial: Vec<f64> = z.iter().zip(dz.iter()).map(|(a, b)| a + step * b).collect();
                if let Some(f1) = barrier.value(mu, &trial) {
                    if f1 <= f0 + 0.25 * step * slope.min(0.0) {
                        accepted = Some(trial);
                        break;
                    }
                }
                step *= 0.5;
            }
            match accepted {
                Some(next) => {
                    let moved = next
                        .iter()
                        .zip(&z)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    z = next;
                    if moved <= 1e-16 {
                        break;
                    }
                }
                None => break,
            }
        }
        if 2.0 * n_cones / mu <= gap_target {
            break;
        }
        mu *= MU_GROWTH;
    }
    z.truncate(dim);
    Ok((z, iterations))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(center: &[f64], radius: f64) -> BallConstraint {
        BallConstraint {
            center: center.to_vec(),
            radius,
        }
    }

    #[test]
    fn touching_balls_meet_at_one_point() {
        let cs = [ball(&[0.0, 0.0], 1.0), ball(&[2.0, 0.0], 1.0)];
        let s = solve_minimax(&cs, 1.0, &SolverOptions::default()).unwrap();
        assert!(vector::dist(&s.point, &[1.0, 0.0]) < 1e-6, "{:?}", s.point);
        assert!(s.residual <= 1e-12);
    }

    #[test]
    fn single_constraint_returns_center() {
        for lip in [0.5, 1.0, 7.0] {
            let p = extend_point(&[ball(&[3.0, -1.0], 2.0)], lip, &SolverOptions::default()).unwrap();
            assert_eq!(p, vec![3.0, -1.0]);
        }
    }

    #[test]
    fn empty_and_malformed_inputs() {
        let opts = SolverOptions::default();
        assert!(matches!(extend_point(&[], 1.0, &opts), Err(Error::EmptySet)));
        assert!(extend_point(&[ball(&[0.0], 1.0)], 0.0, &opts).is_err());
        assert!(extend_point(&[ball(&[0.0], 1.0), ball(&[0.0, 1.0], 1.0)], 1.0, &opts).is_err());
        assert!(extend_point(&[ball(&[0.0], -1.0), ball(&[1.0], 1.0)], 1.0, &opts).is_err());
    }

    #[test]
    fn iteration_cap_is_reported() {
        let cs = [ball(&[0.0, 0.0], 1.0), ball(&[2.0, 0.0], 1.0), ball(&[1.0, 3.0], 0.5)];
        let opts = SolverOptions {
            tol: 1e-7,
            max_iter: 3,
        };
        assert!(matches!(
            solve_minimax(&cs, 1.0, &opts),
            Err(Error::IterationCap { iterations: 3, .. })
        ));
    }

    #[test]
    fn centroid_of_isometric_collinear_image() {
        // Source 0, 1, 2 on a line mapped isometrically onto a line in R^2;
        // new source point at the centroid 1 (distances 1, 0, 1).
        let dir = [0.6, 0.8];
        let img = |s: f64| vec![dir[0] * s, dir[1] * s];
        let cs = [
            BallConstraint { center: img(0.0), radius: 1.0 },
            BallConstraint { center: img(1.0), radius: 0.0 },
            BallConstraint { center: img(2.0), radius: 1.0 },
        ];
        let p = extend_point(&cs, 1.0, &SolverOptions::default()).unwrap();
        assert!(vector::dist(&p, &img(1.0)) < 1e-6);
    }

    /// Dense grid search over a box, refined around the best cell.
    fn grid_minimize(cs: &[BallConstraint], lip: f64, lo: [f64; 2], hi: [f64; 2]) -> (Vec<f64>, f64) {
        let (mut lo, mut hi) = (lo, hi);
        let mut best = (vec![0.0, 0.0], f64::INFINITY);
        for _ in 0..12 {
            let k = 60;
            for a in 0..=k {
                for b in 0..=k {
                    let p = vec![
                        lo[0] + (hi[0] - lo[0]) * a as f64 / k as f64,
                        lo[1] + (hi[1] - lo[1]) * b as f64 / k as f64,
                    ];
                    let v = minimax_excess(cs, lip, &p);
                    if v < best.1 {
                        best = (p, v);
                    }
                }
            }
            let w = [(hi[0] - lo[0]) / 10.0, (hi[1] - lo[1]) / 10.0];
            lo = [best.0[0] - w[0], best.0[1] - w[1]];
            hi = [best.0[0] + w[0], best.0[1] + w[1]];
        }
        best
    }

    #[test]
    fn agrees_with_grid_search_oracle() {
        let cases = vec![
            (vec![ball(&[0.0, 0.0], 0.3), ball(&[1.0, 0.2], 0.4), ball(&[0.4, 1.1], 0.2)], 1.0),
            (vec![ball(&[0.0, 0.0], 1.0), ball(&[1.0, 0.0], 1.0), ball(&[0.5, 0.9], 1.0)], 0.7),
            (vec![ball(&[-1.0, 2.0], 0.1), ball(&[3.0, 0.5], 0.9)], 2.0),
        ];
        for (cs, lip) in cases {
            let s = solve_minimax(&cs, lip, &SolverOptions::default()).unwrap();
            let (_, grid_best) = grid_minimize(&cs, lip, [-3.0, -3.0], [4.0, 4.0]);
            assert!(s.residual <= grid_best + 1e-9, "{} vs {}", s.residual, grid_best);
            assert!(s.residual >= grid_best - 1e-6, "{} vs {}", s.residual, grid_best);
        }
    }
}
