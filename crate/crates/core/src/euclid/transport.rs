//! Quantitative continuity transports for Euclidean targets.
//!
//! Given an extension `f` of some map on `A` and a nearby map `g` on `A`, both
//! transports build an extension `g'` of `g` that stays uniformly close to `f`.
//! The constructions work in the product `X x R^2`: `f` lives on the sheet at
//! height 0, `g` on a second sheet, and a sequential Kirszbraun step fills the
//! second sheet. `g'` is read off that sheet.

use crate::error::{Error, Result};
use crate::euclid::kirszbraun::sequential_fill;
use crate::euclid::solver::SolverOptions;
use crate::metric::{
    lip_full, lip_of_indexed, sup_distance_values, Euclidean, ExtensionResult, FiniteMetricSpace,
    PartialMap, Target, LIP_REL_TOL,
};
use crate::vector;

/// Output of [`transport_phi`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTransport {
    pub extension: ExtensionResult<Vec<f64>>,
    /// Admissible perturbation size `eps^2 / (8M)`.
    pub delta: f64,
    pub bound_m: f64,
}

/// `M = max(1, sup_x |z - f(x)|)` with `z` the value at the lowest domain index.
pub fn anchor_bound(f_full: &[Vec<f64>], domain: &[usize]) -> Result<(usize, f64)> {
    let z = *domain.iter().min().ok_or(Error::EmptySet)?;
    let m = f_full
        .iter()
        .map(|v| vector::dist(&f_full[z], v))
        .fold(1.0, f64::max);
    Ok((z, m))
}

/// `delta = eps^2 / (8M)` for a nonexpansive `f_full`.
pub fn phi_delta(f_full: &[Vec<f64>], domain: &[usize], eps: f64) -> Result<f64> {
    let (_, m) = anchor_bound(f_full, domain)?;
    Ok(eps * eps / (8.0 * m))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Precondition(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

fn check_shapes(f_full: &ExtensionResult<Vec<f64>>, g: &PartialMap<Euclidean>) -> Result<()> {
    if f_full.values.len() != g.space.len() {
        return Err(Error::DomainMismatch);
    }
    f_full.values.iter().try_for_each(|v| g.target.check_point(v))
}

/// Slot layout for the product `X x {h0, h1}`: slot `x` is `(x, h0)`, slot
/// `n + x` is `(x, h1)`.
fn two_sheet_metric(space: &FiniteMetricSpace, height: f64) -> impl Fn(usize, usize) -> f64 + '_ {
    let n = space.len();
    move |p, q| {
        let dh = if (p < n) == (q < n) { 0.0 } else { height };
        space.d(p % n, q % n).hypot(dh)
    }
}

/// Fills the second sheet above `X \ A` and returns its values.
fn fill_second_sheet(
    space: &FiniteMetricSpace,
    first_sheet: Vec<Vec<f64>>,
    g: &PartialMap<Euclidean>,
    height: f64,
    lip: f64,
    opts: &SolverOptions,
) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = space.len();
    let mut known: Vec<Option<Vec<f64>>> = first_sheet.into_iter().map(Some).collect();
    known.resize(2 * n, None);
    for (&a, v) in g.domain.iter().zip(&g.values) {
        known[n + a] = Some(v.clone());
    }
    let order: Vec<usize> = g.complement().into_iter().map(|x| n + x).collect();
    let violation = sequential_fill(&mut known, two_sheet_metric(space, height), &order, lip, opts)
        .map_err(|e| match e {
            Error::AtPoint { index, source } => Error::AtPoint {
                index: index - n,
                source,
            },
            other => other,
        })?;
    let sheet = known
        .into_iter()
        .skip(n)
        .map(|v| v.expect("second sheet is filled"))
        .collect();
    Ok((sheet, violation))
}

/// Nonexpansive transport: `f_full` is a nonexpansive map on `X`, `g` a
/// nonexpansive map on `A` with `sup_A |f - g| < eps^2 / (8M)`. Returns a
/// nonexpansive extension `g'` of `g` with `d_inf(f, g') <= eps`.
pub fn transport_phi(
    f_full: &ExtensionResult<Vec<f64>>,
    g: &PartialMap<Euclidean>,
    eps: f64,
    opts: &SolverOptions,
) -> Result<PhiTransport> {
    check_eps(eps)?;
    check_shapes(f_full, g)?;
    let space = &g.space;
    let lip_f = lip_full(space, &g.target, &f_full.values)?;
    if lip_f > 1.0 + LIP_REL_TOL {
        return Err(Error::Precondition(format!("f is not nonexpansive: Lip = {lip_f}")));
    }
    let lip_g = g.lip()?;
    if lip_g > 1.0 + LIP_REL_TOL {
        return Err(Error::Precondition(format!("g is not nonexpansive: Lip = {lip_g}")));
    }
    let (_, bound_m) = anchor_bound(&f_full.values, &g.domain)?;
    let delta = eps * eps / (8.0 * bound_m);
    let gap = sup_distance_values(&g.target, &f_full.restrict(&g.domain), &g.values)?;
    if gap >= delta {
        return Err(Error::Precondition(format!(
            "sup_A |f - g| = {gap:e} is not below delta = {delta:e}"
        )));
    }

    let (values, violation) = fill_second_sheet(space, f_full.values.clone(), g, eps, 1.0, opts)?;
    let extension = ExtensionResult::certify(space, &g.target, values, violation)?;
    Ok(PhiTransport {
        extension,
        delta,
        bound_m,
    })
}

/// Which construction [`transport_psi`] used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsiBranch {
    /// `f` constant: extend `g`, then project into `B(f, eps)`.
    ConstantProjection,
    /// `Lip(g, A) <= 2 Lip(f, X)`: product construction with a contracted first sheet.
    Product,
    /// `Lip(g, A) > 2 Lip(f, X)`: keep `f` far from `A`, extend in between.
    Patched,
}

/// Constants of the Lipschitz transport for a non-constant `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiConstants {
    pub lip_f: f64,
    pub anchor: usize,
    pub bound_m: f64,
    /// `s = 1 - 2^-k` for the smallest `k >= 1` with `(1 - s) / s^2 < eps^2 / (32 M (4M + 1))`.
    pub s: f64,
    /// Lowest-index pair of `A` realizing `Lip(f, A)`.
    pub witness: (usize, usize),
    pub delta: f64,
}

/// Computes the transport constants; `f_full` must be non-constant with
/// `Lip(f, A) = Lip(f, X)`.
pub fn psi_constants(
    space: &FiniteMetricSpace,
    f_full: &[Vec<f64>],
    domain: &[usize],
    eps: f64,
) -> Result<PsiConstants> {
    check_eps(eps)?;
    let target = Euclidean {
        dim: f_full.first().map_or(0, Vec::len),
    };
    let lip_f = lip_full(space, &target, f_full)?;
    if lip_f == 0.0 {
        return Err(Error::Precondition("f is constant".into()));
    }
    let (anchor, bound_m) = anchor_bound(f_full, domain)?;
    let threshold = eps * eps / (32.0 * bound_m * (4.0 * bound_m + 1.0));
    let s = (1..=60)
        .map(|k| 1.0 - 0.5f64.powi(k))
        .find(|s| (1.0 - s) / (s * s) < threshold)
        .ok_or_else(|| Error::Precondition("no admissible s below 1 - 2^-60".into()))?;

    let mut sorted = domain.to_vec();
    sorted.sort_unstable();
    let mut witness = None;
    let mut best = f64::NEG_INFINITY;
    for (k, &a) in sorted.iter().enumerate() {
        for &b in &sorted[k + 1..] {
            let dx = space.d(a, b);
            if dx == 0.0 {
                continue;
            }
            let ratio = vector::dist(&f_full[a], &f_full[b]) / dx;
            if ratio > best {
                best = ratio;
                witness = Some((a, b));
            }
        }
    }
    let (x0, y0) = witness.ok_or_else(|| Error::Precondition("Lip(f, A) = 0 but f is not constant".into()))?;
    let spread = vector::dist(&f_full[x0], &f_full[y0]) - s * lip_f * space.d(x0, y0);
    if spread <= 0.0 {
        return Err(Error::Precondition(format!(
            "witness pair ({x0}, {y0}) does not beat s * Lip(f, X)"
        )));
    }
    let delta = (spread / 2.0).min(eps * eps * s * s / (32.0 * (4.0 * bound_m + 1.0)));
    Ok(PsiConstants {
        lip_f,
        anchor,
        bound_m,
        s,
        witness: (x0, y0),
        delta,
    })
}

/// Output of [`transport_psi`].
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTransport {
    pub extension: ExtensionResult<Vec<f64>>,
    pub branch: PsiBranch,
    pub delta: f64,
    pub constants: Option<PsiConstants>,
}

/// The admissible perturbation size for [`transport_psi`]: `eps` for a
/// constant `f`, otherwise [`PsiConstants::delta`].
pub fn psi_delta(space: &FiniteMetricSpace, f_full: &[Vec<f64>], domain: &[usize], eps: f64) -> Result<f64> {
    if f_full.iter().all(|v| v == &f_full[0]) {
        check_eps(eps)?;
        return Ok(eps);
    }
    psi_constants(space, f_full, domain, eps).map(|c| c.delta)
}

/// Lipschitz transport: `f_full` is Lipschitz on `X` with
/// `Lip(f, A) = Lip(f, X)`, `g` a map on `A` within the admissible distance
/// of `f`. Returns an extension `g'` of `g` with `Lip(g', X) = Lip(g, A)` and
/// `d_inf(f, g') <= eps`.
pub fn transport_psi(
    f_full: &ExtensionResult<Vec<f64>>,
    g: &PartialMap<Euclidean>,
    eps: f64,
    opts: &SolverOptions,
) -> Result<PsiTransport> {
    check_eps(eps)?;
    check_shapes(f_full, g)?;
    let space = &g.space;
    let f = &f_full.values;
    let lip_fx = lip_full(space, &g.target, f)?;
    let lip_fa = lip_of_indexed(space, &g.target, &g.domain, &f_full.restrict(&g.domain))?;
    if lip_fx > lip_fa * (1.0 + LIP_REL_TOL) {
        return Err(Error::Precondition(format!(
            "Lip(f, X) = {lip_fx} exceeds Lip(f, A) = {lip_fa}"
        )));
    }
    let lip_g = g.lip()?;
    let gap = sup_distance_values(&g.target, &f_full.restrict(&g.domain), &g.values)?;
    let complement = g.complement();

    if f.iter().all(|v| v == &f[0]) {
        let delta = eps;
        if gap >= delta {
            return Err(Error::Precondition(format!(
                "sup_A |f - g| = {gap:e} is not below delta = {delta:e}"
            )));
        }
        let (mut values, violation) = if lip_g == 0.0 {
            (vec![g.values[0].clone(); space.len()], 0.0)
        } else {
            let mut known: Vec<Option<Vec<f64>>> = vec![None; space.len()];
            for (&a, v) in g.domain.iter().zip(&g.values) {
                known[a] = Some(v.clone());
            }
            let violation = sequential_fill(&mut known, |i, j| space.d(i, j), &complement, lip_g, opts)?;
            (known.into_iter().map(|v| v.expect("filled")).collect(), violation)
        };
        let center = &f[0];
        for &x in &complement {
            let r = vector::dist(&values[x], center);
            if r > eps {
                values[x] = vector::lerp_from(center, &values[x], eps / r);
            }
        }
        let extension = ExtensionResult::certify(space, &g.target, values, violation)?;
        return Ok(PsiTransport {
            extension,
            branch: PsiBranch::ConstantProjection,
            delta,
            constants: None,
        });
    }

    let constants = psi_constants(space, f, &g.domain, eps)?;
    let delta = constants.delta;
    if gap >= delta {
        return Err(Error::Precondition(format!(
            "sup_A |f - g| = {gap:e} is not below delta = {delta:e}"
        )));
    }

    let (values, violation, branch) = if lip_g <= 2.0 * lip_fx {
        let s = constants.s;
        let z = &f[constants.anchor];
        let first_sheet: Vec<Vec<f64>> = f.iter().map(|v| vector::lerp_from(z, v, s)).collect();
        let eta = eps / (4.0 * lip_fx);
        let (values, violation) = fill_second_sheet(space, first_sheet, g, eta, lip_g, opts)?;
        (values, violation, PsiBranch::Product)
    } else {
        let reach = 2.0 * delta / lip_g;
        let mut known: Vec<Option<Vec<f64>>> = vec![None; space.len()];
        for (&a, v) in g.domain.iter().zip(&g.values) {
            known[a] = Some(v.clone());
        }
        let mut rest = Vec::new();
        for &x in &complement {
            if space.dist_to_set(x, &g.domain) >= reach {
                known[x] = Some(f[x].clone());
            } else {
                rest.push(x);
            }
        }
        let violation = sequential_fill(&mut known, |i, j| space.d(i, j), &rest, lip_g, opts)?;
        let values = known.into_iter().map(|v| v.expect("filled")).collect();
        (values, violation, PsiBranch::Patched)
    };
    let extension = ExtensionResult::certify(space, &g.target, values, violation)?;
    Ok(PsiTransport {
        extension,
        branch,
        delta,
        constants: Some(constants),
    })
}
