//! One function per experiment. Each draws its data from the trial generator
//! and records the audited quantities with their bounds.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::euclid::hull::{alpha_c_compose, dist_to_hull, hull_hausdorff, HullVertexSet};
use crate::euclid::kirszbraun::{kirszbraun_extend, EuclideanInstance};
use crate::euclid::slack::{projection_stability_slack, reshetnyak_slack};
use crate::euclid::solver::SolverOptions;
use crate::euclid::transport::{phi_delta, psi_delta, transport_phi, transport_psi, PsiBranch};
use crate::instance::digest_text;
use crate::metric::{
    hausdorff, sup_distance_values, Euclidean, ExtensionResult, FiniteMetricSpace, PartialMap, SupNorm, Target,
};
use crate::supnorm::{
    admissible_hull, clamped_operator, envelopes, external_intersection, midpoint_operator, transport_extension,
    transport_extension_in_hull, Box as CubeBox, FamilyMember,
};
use crate::tree::{lipschitz_extend_tree, transport_extension_tree, TreePoint};
use crate::vector;

use super::config::{ExperimentConfig, PsiBranchChoice};
use super::gen::{self, Sizes};
use super::{Experiment, Quantity, TrialRecord};

#[derive(Default)]
struct Trial {
    digest: String,
    quantities: Vec<Quantity>,
}

impl Trial {
    fn push(&mut self, q: Quantity) {
        self.quantities.push(q);
    }
}

pub(super) fn run_trial(experiment: Experiment, config: &ExperimentConfig, trial: usize) -> TrialRecord {
    let mut rng = gen::trial_rng(config.seed, trial);
    let mut t = Trial::default();
    let rng = &mut rng;
    let outcome = match experiment {
        Experiment::PhiLsc => phi_lsc(config, rng, &mut t),
        Experiment::PsiLsc => psi_lsc(config, rng, &mut t, trial),
        Experiment::Quadrilateral => quadrilateral(config, rng, &mut t),
        Experiment::ProjectionStability => projection_stability(config, rng, &mut t),
        Experiment::HullContraction => hull_contraction(config, rng, &mut t),
        Experiment::Kirszbraun => kirszbraun(config, rng, &mut t),
        Experiment::TreeExtension => tree_extension(config, rng, &mut t),
        Experiment::MidpointNonexp => midpoint_nonexp(config, rng, &mut t),
        Experiment::ClampedHull => clamped_hull(config, rng, &mut t),
        Experiment::TransportSupnorm => transport_supnorm(config, rng, &mut t),
        Experiment::TransportTree => transport_tree(config, rng, &mut t),
        Experiment::ExternalHyperconvex => external_hyperconvex(config, rng, &mut t),
        Experiment::AlphaC => alpha_c(config, rng, &mut t),
        Experiment::AlphaCChain => alpha_c_chain(config, rng, &mut t),
        Experiment::Continuity => continuity(config, rng, &mut t),
    };
    TrialRecord {
        experiment,
        trial,
        digest: if t.digest.is_empty() { "-".into() } else { t.digest },
        quantities: t.quantities,
        error: outcome.err().map(|e| e.to_string()),
    }
}

fn eps_tag(eps: f64) -> String {
    format!("eps={eps}")
}

/// Largest target distance between a map's values on `A` and `full` there.
fn extension_error<T: Target>(f: &PartialMap<T>, full: &[T::Point]) -> f64 {
    f.domain
        .iter()
        .zip(&f.values)
        .map(|(&a, v)| f.target.distance(&full[a], v))
        .fold(0.0, f64::max)
}

/// Replays a sequential extension: the largest excess `d(v_x, v_j) - L d(x, j)`
/// of each point over everything assigned before it.
fn step_residual<T: Target>(
    space: &FiniteMetricSpace,
    target: &T,
    values: &[T::Point],
    domain: &[usize],
    order: &[usize],
    lip: f64,
) -> f64 {
    let mut assigned = domain.to_vec();
    let mut worst = f64::NEG_INFINITY;
    for &x in order {
        for &j in &assigned {
            worst = worst.max(target.distance(&values[x], &values[j]) - lip * space.d(x, j));
        }
        assigned.push(x);
    }
    worst.max(0.0)
}

/// Vertex count for the hull lemmas; the dimension there is always `m`.
fn count(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> usize {
    if config.vary_sizes {
        rng.random_range(1..=config.a_size)
    } else {
        config.a_size
    }
}

fn shuffled_complement<T: Target>(f: &PartialMap<T>, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order = f.complement();
    order.shuffle(rng);
    order
}

fn phi_lsc(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let opts = config.solver_options();
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, 1.0, false)?;
    t.digest = inst.digest();
    let f = inst.euclidean_map()?;
    let f_full = kirszbraun_extend(&f, 1.0, None, &opts)?;
    for &eps in &config.eps {
        let p = eps_tag(eps);
        let delta = phi_delta(&f_full.values, &f.domain, eps)?;
        let g = gen::perturb_within(rng, &f, 0.9 * delta, 1.0)?;
        let out = transport_phi(&f_full, &g, eps, &opts)?.extension;
        t.push(Quantity::info(format!("{p}/delta"), delta));
        t.push(Quantity::info(
            format!("{p}/perturbation"),
            sup_distance_values(&g.target, &f.values, &g.values)?,
        ));
        t.push(Quantity::at_most(format!("{p}/extension_error"), extension_error(&g, &out.values), 0.0));
        t.push(Quantity::at_most(format!("{p}/lip"), out.lip_achieved, 1.0 + 1e-6));
        t.push(Quantity::at_most(
            format!("{p}/sup_distance"),
            sup_distance_values(&g.target, &f_full.values, &out.values)?,
            eps + 1e-6,
        ));
    }
    Ok(())
}

type PsiCase = (PartialMap<Euclidean>, ExtensionResult<Vec<f64>>, PartialMap<Euclidean>);

/// Data on which the patched construction must fire: a copy `x'` of the
/// first domain point is added at distance `rho`, carrying the same value,
/// and `g` pushes the two values apart by `0.9 delta` each, so that
/// `Lip(g, A) >= 1.8 delta / rho > 2 Lip(f, X)`.
fn patched_case(
    rng: &mut ChaCha8Rng,
    points: &[Vec<f64>],
    f: &PartialMap<Euclidean>,
    eps: f64,
    opts: &SolverOptions,
) -> Result<PsiCase> {
    let lip0 = f.lip()?;
    let full0 = kirszbraun_extend(f, lip0, None, opts)?;
    let delta0 = psi_delta(&f.space, &full0.values, &f.domain, eps)?;
    let a1 = f.domain[0];
    let u = gen::unit_vector(rng, points[0].len());
    let w = gen::unit_vector(rng, f.target.dim);
    let mut rho = 0.2 * delta0 / lip0;
    for _ in 0..40 {
        let mut pts = points.to_vec();
        pts.push(vector::add(&points[a1], &vector::scale(&u, rho)));
        let twin = pts.len() - 1;
        let mut domain = f.domain.clone();
        domain.push(twin);
        let mut values = f.values.clone();
        values.push(f.values[0].clone());
        let f2 = EuclideanInstance::new(pts, domain, values)?.to_map()?;
        let lip2 = f2.lip()?;
        let full2 = kirszbraun_extend(&f2, lip2, None, opts)?;
        let delta2 = psi_delta(&f2.space, &full2.values, &f2.domain, eps)?;
        if 1.8 * delta2 > 2.0 * full2.lip_achieved * rho * (1.0 + 1e-6) {
            let push = vector::scale(&w, 0.9 * delta2);
            let mut gv = f2.values.clone();
            gv[0] = vector::add(&f.values[0], &push);
            let last = gv.len() - 1;
            gv[last] = vector::sub(&f.values[0], &push);
            let g = f2.with_values(gv)?;
            return Ok((f2, full2, g));
        }
        rho /= 2.0;
    }
    Err(Error::Precondition("could not force the patched construction".into()))
}

fn psi_lsc(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial, trial: usize) -> Result<()> {
    let opts = config.solver_options();
    let want = match config.psi_branch {
        PsiBranchChoice::Product => PsiBranch::Product,
        PsiBranchChoice::Patched => PsiBranch::Patched,
        PsiBranchChoice::Alternate if trial.is_multiple_of(2) => PsiBranch::Product,
        PsiBranchChoice::Alternate => PsiBranch::Patched,
    };
    let sizes = Sizes::draw(config, rng, 2);
    let inst = gen::vector_instance(rng, sizes, config.lip, false)?;
    t.digest = inst.digest();
    let points = inst.points.clone().unwrap_or_default();
    let base = inst.euclidean_map()?;
    for &eps in &config.eps {
        let p = eps_tag(eps);
        let (f, f_full, g) = match want {
            PsiBranch::Patched => patched_case(rng, &points, &base, eps, &opts)?,
            _ => {
                let lip_a = base.lip()?;
                let f_full = kirszbraun_extend(&base, lip_a, None, &opts)?;
                let delta = psi_delta(&base.space, &f_full.values, &base.domain, eps)?;
                let g = gen::perturb_within(rng, &base, 0.9 * delta, 2.0 * f_full.lip_achieved)?;
                (base.clone(), f_full, g)
            }
        };
        let out = transport_psi(&f_full, &g, eps, &opts)?;
        let lip_g = g.lip()?;
        let ext = &out.extension;
        let code = match out.branch {
            PsiBranch::ConstantProjection => 0.0,
            PsiBranch::Product => 1.0,
            PsiBranch::Patched => 2.0,
        };
        t.push(Quantity::info(format!("{p}/branch"), code));
        t.push(Quantity::at_least(
            format!("{p}/branch_forced"),
            if out.branch == want { 1.0 } else { 0.0 },
            1.0,
        ));
        t.push(Quantity::info(format!("{p}/delta"), out.delta));
        t.push(Quantity::at_most(format!("{p}/extension_error"), extension_error(&g, &ext.values), 0.0));
        t.push(Quantity::at_most(
            format!("{p}/lip_rel_error"),
            (ext.lip_achieved - lip_g).abs() / lip_g,
            1e-6,
        ));
        let dist = sup_distance_values(&g.target, &f_full.values, &ext.values)?;
        t.push(Quantity::at_most(format!("{p}/sup_distance"), dist, eps + 1e-6));
        if out.branch == PsiBranch::Patched {
            let reach = 2.0 * out.delta / lip_g;
            let (mut near, mut far) = (0.0f64, 0.0f64);
            for x in 0..f.space.len() {
                let d = vector::dist(&f_full.values[x], &ext.values[x]);
                if f.value_at(x).is_none() && f.space.dist_to_set(x, &f.domain) >= reach {
                    far = far.max(d);
                } else {
                    near = near.max(d);
                }
            }
            t.push(Quantity::at_most(format!("{p}/far_set_error"), far, 0.0));
            t.push(Quantity::at_most(format!("{p}/near_distance"), near, 4.0 * out.delta));
        }
    }
    Ok(())
}

fn quadrilateral(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let m = config.m;
    let pts = gen::uniform_points(rng, 4, m, -1.0, 1.0);
    t.digest = digest_text(&format!("{pts:?}"));
    let (x, y, u, v) = (&pts[0], &pts[1], &pts[2], &pts[3]);
    t.push(Quantity::at_least("slack", reshetnyak_slack(x, y, u, v), -1e-12));
    t.push(Quantity::at_most("substitution_slack", reshetnyak_slack(x, y, x, y).abs(), 1e-12));
    Ok(())
}

fn projection_stability(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let opts = config.solver_options();
    let m = config.m;
    let k = count(config, rng);
    let z = gen::uniform_points(rng, 1, m, -1.0, 1.0).remove(0);
    let r1 = rng.random_range(0.1..2.0);
    let r2 = rng.random_range(0.1..3.0);
    let v1: Vec<Vec<f64>> = (0..k).map(|_| gen::point_in_ball(rng, &z, r1)).collect();
    let v2: Vec<Vec<f64>> = if rng.random_bool(0.5) {
        (0..k).map(|_| gen::point_in_ball(rng, &z, r1)).collect()
    } else {
        let origin = vec![0.0; m];
        v1.iter()
            .map(|v| vector::add(&vector::lerp_from(&z, v, 0.9), &gen::point_in_ball(rng, &origin, 0.1 * r1)))
            .collect()
    };
    let x = gen::point_in_ball(rng, &z, r2);
    t.digest = digest_text(&format!("{z:?}{r1:?}{r2:?}{v1:?}{v2:?}{x:?}"));
    let h1 = HullVertexSet::new(v1)?;
    let h2 = HullVertexSet::new(v2)?;
    t.push(Quantity::info("hull_hausdorff", hull_hausdorff(&h1, &h2, &opts)?));
    t.push(Quantity::at_least(
        "slack",
        projection_stability_slack(&h1, &h2, &z, r1, &x, r2, &opts)?,
        -1e-9,
    ));
    Ok(())
}

fn hull_contraction(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let opts = config.solver_options();
    let m = config.m;
    let (k1, k2) = (count(config, rng), count(config, rng));
    let v1 = gen::uniform_points(rng, k1, m, -1.0, 1.0);
    let v2 = gen::uniform_points(rng, k2, m, -1.0, 1.0);
    t.digest = digest_text(&format!("{v1:?}{v2:?}"));
    let vertex_level = hausdorff(&Euclidean { dim: m }, &v1, &v2)?;
    let hull_level = hull_hausdorff(&HullVertexSet::new(v1)?, &HullVertexSet::new(v2)?, &opts)?;
    t.push(Quantity::info("hausdorff", vertex_level));
    t.push(Quantity::info("hull_hausdorff", hull_level));
    t.push(Quantity::at_least("slack", vertex_level - hull_level, -1e-9));
    Ok(())
}

fn kirszbraun(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let opts = config.solver_options();
    let lip = config.lip;
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, lip, false)?;
    t.digest = inst.digest();
    let f = inst.euclidean_map()?;
    let orders = [f.complement(), shuffled_complement(&f, rng)];
    for (name, order) in ["ascending", "shuffled"].into_iter().zip(&orders) {
        let ext = kirszbraun_extend(&f, lip, Some(order), &opts)?;
        let replay = step_residual(&f.space, &f.target, &ext.values, &f.domain, order, lip);
        t.push(Quantity::at_most(format!("{name}/step_residual"), replay, 1e-6));
        t.push(Quantity::info(format!("{name}/solver_residual"), ext.max_constraint_violation));
        t.push(Quantity::at_most(format!("{name}/lip_ratio"), ext.lip_achieved / lip, 1.0 + 1e-6));
        t.push(Quantity::at_most(format!("{name}/extension_error"), extension_error(&f, &ext.values), 0.0));
    }
    Ok(())
}

fn tree_extension(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let lip = config.lip;
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::tree_instance(rng, sizes, lip, config.tree_vertices)?;
    t.digest = inst.digest();
    let f = inst.tree_map()?;
    let order = shuffled_complement(&f, rng);
    let ext = lipschitz_extend_tree(&f, lip, Some(&order))?;
    let replay = step_residual(&f.space, &f.target, &ext.values, &f.domain, &order, lip);
    t.push(Quantity::at_most("step_residual", replay, 1e-9));
    t.push(Quantity::at_most("lip_ratio", ext.lip_achieved / lip, 1.0 + 1e-9));
    t.push(Quantity::at_most("extension_error", extension_error(&f, &ext.values), 0.0));
    Ok(())
}

/// A second sup-norm map on the same domain: half the time a perturbation of
/// `f` by at most `size` per coordinate, otherwise fresh values; rescaled to
/// `Lip <= lip` in both cases.
fn companion_supnorm(
    rng: &mut ChaCha8Rng,
    f: &PartialMap<SupNorm>,
    size: f64,
    lip: f64,
) -> Result<PartialMap<SupNorm>> {
    let m = f.target.dim;
    let raw: Vec<Vec<f64>> = if rng.random_bool(0.5) {
        f.values
            .iter()
            .map(|v| v.iter().map(|c| c + rng.random_range(-size..=size)).collect())
            .collect()
    } else {
        gen::uniform_points(rng, f.domain.len(), m, -1.0, 1.0)
    };
    let values = gen::rescale_vectors(&f.space, &f.target, &f.domain, raw, lip)?;
    f.with_values(values)
}

fn midpoint_nonexp(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let lip = config.lip;
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, lip, true)?;
    t.digest = inst.digest();
    let f = inst.supnorm_map()?;
    let g = companion_supnorm(rng, &f, config.perturbation, lip)?;
    let mf = midpoint_operator(&f, lip)?;
    let mg = midpoint_operator(&g, lip)?;
    let input = sup_distance_values(&f.target, &f.values, &g.values)?;
    let output = sup_distance_values(&f.target, &mf.values, &mg.values)?;
    t.push(Quantity::info("input_distance", input));
    t.push(Quantity::at_most("excess", output - input, 1e-12));
    t.push(Quantity::at_most(
        "extension_error",
        extension_error(&f, &mf.values).max(extension_error(&g, &mg.values)),
        0.0,
    ));
    t.push(Quantity::at_most("lip_excess", mf.lip_achieved.max(mg.lip_achieved) - lip, 1e-12));
    Ok(())
}

/// Largest amount by which any coordinate leaves the box.
fn box_violation(b: &CubeBox, values: &[Vec<f64>]) -> f64 {
    values
        .iter()
        .flat_map(|v| {
            v.iter()
                .zip(b.lower().iter().zip(b.upper()))
                .map(|(x, (l, u))| (l - x).max(x - u).max(0.0))
        })
        .fold(0.0, f64::max)
}

fn clamped_hull(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let lip = config.lip;
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, lip, true)?;
    t.digest = inst.digest();
    let f = inst.supnorm_map()?;
    let out = clamped_operator(&f, lip)?;
    let hull = admissible_hull(&f.values)?;
    t.push(Quantity::at_most("containment", box_violation(&hull, &out.values), 0.0));
    t.push(Quantity::at_most("extension_error", extension_error(&f, &out.values), 0.0));
    t.push(Quantity::at_most("lip_excess", out.lip_achieved - lip, 1e-12));
    // Operator behaviour is reported, not bounded.
    let g = companion_supnorm(rng, &f, config.perturbation, lip)?;
    let og = clamped_operator(&g, lip)?;
    let input = sup_distance_values(&f.target, &f.values, &g.values)?;
    let output = sup_distance_values(&f.target, &out.values, &og.values)?;
    t.push(Quantity::info("operator_ratio", output / input));
    Ok(())
}

fn transport_supnorm(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, 1.0, true)?;
    t.digest = inst.digest();
    let f = inst.supnorm_map()?;
    let f_ext = midpoint_operator(&f, 1.0)?;
    let mut g = companion_supnorm(rng, &f, config.perturbation, 1.0)?;
    if rng.random_bool(0.5) {
        // Keep most trials in the small-perturbation regime.
        g = f.with_values(
            gen::rescale_vectors(
                &f.space,
                &f.target,
                &f.domain,
                f.values
                    .iter()
                    .map(|v| v.iter().map(|c| c + rng.random_range(-config.perturbation..=config.perturbation)).collect())
                    .collect(),
                1.0,
            )?,
        )?;
    }
    let r = sup_distance_values(&f.target, &f.values, &g.values)?;
    let order = shuffled_complement(&f, rng);
    let out = transport_extension(&f, &f_ext, &g, Some(&order))?;
    t.push(Quantity::info("input_distance", r));
    t.push(Quantity::at_most(
        "excess",
        sup_distance_values(&f.target, &f_ext.values, &out.values)? - r,
        1e-12,
    ));
    t.push(Quantity::at_most("lip", out.lip_achieved, 1.0 + 1e-12));
    t.push(Quantity::at_most("extension_error", extension_error(&g, &out.values), 0.0));
    let same = transport_extension(&f, &f_ext, &f, Some(&order))?;
    let mismatches = same.values.iter().zip(&f_ext.values).filter(|(a, b)| a != b).count();
    t.push(Quantity::at_most("identity_mismatches", mismatches as f64, 0.0));

    let f_cov = clamped_operator(&f, 1.0)?;
    let inside = transport_extension_in_hull(&f, &f_cov, &g, Some(&order))?;
    t.push(Quantity::at_most(
        "hull/excess",
        sup_distance_values(&f.target, &f_cov.values, &inside.values)? - r,
        1e-12,
    ));
    t.push(Quantity::at_most(
        "hull/containment",
        box_violation(&admissible_hull(&g.values)?, &inside.values),
        1e-12,
    ));
    t.push(Quantity::at_most("hull/lip", inside.lip_achieved, 1.0 + 1e-12));
    Ok(())
}

fn transport_tree(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::tree_instance(rng, sizes, 1.0, config.tree_vertices)?;
    t.digest = inst.digest();
    let f = inst.tree_map()?;
    let tree = f.target.tree.clone();
    let f_ext = lipschitz_extend_tree(&f, 1.0, None)?;
    let moved: Vec<TreePoint> = f
        .values
        .iter()
        .map(|v| {
            let goal = gen::random_tree_point(rng, &tree);
            tree.geodesic_point(v, &goal, rng.random_range(0.0..=config.perturbation))
        })
        .collect();
    let g = f.with_values(gen::rescale_tree_points(&f.space, &tree, &f.domain, moved, 1.0)?)?;
    let r = sup_distance_values(&f.target, &f.values, &g.values)?;
    let order = shuffled_complement(&f, rng);
    let out = transport_extension_tree(&f, &f_ext, &g, Some(&order))?;
    t.push(Quantity::info("input_distance", r));
    t.push(Quantity::at_most(
        "excess",
        sup_distance_values(&f.target, &f_ext.values, &out.values)? - r,
        1e-12,
    ));
    t.push(Quantity::at_most("lip", out.lip_achieved, 1.0 + 1e-9));
    t.push(Quantity::at_most("extension_error", extension_error(&g, &out.values), 0.0));
    let same = transport_extension_tree(&f, &f_ext, &f, Some(&order))?;
    let mismatches = same.values.iter().zip(&f_ext.values).filter(|(a, b)| a != b).count();
    t.push(Quantity::at_most("identity_mismatches", mismatches as f64, 0.0));
    Ok(())
}

fn external_hyperconvex(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, 1.0, true)?;
    t.digest = inst.digest();
    let f = inst.supnorm_map()?;
    let n = f.space.len();
    let m = f.target.dim;
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for x in 0..n {
        let (lo, hi) = envelopes(&f, 1.0, x)?;
        lower.push(lo);
        upper.push(hi);
    }
    let witnesses = [midpoint_operator(&f, 1.0)?.values, lower, upper];
    let p = config.perturbation;
    let mut family: Vec<FamilyMember> = witnesses
        .into_iter()
        .map(|w| {
            let shift: Vec<f64> = (0..m).map(|_| rng.random_range(-p..=p)).collect();
            FamilyMember {
                values: w.iter().map(|v| vector::add(v, &shift)).collect(),
                radius: shift.iter().fold(0.0, |a: f64, c| a.max(c.abs())),
                witness: w,
            }
        })
        .collect();
    for k in 0..family.len() {
        for l in k + 1..family.len() {
            let d = sup_distance_values(&f.target, &family[k].values, &family[l].values)?;
            let deficit = d - family[k].radius - family[l].radius;
            if deficit > 0.0 {
                family[k].radius += deficit / 2.0;
                family[l].radius += deficit / 2.0;
            }
        }
    }
    let order = shuffled_complement(&f, rng);
    let out = external_intersection(&f, &family, Some(&order))?;
    for (k, member) in family.iter().enumerate() {
        let d = sup_distance_values(&f.target, &out.values, &member.values)?;
        t.push(Quantity::info(format!("member{k}/radius"), member.radius));
        t.push(Quantity::at_most(format!("member{k}/excess"), d - member.radius, 1e-9));
    }
    t.push(Quantity::at_most("lip", out.lip_achieved, 1.0 + 1e-12));
    t.push(Quantity::at_most("extension_error", extension_error(&f, &out.values), 0.0));
    Ok(())
}

fn hull_distance(values: &[Vec<f64>], hull: &HullVertexSet, opts: &SolverOptions) -> Result<f64> {
    values
        .iter()
        .try_fold(0.0f64, |acc, v| Ok(acc.max(dist_to_hull(v, hull, opts)?)))
}

fn alpha_c(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let opts = config.solver_options();
    let lip = config.lip;
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, lip, false)?;
    t.digest = inst.digest();
    let f = inst.euclidean_map()?;
    let order = shuffled_complement(&f, rng);
    let ext = kirszbraun_extend(&f, lip, Some(&order), &opts)?;
    let out = alpha_c_compose(&f, &ext, &opts)?;
    let hull = HullVertexSet::new(f.values.clone())?;
    t.push(Quantity::info(
        "moved",
        sup_distance_values(&f.target, &ext.values, &out.values)?,
    ));
    t.push(Quantity::at_most("hull_distance", hull_distance(&out.values, &hull, &opts)?, 1e-7));
    t.push(Quantity::at_most(
        "lip_increase",
        out.lip_achieved - ext.lip_achieved,
        1e-9 * ext.lip_achieved.max(1.0),
    ));
    t.push(Quantity::at_most("extension_error", extension_error(&f, &out.values), 0.0));
    Ok(())
}

fn alpha_c_chain(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let opts = config.solver_options();
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, 1.0, false)?;
    t.digest = inst.digest();
    let f = inst.euclidean_map()?;
    let f_full = alpha_c_compose(&f, &kirszbraun_extend(&f, 1.0, None, &opts)?, &opts)?;
    for &eps in &config.eps {
        let p = eps_tag(eps);
        let third = eps / 3.0;
        let delta = phi_delta(&f_full.values, &f.domain, third)?;
        let g = gen::perturb_within(rng, &f, 0.9 * delta, 1.0)?;
        let g1 = transport_phi(&f_full, &g, third, &opts)?.extension;
        let out = alpha_c_compose(&g, &g1, &opts)?;
        let hull = HullVertexSet::new(g.values.clone())?;
        t.push(Quantity::info(format!("{p}/delta"), delta));
        t.push(Quantity::at_most(
            format!("{p}/first_leg"),
            sup_distance_values(&f.target, &f_full.values, &g1.values)?,
            third + 1e-6,
        ));
        t.push(Quantity::at_most(
            format!("{p}/sup_distance"),
            sup_distance_values(&f.target, &f_full.values, &out.values)?,
            eps + 1e-6,
        ));
        t.push(Quantity::at_most(format!("{p}/hull_distance"), hull_distance(&out.values, &hull, &opts)?, 1e-7));
        t.push(Quantity::at_most(format!("{p}/lip"), out.lip_achieved, 1.0 + 1e-6));
        t.push(Quantity::at_most(format!("{p}/extension_error"), extension_error(&g, &out.values), 0.0));
    }
    Ok(())
}

fn continuity(config: &ExperimentConfig, rng: &mut ChaCha8Rng, t: &mut Trial) -> Result<()> {
    let opts = config.solver_options();
    let sizes = Sizes::draw(config, rng, 1);
    let inst = gen::vector_instance(rng, sizes, 1.0, false)?;
    t.digest = inst.digest();
    let f = inst.euclidean_map()?;
    let kf = kirszbraun_extend(&f, 1.0, None, &opts)?;
    for &eps in &config.eps {
        let p = eps_tag(eps);
        let g = gen::perturb_within(rng, &f, eps, 1.0)?;
        let kg = kirszbraun_extend(&g, 1.0, None, &opts)?;
        let input = sup_distance_values(&f.target, &f.values, &g.values)?;
        let output = sup_distance_values(&f.target, &kf.values, &kg.values)?;
        t.push(Quantity::info(format!("{p}/input_distance"), input));
        t.push(Quantity::info(format!("{p}/output_distance"), output));
        t.push(Quantity::info(format!("{p}/modulus"), output / input));
        t.push(Quantity::at_most(format!("{p}/lip"), kg.lip_achieved, 1.0 + 1e-6));
    }
    Ok(())
}
