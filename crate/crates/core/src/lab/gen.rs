//! Seeded random instances.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::instance::{Instance, InstanceValues, TargetSpec};
use crate::metric::{lip_of_indexed, Euclidean, FiniteMetricSpace, PartialMap, SupNorm, Target};
use crate::tree::{TreePoint, WeightedTree};
use crate::vector;

use super::config::ExperimentConfig;

/// Generator for trial `trial`, seeded from a hash of `(seed, trial)` so the
/// stream does not depend on scheduling.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((trial as u64).to_le_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&h.finalize());
    ChaCha8Rng::from_seed(key)
}

/// Source dimension, target dimension, `|X|` and `|A|` of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sizes {
    pub n: usize,
    pub m: usize,
    pub x: usize,
    pub a: usize,
}

impl Sizes {
    /// The configured sizes, or uniform draws below them when `vary_sizes`
    /// is set. `min_a` raises the lower end for `|A|` (and `|X|`).
    pub fn draw(config: &ExperimentConfig, rng: &mut impl Rng, min_a: usize) -> Sizes {
        let a_cap = config.a_size.max(min_a);
        let x_cap = config.x_size.max(a_cap);
        if !config.vary_sizes {
            return Sizes {
                n: config.n,
                m: config.m,
                x: x_cap,
                a: a_cap,
            };
        }
        let x = rng.random_range(min_a.max(1)..=x_cap);
        let a = rng.random_range(min_a.max(1)..=a_cap.min(x));
        Sizes {
            n: rng.random_range(1..=config.n),
            m: rng.random_range(1..=config.m),
            x,
            a,
        }
    }
}

pub fn uniform_points(rng: &mut impl Rng, count: usize, dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..dim).map(|_| rng.random_range(lo..hi)).collect())
        .collect()
}

/// Uniform point of the closed Euclidean ball `B(center, radius)`.
pub fn point_in_ball(rng: &mut impl Rng, center: &[f64], radius: f64) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..center.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        if vector::norm(&u) <= 1.0 {
            return vector::add(center, &vector::scale(&u, radius));
        }
    }
}

/// Random Euclidean unit vector.
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let u: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = vector::norm(&u);
        if r > 1e-3 && r <= 1.0 {
            return vector::scale(&u, 1.0 / r);
        }
    }
}

/// Sorted random subset of `0..n` of size `k`.
pub fn random_subset(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut out = index::sample(rng, n, k).into_vec();
    out.sort_unstable();
    out
}

/// Rescales values toward their centroid so that `Lip(f, A) <= lip`.
pub fn rescale_vectors<T: Target<Point = Vec<f64>>>(
    space: &FiniteMetricSpace,
    target: &T,
    domain: &[usize],
    values: Vec<Vec<f64>>,
    lip: f64,
) -> Result<Vec<Vec<f64>>> {
    let lip0 = lip_of_indexed(space, target, domain, &values)?;
    if lip0 <= lip {
        return Ok(values);
    }
    let lambda = lip / lip0 * (1.0 - 1e-12);
    let c = vector::mean(&values);
    Ok(values.iter().map(|v| vector::lerp_from(&c, v, lambda)).collect())
}

/// Random tree: vertex `k` hangs off a uniform earlier vertex, edge lengths
/// uniform in `[0.1, 1]`.
pub fn random_tree(rng: &mut impl Rng, vertices: usize) -> Result<(WeightedTree, Vec<(usize, usize, f64)>)> {
    let edges: Vec<(usize, usize, f64)> = (1..vertices)
        .map(|k| (rng.random_range(0..k), k, rng.random_range(0.1..=1.0)))
        .collect();
    Ok((WeightedTree::new(vertices, &edges)?, edges))
}

pub fn random_tree_point(rng: &mut impl Rng, tree: &WeightedTree) -> TreePoint {
    let edge = rng.random_range(0..tree.edges().len());
    let offset = rng.random_range(0.0..=tree.edges()[edge].len);
    tree.point(edge, offset).expect("offset within the edge")
}

/// Contracts values geodesically toward the first one so that `Lip(f, A) <= lip`.
pub fn rescale_tree_points(
    space: &FiniteMetricSpace,
    tree: &WeightedTree,
    domain: &[usize],
    values: Vec<TreePoint>,
    lip: f64,
) -> Result<Vec<TreePoint>> {
    let target = crate::tree::TreeTarget {
        tree: std::sync::Arc::new(tree.clone()),
    };
    let lip0 = lip_of_indexed(space, &target, domain, &values)?;
    if lip0 <= lip {
        return Ok(values);
    }
    let lambda = lip / lip0 * (1.0 - 1e-12);
    let c = values[0];
    Ok(values
        .iter()
        .map(|v| tree.geodesic_point(&c, v, lambda * tree.distance(&c, v)))
        .collect())
}

/// Euclidean source in the unit box, values in `[-1, 1]^m` rescaled to
/// `Lip <= lip`, in the Euclidean or the sup-norm target.
pub fn vector_instance(rng: &mut impl Rng, sizes: Sizes, lip: f64, supnorm: bool) -> Result<Instance> {
    let points = uniform_points(rng, sizes.x, sizes.n, 0.0, 1.0);
    let space = FiniteMetricSpace::from_points(&points)?;
    let domain = random_subset(rng, sizes.x, sizes.a);
    let raw = uniform_points(rng, sizes.a, sizes.m, -1.0, 1.0);
    let (target, values) = if supnorm {
        let t = SupNorm { dim: sizes.m };
        (TargetSpec::SupNorm { dim: sizes.m }, rescale_vectors(&space, &t, &domain, raw, lip)?)
    } else {
        let t = Euclidean { dim: sizes.m };
        (TargetSpec::Euclidean { dim: sizes.m }, rescale_vectors(&space, &t, &domain, raw, lip)?)
    };
    Ok(Instance {
        dist: space.to_table(),
        points: Some(points),
        target,
        domain,
        values: InstanceValues::Vectors(values),
    })
}

/// Euclidean source in the unit box, values on a random tree.
pub fn tree_instance(rng: &mut impl Rng, sizes: Sizes, lip: f64, vertices: usize) -> Result<Instance> {
    let points = uniform_points(rng, sizes.x, sizes.n, 0.0, 1.0);
    let space = FiniteMetricSpace::from_points(&points)?;
    let domain = random_subset(rng, sizes.x, sizes.a);
    let (tree, edges) = random_tree(rng, vertices)?;
    let raw: Vec<TreePoint> = (0..sizes.a).map(|_| random_tree_point(rng, &tree)).collect();
    let values = rescale_tree_points(&space, &tree, &domain, raw, lip)?;
    Ok(Instance {
        dist: space.to_table(),
        points: Some(points),
        target: TargetSpec::Tree { vertices, edges },
        domain,
        values: InstanceValues::Tree(values),
    })
}

/// Instance kinds accepted by [`generate_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Euclidean,
    SupNorm,
    Tree,
}

impl std::str::FromStr for InstanceKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(InstanceKind::Euclidean),
            "supnorm" => Ok(InstanceKind::SupNorm),
            "tree" => Ok(InstanceKind::Tree),
            other => Err(crate::error::Error::Config(format!(
                "unknown instance kind {other:?}; expected euclidean, supnorm or tree"
            ))),
        }
    }
}

/// The instance of trial 0 under `config`.
pub fn generate_instance(config: &ExperimentConfig, kind: InstanceKind) -> Result<Instance> {
    config.validate()?;
    let mut rng = trial_rng(config.seed, 0);
    let sizes = Sizes::draw(config, &mut rng, 1);
    match kind {
        InstanceKind::Euclidean => vector_instance(&mut rng, sizes, config.lip, false),
        InstanceKind::SupNorm => vector_instance(&mut rng, sizes, config.lip, true),
        InstanceKind::Tree => tree_instance(&mut rng, sizes, config.lip, config.tree_vertices),
    }
}

/// `f + size * u_a` with directions `u_a` scaled so the largest has unit
/// length, redrawn up to eight times while the result has `Lip > cap`;
/// after that a common translation, which keeps `Lip(f, A)`.
pub fn perturb_within(
    rng: &mut impl Rng,
    f: &PartialMap<Euclidean>,
    size: f64,
    cap: f64,
) -> Result<PartialMap<Euclidean>> {
    let m = f.target.dim;
    for _ in 0..8 {
        let dirs: Vec<Vec<f64>> = (0..f.domain.len())
            .map(|_| point_in_ball(rng, &vec![0.0; m], 1.0))
            .collect();
        let longest = dirs.iter().map(|u| vector::norm(u)).fold(0.0, f64::max);
        if longest == 0.0 {
            continue;
        }
        let values = f
            .values
            .iter()
            .zip(&dirs)
            .map(|(v, u)| vector::add(v, &vector::scale(u, size / longest)))
            .collect();
        let g = f.with_values(values)?;
        if g.lip()? <= cap {
            return Ok(g);
        }
    }
    let u = vector::scale(&unit_vector(rng, m), size);
    f.with_values(f.values.iter().map(|v| vector::add(v, &u)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(7, 3).random();
        let b: f64 = trial_rng(7, 3).random();
        let c: f64 = trial_rng(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_maps_respect_the_constant() {
        let config = ExperimentConfig::default();
        for trial in 0..50 {
            let mut rng = trial_rng(11, trial);
            let sizes = Sizes::draw(&config, &mut rng, 1);
            let e = vector_instance(&mut rng, sizes, 0.7, false).unwrap();
            let f = e.euclidean_map().unwrap();
            assert!(f.lip().unwrap() <= 0.7);
            let t = tree_instance(&mut rng, sizes, 0.7, 6).unwrap();
            assert!(t.tree_map().unwrap().lip().unwrap() <= 0.7);
        }
    }

    #[test]
    fn total_domain_when_sizes_match() {
        let config = ExperimentConfig {
            x_size: 4,
            a_size: 4,
            ..ExperimentConfig::default()
        };
        let inst = generate_instance(&config, InstanceKind::SupNorm).unwrap();
        assert!(inst.supnorm_map().unwrap().is_total());
    }

    #[test]
    fn same_seed_same_bytes() {
        let config = ExperimentConfig::default();
        let a = generate_instance(&config, InstanceKind::Tree).unwrap().to_json();
        let b = generate_instance(&config, InstanceKind::Tree).unwrap().to_json();
        assert_eq!(a, b);
    }
}
