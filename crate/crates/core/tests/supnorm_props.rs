use std::sync::Arc;

use lipext::lab::gen::trial_rng;
use lipext::metric::{ExtensionResult, FiniteMetricSpace, PartialMap, SupNorm};
use lipext::supnorm::{
    admissible_hull, ball_intersection, balls_pairwise_intersect, clamped_operator, envelopes, external_intersection,
    midpoint_operator, transport_extension, Box as CubeBox, FamilyMember,
};
use proptest::prelude::*;
use rand::Rng;

fn points(count: std::ops::RangeInclusive<usize>, dim: usize, r: f64) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-r..r, dim), count)
}

fn dinf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn sup(f: &[Vec<f64>], g: &[Vec<f64>]) -> f64 {
    f.iter().zip(g).map(|(a, b)| dinf(a, b)).fold(0.0, f64::max)
}

/// Largest ratio `d_inf(f(i), f(j)) / d(i, j)` over pairs of `idx`.
fn lip_on(src: &[Vec<f64>], idx: &[usize], vals: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            let dy = dinf(&vals[a], &vals[b]);
            if dy > 0.0 {
                best = best.max(dy / dist(&src[idx[a]], &src[idx[b]]));
            }
        }
    }
    best
}

fn shrink(src: &[Vec<f64>], idx: &[usize], vals: Vec<Vec<f64>>, lip: f64) -> Vec<Vec<f64>> {
    let l = lip_on(src, idx, &vals);
    if l <= lip {
        return vals;
    }
    let s = lip / l * 0.999;
    let c = vals[0].clone();
    vals.iter()
        .map(|v| v.iter().zip(&c).map(|(x, o)| o + s * (x - o)).collect())
        .collect()
}

fn separated(src: &[Vec<f64>]) -> bool {
    (0..src.len()).all(|i| (i + 1..src.len()).all(|j| dist(&src[i], &src[j]) > 1e-3))
}

/// Two nonexpansive maps on the same random domain prefix.
fn map_pair() -> impl Strategy<Value = (PartialMap<SupNorm>, PartialMap<SupNorm>)> {
    (1usize..=3, 2usize..=8)
        .prop_flat_map(|(m, x)| (points(x..=x, 2, 1.0), points(5..=5, m, 1.0), points(5..=5, m, 1.0), 1..=x.min(5)))
        .prop_filter("separated sources", |(src, ..)| separated(src))
        .prop_map(|(src, fv, gv, a)| {
            let m = fv[0].len();
            let idx: Vec<usize> = (0..a).collect();
            let space = Arc::new(FiniteMetricSpace::from_points(&src).unwrap());
            let f = shrink(&src, &idx, fv[..a].to_vec(), 1.0);
            let g = shrink(&src, &idx, gv[..a].to_vec(), 1.0);
            (
                PartialMap::new(space.clone(), SupNorm { dim: m }, idx.clone(), f).unwrap(),
                PartialMap::new(space, SupNorm { dim: m }, idx, g).unwrap(),
            )
        })
}

fn extends(f: &PartialMap<SupNorm>, values: &[Vec<f64>]) -> bool {
    f.domain.iter().zip(&f.values).all(|(&a, v)| &values[a] == v)
}

fn line(xs: &[f64]) -> Arc<FiniteMetricSpace> {
    let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    Arc::new(FiniteMetricSpace::from_points(&pts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn midpoint_operator_is_nonexpansive((f, g) in map_pair()) {
        let mf = midpoint_operator(&f, 1.0).unwrap();
        let mg = midpoint_operator(&g, 1.0).unwrap();
        prop_assert!(sup(&mf.values, &mg.values) <= sup(&f.values, &g.values) + 1e-12);
        prop_assert!(extends(&f, &mf.values) && extends(&g, &mg.values));
        prop_assert!(mf.lip_achieved <= 1.0 + 1e-12);
    }

    #[test]
    fn envelopes_bracket_every_extension((f, _) in map_pair()) {
        let mid = midpoint_operator(&f, 1.0).unwrap();
        for x in 0..f.space.len() {
            let (lo, hi) = envelopes(&f, 1.0, x).unwrap();
            for k in 0..lo.len() {
                prop_assert!(lo[k] <= hi[k]);
                prop_assert!(lo[k] <= mid.values[x][k] && mid.values[x][k] <= hi[k]);
            }
        }
    }

    #[test]
    fn clamped_operator_stays_in_the_hull((f, _) in map_pair()) {
        let out = clamped_operator(&f, 1.0).unwrap();
        let hull = admissible_hull(&f.values).unwrap();
        prop_assert!(out.values.iter().all(|v| hull.contains(v)));
        prop_assert!(extends(&f, &out.values));
        prop_assert!(out.lip_achieved <= 1.0 + 1e-12);
    }

    #[test]
    fn ball_intersection_agrees_with_the_pairwise_test(
        centers in points(1..=5, 2, 2.0),
        radii in prop::collection::vec(0.0..1.5f64, 5),
    ) {
        let balls: Vec<(Vec<f64>, f64)> = centers.into_iter().zip(radii).collect();
        let common = ball_intersection(&balls);
        prop_assert_eq!(common.is_some(), balls_pairwise_intersect(&balls));
        if let Some(b) = common {
            for corner in [b.lower().to_vec(), b.upper().to_vec()] {
                prop_assert!(balls.iter().all(|(c, r)| dinf(c, &corner) <= r + 1e-12));
            }
        }
    }

    #[test]
    fn hull_radius_is_a_lower_bound(set in points(1..=6, 3, 2.0), probes in points(20..=20, 3, 3.0)) {
        let b = admissible_hull(&set).unwrap();
        for y in &probes {
            let r = set.iter().map(|a| dinf(y, a)).fold(0.0, f64::max);
            prop_assert!(r >= b.circumradius() - 1e-12);
        }
    }

    #[test]
    fn transport_stays_within_the_input_distance((f, g) in map_pair()) {
        let f_ext = midpoint_operator(&f, 1.0).unwrap();
        let out = transport_extension(&f, &f_ext, &g, None).unwrap();
        prop_assert!(sup(&f_ext.values, &out.values) <= sup(&f.values, &g.values) + 1e-12);
        prop_assert!(extends(&g, &out.values));
        prop_assert!(out.lip_achieved <= 1.0 + 1e-12);
        prop_assert_eq!(transport_extension(&f, &f_ext, &f, None).unwrap().values, f_ext.values);
    }
}

#[test]
fn hull_of_two_points_against_sampled_cubes() {
    let pts = [vec![0.0, 0.0], vec![2.0, 1.0]];
    let hull = admissible_hull(&pts).unwrap();
    let mut rng = trial_rng(3, 0);
    let mut common = CubeBox::cube(&[1.0, 0.5], 100.0);
    for _ in 0..10_000 {
        let c = vec![rng.random_range(-3.0..5.0), rng.random_range(-3.0..4.0)];
        // Half the cubes are tight: a face touches the farther point.
        let tight = pts.iter().map(|p| dinf(&c, p)).fold(0.0, f64::max);
        let r = if rng.random_bool(0.5) { tight } else { tight + rng.random_range(0.0..1.0) };
        common = common.intersect(&CubeBox::cube(&c, r)).expect("both points lie in every cube");
    }
    for k in 0..2 {
        assert!(common.lower()[k] <= hull.lower()[k] + 1e-12);
        assert!(common.upper()[k] >= hull.upper()[k] - 1e-12);
        assert!(hull.lower()[k] - common.lower()[k] < 0.05, "{common:?}");
        assert!(common.upper()[k] - hull.upper()[k] < 0.05, "{common:?}");
    }
    assert_eq!(hull.lower(), &[0.0, 0.0]);
    assert_eq!(hull.upper(), &[2.0, 1.0]);
}

#[test]
fn midpoint_witness_at_distance_point_two() {
    let space = line(&[0.0, 0.5, 1.0, 2.5]);
    let f = PartialMap::new(space, SupNorm { dim: 2 }, vec![0, 2], vec![vec![0.0, 0.0], vec![0.5, 0.8]]).unwrap();
    let g = f.with_values(vec![vec![0.2, -0.1], vec![0.5, 0.6]]).unwrap();
    assert!((sup(&f.values, &g.values) - 0.2).abs() < 1e-15);
    let out_f = midpoint_operator(&f, 1.0).unwrap();
    let out_g = midpoint_operator(&g, 1.0).unwrap();
    assert!(sup(&out_f.values, &out_g.values) <= 0.2 + 1e-12);
}

#[test]
fn clamped_operator_keeps_midpoints_inside_the_box() {
    // Values spread far enough apart that the midpoint never leaves their box.
    let space = line(&[0.0, 1.0, 2.0]);
    let f = PartialMap::new(space, SupNorm { dim: 1 }, vec![0, 2], vec![vec![0.0], vec![2.0]]).unwrap();
    assert_eq!(clamped_operator(&f, 1.0).unwrap().values, midpoint_operator(&f, 1.0).unwrap().values);
    let c = f.with_values(vec![vec![0.7], vec![0.7]]).unwrap();
    assert!(clamped_operator(&c, 3.0).unwrap().values.iter().all(|v| v == &vec![0.7]));
}

#[test]
fn transport_on_a_six_point_instance() {
    let mut rng = trial_rng(17, 0);
    for _ in 0..50 {
        let src: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
        let idx = vec![0, 1, 2];
        let raw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
            (0..3).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()
        };
        let fv = shrink(&src, &idx, raw(&mut rng), 1.0);
        let space = Arc::new(FiniteMetricSpace::from_points(&src).unwrap());
        let f = PartialMap::new(space, SupNorm { dim: 2 }, idx.clone(), fv.clone()).unwrap();
        let gv: Vec<Vec<f64>> = fv.iter().map(|v| v.iter().map(|c| c + rng.random_range(-0.3..=0.3)).collect()).collect();
        let g = f.with_values(shrink(&src, &idx, gv, 1.0)).unwrap();
        let f_ext = midpoint_operator(&f, 1.0).unwrap();
        let out = transport_extension(&f, &f_ext, &g, None).unwrap();
        assert!(extends(&g, &out.values));
        assert!(lip_on(&src, &[0, 1, 2, 3, 4, 5], &out.values) <= 1.0 + 1e-12);
        assert!(sup(&f_ext.values, &out.values) <= sup(&f.values, &g.values) + 1e-12);
    }
}

#[test]
fn family_of_two_copies() {
    let space = line(&[0.0, 1.0, 3.0]);
    let f = PartialMap::new(space, SupNorm { dim: 1 }, vec![0, 2], vec![vec![0.0], vec![1.0]]).unwrap();
    let ext: ExtensionResult<Vec<f64>> = midpoint_operator(&f, 1.0).unwrap();
    let member = FamilyMember {
        values: ext.values.clone(),
        radius: 0.5,
        witness: ext.values.clone(),
    };
    let out = external_intersection(&f, &[member.clone(), member], None).unwrap();
    assert!(sup(&out.values, &ext.values) <= 0.5);
    assert!(extends(&f, &out.values));
}

#[test]
fn random_three_member_families() {
    let mut rng = trial_rng(29, 0);
    for _ in 0..100 {
        let src: Vec<Vec<f64>> = (0..7).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let idx = vec![0, 1, 2];
        let fv = shrink(&src, &idx, (0..3).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect(), 1.0);
        let space = Arc::new(FiniteMetricSpace::from_points(&src).unwrap());
        let f = PartialMap::new(space, SupNorm { dim: 2 }, idx, fv).unwrap();
        let mid = midpoint_operator(&f, 1.0).unwrap().values;
        let n = src.len();
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for x in 0..n {
            let (l, h) = envelopes(&f, 1.0, x).unwrap();
            lo.push(l);
            hi.push(h);
        }
        let mut family: Vec<FamilyMember> = [mid, lo, hi]
            .into_iter()
            .map(|w| {
                let t = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
                FamilyMember {
                    values: w.iter().map(|v| vec![v[0] + t[0], v[1] + t[1]]).collect(),
                    radius: t[0].abs().max(t[1].abs()),
                    witness: w,
                }
            })
            .collect();
        for k in 0..3 {
            for l in k + 1..3 {
                let gap = sup(&family[k].values, &family[l].values) - family[k].radius - family[l].radius;
                if gap > 0.0 {
                    family[k].radius += gap / 2.0 + 1e-15;
                    family[l].radius += gap / 2.0 + 1e-15;
                }
            }
        }
        let out = external_intersection(&f, &family, None).unwrap();
        for m in &family {
            assert!(sup(&out.values, &m.values) <= m.radius + 1e-9);
        }
        assert!(extends(&f, &out.values));
    }
}
