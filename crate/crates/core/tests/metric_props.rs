use std::sync::Arc;

use lipext::metric::{
    hausdorff, lip_constant, product_distance, sup_distance, validate_metric, Euclidean, FiniteMetricSpace,
    PartialMap, SupNorm, Target,
};
use proptest::prelude::*;

fn points(count: std::ops::RangeInclusive<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, dim), count)
}

/// Shortest-path closure of a complete graph with the given edge weights.
fn floyd_warshall(n: usize, weights: &[f64]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    let mut w = weights.iter();
    for i in 0..n {
        for j in i + 1..n {
            let x = *w.next().unwrap();
            d[i][j] = x;
            d[j][i] = x;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn brute_sup<T: Target>(t: &T, f: &[T::Point], g: &[T::Point]) -> f64 {
    f.iter().zip(g).map(|(a, b)| t.distance(a, b)).fold(0.0, f64::max)
}

fn brute_one_sided(p: &[Vec<f64>], q: &[Vec<f64>]) -> f64 {
    let t = Euclidean { dim: p[0].len() };
    p.iter()
        .map(|a| q.iter().map(|b| t.distance(a, b)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn shortest_path_closures_are_metrics(n in 1usize..8, seed in prop::collection::vec(0.0..10.0f64, 28)) {
        let table = floyd_warshall(n, &seed[..n * (n - 1) / 2]);
        prop_assert!(validate_metric(&table).is_ok());
    }

    #[test]
    fn sup_distance_matches_enumeration(pair in (1usize..4).prop_flat_map(|m| (points(2..=8, 1), Just(m)))
        .prop_flat_map(|(src, m)| {
            let k = src.len();
            (Just(src), points(k..=k, m), points(k..=k, m), Just(m))
        }))
    {
        let (src, f, g, m) = pair;
        let space = Arc::new(FiniteMetricSpace::from_points(&src).unwrap());
        let fe = PartialMap::total(space.clone(), Euclidean { dim: m }, f.clone()).unwrap();
        let ge = PartialMap::total(space.clone(), Euclidean { dim: m }, g.clone()).unwrap();
        prop_assert_eq!(sup_distance(&fe, &ge).unwrap(), brute_sup(&Euclidean { dim: m }, &f, &g));
        let fs = PartialMap::total(space.clone(), SupNorm { dim: m }, f.clone()).unwrap();
        let gs = PartialMap::total(space, SupNorm { dim: m }, g.clone()).unwrap();
        prop_assert_eq!(sup_distance(&fs, &gs).unwrap(), brute_sup(&SupNorm { dim: m }, &f, &g));
    }

    #[test]
    fn lip_constant_is_monotone_in_the_subset(src in points(3..=8, 2), vals in points(8..=8, 2), cut in 2usize..8) {
        let k = src.len();
        let space = Arc::new(FiniteMetricSpace::from_points(&src).unwrap());
        // Coincident source points with different values have no finite constant.
        prop_assume!((0..k).all(|i| (i + 1..k).all(|j| space.d(i, j) > 1e-9)));
        let f = PartialMap::total(space, Euclidean { dim: 2 }, vals[..k].to_vec()).unwrap();
        let all: Vec<usize> = (0..k).collect();
        let part: Vec<usize> = (0..cut.min(k)).collect();
        prop_assert!(lip_constant(&f, &part).unwrap() <= lip_constant(&f, &all).unwrap());
    }

    #[test]
    fn hausdorff_is_a_metric_on_finite_sets(p in points(1..=5, 2), q in points(1..=5, 2), r in points(1..=5, 2)) {
        let t = Euclidean { dim: 2 };
        let pq = hausdorff(&t, &p, &q).unwrap();
        prop_assert_eq!(hausdorff(&t, &p, &p).unwrap(), 0.0);
        prop_assert_eq!(pq, hausdorff(&t, &q, &p).unwrap());
        prop_assert_eq!(pq, brute_one_sided(&p, &q).max(brute_one_sided(&q, &p)));
        let via = hausdorff(&t, &p, &r).unwrap() + hausdorff(&t, &r, &q).unwrap();
        prop_assert!(pq <= via * (1.0 + 1e-12));
    }

    #[test]
    fn product_distance_dominates_both_factors(src in points(2..=4, 2), a in prop::array::uniform2(-3.0..3.0f64), b in prop::array::uniform2(-3.0..3.0f64)) {
        let space = FiniteMetricSpace::from_points(&src).unwrap();
        let d = product_distance(&space, 0, a, 1, b);
        prop_assert!(d >= space.d(0, 1));
        prop_assert!(d >= (a[0] - b[0]).hypot(a[1] - b[1]));
        prop_assert!(d <= space.d(0, 1) + (a[0] - b[0]).hypot(a[1] - b[1]) + 1e-12);
    }
}
