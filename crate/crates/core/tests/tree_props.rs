use std::sync::Arc;

use lipext::metric::{FiniteMetricSpace, PartialMap};
use lipext::tree::{
    lipschitz_extend_tree, transport_extension_tree, tree_ball_intersection, tree_ball_minimizer,
    tree_balls_pairwise_intersect, TreePoint, TreeTarget, WeightedTree,
};
use proptest::prelude::*;

/// Random tree as parent choices and lengths: vertex `k + 1` hangs off `parents[k] % (k + 1)`.
fn tree_strategy() -> impl Strategy<Value = WeightedTree> {
    (2usize..9).prop_flat_map(|n| {
        (prop::collection::vec(0usize..100, n - 1), prop::collection::vec(0.1..2.0f64, n - 1)).prop_map(
            move |(parents, lens)| {
                let edges: Vec<(usize, usize, f64)> =
                    (0..n - 1).map(|k| (parents[k] % (k + 1), k + 1, lens[k])).collect();
                WeightedTree::new(n, &edges).unwrap()
            },
        )
    })
}

/// Raw `(edge, fraction)` pairs turned into canonical points.
fn place(tree: &WeightedTree, raw: &[(usize, f64)]) -> Vec<TreePoint> {
    raw.iter()
        .map(|&(e, s)| {
            let e = e % tree.edges().len();
            tree.point(e, s * tree.edges()[e].len).unwrap()
        })
        .collect()
}

fn raw_points(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<(usize, f64)>> {
    prop::collection::vec((0usize..100, 0.0..=1.0f64), k)
}

/// Distance between two points by Dijkstra on the graph with both points
/// inserted as extra vertices that split their edges.
fn subdivided_distance(tree: &WeightedTree, p: &TreePoint, q: &TreePoint) -> f64 {
    let n = tree.n_vertices();
    let (sp, sq) = (n, n + 1);
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + 2];
    let add = |a: usize, b: usize, w: f64, adj: &mut Vec<Vec<(usize, f64)>>| {
        adj[a].push((b, w));
        adj[b].push((a, w));
    };
    for (id, e) in tree.edges().iter().enumerate() {
        // Cut points on this edge, sorted by offset.
        let mut cuts: Vec<(f64, usize)> = Vec::new();
        if p.edge == id {
            cuts.push((p.offset, sp));
        }
        if q.edge == id {
            cuts.push((q.offset, sq));
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prev = (0.0, e.u);
        for c in cuts {
            add(prev.1, c.1, c.0 - prev.0, &mut adj);
            prev = c;
        }
        add(prev.1, e.v, e.len - prev.0, &mut adj);
    }
    let mut dist = vec![f64::INFINITY; n + 2];
    let mut done = vec![false; n + 2];
    dist[sp] = 0.0;
    for _ in 0..n + 2 {
        let u = (0..n + 2).filter(|&i| !done[i]).min_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap();
        done[u] = true;
        for &(v, w) in &adj[u] {
            dist[v] = dist[v].min(dist[u] + w);
        }
    }
    dist[sq]
}

/// Largest ratio of tree distance over source distance, straight from the definition.
fn pairwise_lip(tree: &WeightedTree, src: &[f64], vals: &[TreePoint]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..src.len() {
        for j in i + 1..src.len() {
            let dy = tree.distance(&vals[i], &vals[j]);
            if dy > 0.0 {
                best = best.max(dy / (src[i] - src[j]).abs());
            }
        }
    }
    best
}

fn line(xs: &[f64]) -> Arc<FiniteMetricSpace> {
    let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    Arc::new(FiniteMetricSpace::from_points(&pts).unwrap())
}

/// Tree-valued map on the first `a` points of `src` with constant at most `lip`,
/// made by contracting toward the first value.
fn tree_map(tree: &Arc<WeightedTree>, src: &[f64], a: usize, raw: Vec<TreePoint>, lip: f64) -> PartialMap<TreeTarget> {
    let l = pairwise_lip(tree, &src[..a], &raw[..a]);
    let vals: Vec<TreePoint> = if l <= lip {
        raw[..a].to_vec()
    } else {
        let s = lip / l * 0.999;
        raw[..a].iter().map(|v| tree.geodesic_point(&raw[0], v, s * tree.distance(&raw[0], v))).collect()
    };
    let target = TreeTarget { tree: tree.clone() };
    PartialMap::new(line(src), target, (0..a).collect(), vals).unwrap()
}

fn spread(src: &[f64]) -> bool {
    (0..src.len()).all(|i| (i + 1..src.len()).all(|j| (src[i] - src[j]).abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distance_matches_the_subdivided_graph(tree in tree_strategy(), raw in raw_points(2..=2)) {
        let pts = place(&tree, &raw);
        let d = tree.distance(&pts[0], &pts[1]);
        prop_assert!((d - subdivided_distance(&tree, &pts[0], &pts[1])).abs() <= 1e-12);
        prop_assert_eq!(d, tree.distance(&pts[1], &pts[0]));
    }

    #[test]
    fn four_point_condition(tree in tree_strategy(), raw in raw_points(4..=4)) {
        let p = place(&tree, &raw);
        let d = |i: usize, j: usize| tree.distance(&p[i], &p[j]);
        let mut sums = [d(0, 1) + d(2, 3), d(0, 2) + d(1, 3), d(0, 3) + d(1, 2)];
        sums.sort_by(f64::total_cmp);
        // The two largest pair sums agree in a metric tree.
        prop_assert!(sums[2] - sums[1] <= 1e-12 * (1.0 + sums[2]));
    }

    #[test]
    fn geodesic_points_split_the_distance(tree in tree_strategy(), raw in raw_points(2..=2), frac in 0.0..=1.0f64) {
        let pts = place(&tree, &raw);
        let total = tree.distance(&pts[0], &pts[1]);
        let m = tree.geodesic_point(&pts[0], &pts[1], frac * total);
        prop_assert!(tree.is_canonical(&m));
        prop_assert!((tree.distance(&pts[0], &m) - frac * total).abs() <= 1e-12 * (1.0 + total));
        prop_assert!((tree.distance(&m, &pts[1]) - (1.0 - frac) * total).abs() <= 1e-12 * (1.0 + total));
    }

    #[test]
    fn ball_intersection_agrees_with_the_pairwise_test(tree in tree_strategy(), raw in raw_points(1..=5), radii in prop::collection::vec(0.0..2.0f64, 5)) {
        let balls: Vec<(TreePoint, f64)> = place(&tree, &raw).into_iter().zip(radii).collect();
        let common = tree_ball_intersection(&tree, &balls);
        prop_assert_eq!(common.is_some(), tree_balls_pairwise_intersect(&tree, &balls));
        if let Some(p) = common {
            let slack = 1e-12 * (1.0 + tree.total_length() + 2.0);
            prop_assert!(balls.iter().all(|(c, r)| tree.distance(c, &p) <= r + slack));
        }
    }

    #[test]
    fn minimizer_beats_dense_sampling(tree in tree_strategy(), raw in raw_points(1..=4), radii in prop::collection::vec(0.0..2.0f64, 4)) {
        let balls: Vec<(TreePoint, f64)> = place(&tree, &raw).into_iter().zip(radii).collect();
        let (p, h) = tree_ball_minimizer(&tree, &balls).unwrap();
        let excess = |q: &TreePoint| balls.iter().map(|(c, r)| tree.distance(c, q) - r).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((excess(&p) - h).abs() <= 1e-12);
        for (id, e) in tree.edges().iter().enumerate() {
            for k in 0..=64 {
                let q = tree.point(id, e.len * k as f64 / 64.0).unwrap();
                prop_assert!(h <= excess(&q) + 1e-12);
            }
        }
    }

    #[test]
    fn extension_audit(tree in tree_strategy(), src in prop::collection::vec(0.0..3.0f64, 2..=8), raw in raw_points(8..=8), a in 1usize..=4, lip in 0.3..2.0f64) {
        prop_assume!(spread(&src));
        let a = a.min(src.len());
        let tree = Arc::new(tree);
        let f = tree_map(&tree, &src, a, place(&tree, &raw), lip);
        let ext = lipschitz_extend_tree(&f, lip, None).unwrap();
        prop_assert!(pairwise_lip(&tree, &src, &ext.values) <= lip * (1.0 + 1e-9));
        for (k, &i) in f.domain.iter().enumerate() {
            prop_assert_eq!(ext.values[i], f.values[k]);
        }
    }

    #[test]
    fn transport_audit(tree in tree_strategy(), src in prop::collection::vec(0.0..3.0f64, 2..=8), raw in raw_points(8..=8), moves in raw_points(8..=8), a in 1usize..=4, step in 0.0..0.5f64) {
        prop_assume!(spread(&src));
        let a = a.min(src.len());
        let tree = Arc::new(tree);
        let f = tree_map(&tree, &src, a, place(&tree, &raw), 1.0);
        let goals = place(&tree, &moves);
        let moved: Vec<TreePoint> = f.values.iter().zip(&goals).map(|(v, q)| tree.geodesic_point(v, q, step)).collect();
        let g = tree_map(&tree, &src, a, moved, 1.0);
        let f_ext = lipschitz_extend_tree(&f, 1.0, None).unwrap();
        let out = transport_extension_tree(&f, &f_ext, &g, None).unwrap();
        let r = f.values.iter().zip(&g.values).map(|(p, q)| tree.distance(p, q)).fold(0.0, f64::max);
        let moved_by = f_ext.values.iter().zip(&out.values).map(|(p, q)| tree.distance(p, q)).fold(0.0, f64::max);
        prop_assert!(moved_by <= r + 1e-12);
        prop_assert!(pairwise_lip(&tree, &src, &out.values) <= 1.0 + 1e-9);
        for (k, &i) in g.domain.iter().enumerate() {
            prop_assert_eq!(out.values[i], g.values[k]);
        }
        prop_assert_eq!(transport_extension_tree(&f, &f_ext, &f, None).unwrap().values, f_ext.values);
    }
}

#[test]
fn transport_with_perturbation_a_quarter() {
    // A star with three arms; values move a quarter along the geodesic to
    // the far end of another arm.
    let tree = Arc::new(WeightedTree::new(4, &[(0, 1, 1.0), (0, 2, 1.5), (0, 3, 0.8)]).unwrap());
    let src = [0.0, 0.7, 1.3, 2.0, 3.1];
    let raw = vec![tree.point(0, 0.2).unwrap(), tree.point(1, 0.6).unwrap(), tree.point(0, 0.9).unwrap()];
    let f = tree_map(&tree, &src, 3, raw, 1.0);
    let far = tree.vertex_point(2);
    let moved: Vec<TreePoint> = f.values.iter().map(|v| tree.geodesic_point(v, &far, 0.25)).collect();
    let g = tree_map(&tree, &src, 3, moved, 1.0);
    let f_ext = lipschitz_extend_tree(&f, 1.0, None).unwrap();
    let out = transport_extension_tree(&f, &f_ext, &g, None).unwrap();
    let d = f_ext.values.iter().zip(&out.values).map(|(p, q)| tree.distance(p, q)).fold(0.0, f64::max);
    assert!(d <= 0.25 + 1e-12, "{d}");
}
