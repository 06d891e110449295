//! Finite weighted trees as targets.
//!
//! A point is an edge id plus an offset measured from the lower-id endpoint.
//! Vertices are stored on their lowest-id incident edge so every geometric
//! point has exactly one representation. Along a fixed edge the distance to a
//! fixed point is linear with slope `+1`, `-1`, or a `|t - o|` kink, which
//! keeps every ball problem piecewise linear and exactly solvable.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric::{lip_full, sup_distance_values, ExtensionResult, PartialMap, Target, LIP_REL_TOL};

/// Edge `(u, v, length)` with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub len: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTree {
    n_vertices: usize,
    edges: Vec<Edge>,
    /// Incident edge ids per vertex, ascending.
    incident: Vec<Vec<usize>>,
    vdist: Vec<Vec<f64>>,
    /// `parent[root][v]`: next vertex on the path from `v` toward `root`.
    parent: Vec<Vec<usize>>,
}

/// Canonical point of a [`WeightedTree`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreePoint {
    pub edge: usize,
    pub offset: f64,
}

impl WeightedTree {
    /// Builds the tree from `(u, v, len)` triples; at least one edge.
    pub fn new(n_vertices: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n_vertices < 2 || edges.len() + 1 != n_vertices {
            return Err(Error::InvalidDomain(format!(
                "a tree on {n_vertices} vertices needs {} edges and at least one, got {}",
                n_vertices.saturating_sub(1),
                edges.len()
            )));
        }
        let mut norm = Vec::with_capacity(edges.len());
        let mut incident = vec![Vec::new(); n_vertices];
        for (id, &(a, b, len)) in edges.iter().enumerate() {
            if a >= n_vertices || b >= n_vertices || a == b {
                return Err(Error::InvalidDomain(format!("edge {id} has bad endpoints ({a}, {b})")));
            }
            if !(len > 0.0 && len.is_finite()) {
                return Err(Error::InvalidDomain(format!("edge {id} has non-positive length {len}")));
            }
            norm.push(Edge {
                u: a.min(b),
                v: a.max(b),
                len,
            });
            incident[a].push(id);
            incident[b].push(id);
        }

        let mut vdist = vec![vec![f64::INFINITY; n_vertices]; n_vertices];
        let mut parent = vec![vec![usize::MAX; n_vertices]; n_vertices];
        for root in 0..n_vertices {
            vdist[root][root] = 0.0;
            parent[root][root] = root;
            let mut stack = vec![root];
            while let Some(w) = stack.pop() {
                for &e in &incident[w] {
                    let Edge { u, v, len } = norm[e];
                    let other = if u == w { v } else { u };
                    if parent[root][other] == usize::MAX {
                        parent[root][other] = w;
                        vdist[root][other] = vdist[root][w] + len;
                        stack.push(other);
                    }
                }
            }
            if parent[root].contains(&usize::MAX) {
                return Err(Error::InvalidDomain("edge list is not connected".into()));
            }
        }
        Ok(WeightedTree {
            n_vertices,
            edges: norm,
            incident,
            vdist,
            parent,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_distance(&self, a: usize, b: usize) -> f64 {
        self.vdist[a][b]
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.len).sum()
    }

    pub fn vertex_point(&self, w: usize) -> TreePoint {
        let edge = self.incident[w][0];
        let offset = if self.edges[edge].u == w { 0.0 } else { self.edges[edge].len };
        TreePoint { edge, offset }
    }

    /// Canonical point at `offset` along `edge`.
    pub fn point(&self, edge: usize, offset: f64) -> Result<TreePoint> {
        let e = self
            .edges
            .get(edge)
            .ok_or_else(|| Error::InvalidPoint(format!("edge {edge} does not exist")))?;
        if !(0.0..=e.len).contains(&offset) {
            return Err(Error::InvalidPoint(format!(
                "offset {offset} outside [0, {}] on edge {edge}",
                e.len
            )));
        }
        Ok(self.canonical(edge, offset))
    }

    fn canonical(&self, edge: usize, offset: f64) -> TreePoint {
        let e = self.edges[edge];
        if offset <= 0.0 {
            self.vertex_point(e.u)
        } else if offset >= e.len {
            self.vertex_point(e.v)
        } else {
            TreePoint { edge, offset }
        }
    }

    pub fn is_canonical(&self, p: &TreePoint) -> bool {
        p.edge < self.edges.len()
            && (0.0..=self.edges[p.edge].len).contains(&p.offset)
            && self.canonical(p.edge, p.offset) == *p
    }

    /// Distances from `p` to the two endpoints of its edge.
    fn to_ends(&self, p: &TreePoint) -> (f64, f64) {
        let e = self.edges[p.edge];
        (p.offset, e.len - p.offset)
    }

    /// Distance from `p` to vertex `w`.
    pub fn distance_to_vertex(&self, p: &TreePoint, w: usize) -> f64 {
        let e = self.edges[p.edge];
        let (du, dv) = self.to_ends(p);
        (du + self.vdist[e.u][w]).min(dv + self.vdist[e.v][w])
    }

    pub fn distance(&self, p: &TreePoint, q: &TreePoint) -> f64 {
        if p.edge == q.edge {
            return (p.offset - q.offset).abs();
        }
        // Fixed argument order keeps the rounding symmetric.
        let (p, q) = if p.edge < q.edge { (p, q) } else { (q, p) };
        let e = self.edges[q.edge];
        let (du, dv) = self.to_ends(q);
        (self.distance_to_vertex(p, e.u) + du).min(self.distance_to_vertex(p, e.v) + dv)
    }

    fn vertex_path(&self, from: usize, to: usize) -> Vec<usize> {
        let mut path = vec![from];
        let mut w = from;
        while w != to {
            w = self.parent[to][w];
            path.push(w);
        }
        path
    }

    fn edge_between(&self, a: usize, b: usize) -> usize {
        *self.incident[a]
            .iter()
            .find(|&&e| {
                let Edge { u, v, .. } = self.edges[e];
                (u == a && v == b) || (u == b && v == a)
            })
            .expect("adjacent vertices")
    }

    /// The point at distance `t` from `p` on the geodesic to `q`; `t` is
    /// clamped to `[0, d(p, q)]`.
    pub fn geodesic_point(&self, p: &TreePoint, q: &TreePoint, t: f64) -> TreePoint {
        let total = self.distance(p, q);
        let t = t.clamp(0.0, total);
        if p.edge == q.edge {
            let offset = if q.offset >= p.offset { p.offset + t } else { p.offset - t };
            return self.canonical(p.edge, offset);
        }
        let ep = self.edges[p.edge];
        let eq = self.edges[q.edge];
        // Leave p's edge through the endpoint closer to q, enter q's edge
        // through the endpoint closer to p.
        let (exit, exit_len) = if p.offset + self.distance_to_vertex(q, ep.u)
            <= (ep.len - p.offset) + self.distance_to_vertex(q, ep.v)
        {
            (ep.u, p.offset)
        } else {
            (ep.v, ep.len - p.offset)
        };
        if t <= exit_len {
            let offset = if exit == ep.u { p.offset - t } else { p.offset + t };
            return self.canonical(p.edge, offset);
        }
        let entry = if self.distance_to_vertex(p, eq.u) + q.offset
            <= self.distance_to_vertex(p, eq.v) + (eq.len - q.offset)
        {
            eq.u
        } else {
            eq.v
        };
        let mut walked = exit_len;
        let path = self.vertex_path(exit, entry);
        for pair in path.windows(2) {
            let e = self.edge_between(pair[0], pair[1]);
            let len = self.edges[e].len;
            if t <= walked + len {
                let s = t - walked;
                let offset = if self.edges[e].u == pair[0] { s } else { len - s };
                return self.canonical(e, offset);
            }
            walked += len;
        }
        let s = t - walked;
        let offset = if entry == eq.u { s } else { eq.len - s };
        self.canonical(q.edge, offset.clamp(0.0, eq.len))
    }
}

/// Target wrapper so tree-valued maps reuse [`PartialMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTarget {
    pub tree: Arc<WeightedTree>,
}

impl Target for TreeTarget {
    type Point = TreePoint;

    fn distance(&self, p: &TreePoint, q: &TreePoint) -> f64 {
        self.tree.distance(p, q)
    }

    fn check_point(&self, p: &TreePoint) -> Result<()> {
        if self.tree.is_canonical(p) {
            Ok(())
        } else {
            Err(Error::InvalidPoint(format!(
                "({}, {}) is not a canonical tree point",
                p.edge, p.offset
            )))
        }
    }
}

/// Slopes and intercepts of `t -> max_j (d(p(t), c_j) - r_j)` on one edge:
/// the function is `max(t + plus, minus - t)`.
fn edge_pieces(tree: &WeightedTree, edge: usize, balls: &[(TreePoint, f64)]) -> (f64, f64) {
    let e = tree.edges[edge];
    let mut plus = f64::NEG_INFINITY;
    let mut minus = f64::NEG_INFINITY;
    for (c, r) in balls {
        if c.edge == edge {
            plus = plus.max(-c.offset - r);
            minus = minus.max(c.offset - r);
        } else {
            let du = tree.distance_to_vertex(c, e.u);
            let dv = tree.distance_to_vertex(c, e.v);
            if du <= dv {
                plus = plus.max(du - r);
            } else {
                minus = minus.max(e.len + dv - r);
            }
        }
    }
    (plus, minus)
}

/// Exact minimizer of `h(p) = max_j (d(p, c_j) - r_j)` with its value; ties
/// go to the lowest edge id, then the lowest offset.
pub fn tree_ball_minimizer(tree: &WeightedTree, balls: &[(TreePoint, f64)]) -> Result<(TreePoint, f64)> {
    if balls.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut best: Option<(usize, f64, f64)> = None;
    for (id, e) in tree.edges.iter().enumerate() {
        let (plus, minus) = edge_pieces(tree, id, balls);
        let t = if plus == f64::NEG_INFINITY {
            e.len
        } else if minus == f64::NEG_INFINITY {
            0.0
        } else {
            ((minus - plus) / 2.0).clamp(0.0, e.len)
        };
        let h = (t + plus).max(minus - t);
        if best.is_none_or(|(_, _, b)| h < b) {
            best = Some((id, t, h));
        }
    }
    let (edge, t, h) = best.expect("tree has an edge");
    Ok((tree.canonical(edge, t), h))
}

fn feasibility_slack(tree: &WeightedTree, balls: &[(TreePoint, f64)]) -> f64 {
    let r_max = balls.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    1e-12 * (1.0 + tree.total_length() + r_max)
}

/// A point in every ball `B(c_j, r_j)`, or `None` when the balls miss each other.
pub fn tree_ball_intersection(tree: &WeightedTree, balls: &[(TreePoint, f64)]) -> Option<TreePoint> {
    let (p, h) = tree_ball_minimizer(tree, balls).ok()?;
    (h <= feasibility_slack(tree, balls)).then_some(p)
}

/// The pairwise test `d(c_i, c_j) <= r_i + r_j`, with the same rounding slack
/// as [`tree_ball_intersection`].
pub fn tree_balls_pairwise_intersect(tree: &WeightedTree, balls: &[(TreePoint, f64)]) -> bool {
    let slack = feasibility_slack(tree, balls);
    balls.iter().enumerate().all(|(i, (ci, ri))| {
        balls[i + 1..]
            .iter()
            .all(|(cj, rj)| tree.distance(ci, cj) <= ri + rj + slack)
    })
}

/// Feasible point nearest to `anchor`, with a tolerance for rounding. Ties go
/// to the lowest edge id.
fn nearest_feasible(tree: &WeightedTree, balls: &[(TreePoint, f64)], anchor: &TreePoint) -> Option<TreePoint> {
    let slack = feasibility_slack(tree, balls);
    let mut best: Option<(usize, f64, f64)> = None;
    for (id, e) in tree.edges.iter().enumerate() {
        let (plus, minus) = edge_pieces(tree, id, balls);
        // t + plus <= 0 and minus - t <= 0.
        let lo = minus.max(0.0);
        let hi = (-plus).min(e.len);
        if lo > hi + slack {
            continue;
        }
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let t = if anchor.edge == id {
            anchor.offset.clamp(lo, hi)
        } else if tree.distance_to_vertex(anchor, e.u) <= tree.distance_to_vertex(anchor, e.v) {
            lo
        } else {
            hi
        };
        let p = TreePoint { edge: id, offset: t };
        let d = tree.distance(anchor, &p);
        if best.is_none_or(|(_, _, b)| d < b) {
            best = Some((id, t, d));
        }
    }
    best.map(|(edge, t, _)| tree.canonical(edge, t))
}

fn resolve_order<T: Target>(f: &PartialMap<T>, order: Option<&[usize]>) -> Result<Vec<usize>> {
    let rest = f.complement();
    match order {
        Some(o) => {
            crate::euclid::kirszbraun::check_order(o, &rest, f.space.len())?;
            Ok(o.to_vec())
        }
        None => Ok(rest),
    }
}

fn infeasible(tree: &WeightedTree, balls: &[(TreePoint, f64)], labels: &[usize], step: usize, x: usize) -> Error {
    let mut detail = String::from("balls do not meet");
    'outer: for i in 0..balls.len() {
        for j in i + 1..balls.len() {
            let d = tree.distance(&balls[i].0, &balls[j].0);
            if d > balls[i].1 + balls[j].1 {
                detail = format!(
                    "balls around the values at {} and {} are {d} apart, radii {} and {}",
                    labels[i], labels[j], balls[i].1, balls[j].1
                );
                break 'outer;
            }
        }
    }
    Error::Infeasible { step, index: x, detail }
}

/// Greedy `lip`-Lipschitz extension into a tree; each new value is the exact
/// minimizer of the ball excess.
pub fn lipschitz_extend_tree(
    f: &PartialMap<TreeTarget>,
    lip: f64,
    order: Option<&[usize]>,
) -> Result<ExtensionResult<TreePoint>> {
    if !(lip > 0.0 && lip.is_finite()) {
        return Err(Error::Precondition(format!(
            "Lipschitz constant must be positive and finite, got {lip}"
        )));
    }
    let lip_a = f.lip()?;
    if lip_a > lip * (1.0 + LIP_REL_TOL) {
        return Err(Error::Precondition(format!(
            "Lip(f, A) = {lip_a} exceeds the target constant {lip}"
        )));
    }
    let order = resolve_order(f, order)?;
    let tree = &f.target.tree;
    let mut known: Vec<Option<TreePoint>> = vec![None; f.space.len()];
    for (&a, v) in f.domain.iter().zip(&f.values) {
        known[a] = Some(*v);
    }
    let mut worst = 0.0f64;
    for (step, &x) in order.iter().enumerate() {
        let (labels, balls): (Vec<usize>, Vec<(TreePoint, f64)>) = known
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|p| (j, (p, lip * f.space.d(x, j)))))
            .unzip();
        let (p, h) = tree_ball_minimizer(tree, &balls)?;
        if h > feasibility_slack(tree, &balls) {
            return Err(infeasible(tree, &balls, &labels, step, x));
        }
        worst = worst.max(h);
        known[x] = Some(p);
    }
    let values = known.into_iter().map(|v| v.expect("assigned")).collect();
    ExtensionResult::certify(&f.space, &f.target, values, worst)
}

/// Nonexpansive extension `g'` of `g` with `d_inf(f_ext, g') <= d_inf(f, g)`,
/// picking at each step the feasible point nearest to `f_ext(x)`.
pub fn transport_extension_tree(
    f: &PartialMap<TreeTarget>,
    f_ext: &ExtensionResult<TreePoint>,
    g: &PartialMap<TreeTarget>,
    order: Option<&[usize]>,
) -> Result<ExtensionResult<TreePoint>> {
    if f.domain != g.domain || f.target != g.target || f_ext.values.len() != f.space.len() {
        return Err(Error::DomainMismatch);
    }
    f_ext.values.iter().try_for_each(|p| f.target.check_point(p))?;
    for (&a, v) in f.domain.iter().zip(&f.values) {
        if &f_ext.values[a] != v {
            return Err(Error::Precondition(format!("f_ext does not extend f at {a}")));
        }
    }
    let lip_ext = lip_full(&f.space, &f.target, &f_ext.values)?;
    if lip_ext > 1.0 + LIP_REL_TOL {
        return Err(Error::Precondition(format!("f_ext is not nonexpansive: Lip = {lip_ext}")));
    }
    let lip_g = g.lip()?;
    if lip_g > 1.0 + LIP_REL_TOL {
        return Err(Error::Precondition(format!("g is not nonexpansive: Lip = {lip_g}")));
    }
    let order = resolve_order(f, order)?;
    let r = sup_distance_values(&f.target, &f.values, &g.values)?;
    let tree = &f.target.tree;
    let mut known: Vec<Option<TreePoint>> = vec![None; f.space.len()];
    for (&a, v) in g.domain.iter().zip(&g.values) {
        known[a] = Some(*v);
    }
    for (step, &x) in order.iter().enumerate() {
        let (mut labels, mut balls): (Vec<usize>, Vec<(TreePoint, f64)>) = known
            .iter()
            .enumerate()
            .filter_map(|(j, v)| v.map(|p| (j, (p, f.space.d(x, j)))))
            .unzip();
        let anchor = f_ext.values[x];
        balls.push((anchor, r));
        labels.push(x);
        let p = nearest_feasible(tree, &balls, &anchor).ok_or_else(|| infeasible(tree, &balls, &labels, step, x))?;
        known[x] = Some(p);
    }
    let values = known.into_iter().map(|v| v.expect("assigned")).collect();
    ExtensionResult::certify(&f.space, &f.target, values, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;

    /// Path 0 - 1 - 2 - 3 with lengths 1, 2, 1 plus a branch 1 - 4 of length 0.5.
    fn sample() -> WeightedTree {
        WeightedTree::new(5, &[(0, 1, 1.0), (2, 1, 2.0), (2, 3, 1.0), (1, 4, 0.5)]).unwrap()
    }

    #[test]
    fn rejects_malformed_trees() {
        assert!(WeightedTree::new(3, &[(0, 1, 1.0)]).is_err());
        assert!(WeightedTree::new(3, &[(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        assert!(WeightedTree::new(2, &[(0, 1, 0.0)]).is_err());
        assert!(WeightedTree::new(2, &[(0, 0, 1.0)]).is_err());
        assert!(WeightedTree::new(1, &[]).is_err());
    }

    #[test]
    fn canonical_vertex_points() {
        let t = sample();
        // Vertex 1 is incident to edges 0, 1, 3; edge 0 is (0, 1).
        assert_eq!(t.vertex_point(1), TreePoint { edge: 0, offset: 1.0 });
        assert_eq!(t.point(1, 0.0).unwrap(), t.vertex_point(1));
        assert_eq!(t.point(3, 0.0).unwrap(), t.vertex_point(1));
        assert!(t.point(1, 2.5).is_err());
        assert!(!t.is_canonical(&TreePoint { edge: 1, offset: 0.0 }));
    }

    #[test]
    fn distances() {
        let t = sample();
        let p = t.point(1, 0.5).unwrap();
        assert_eq!(t.distance(&p, &p), 0.0);
        assert_eq!(t.distance(&t.vertex_point(1), &t.vertex_point(2)), 2.0);
        let leaf = t.vertex_point(4);
        assert_eq!(t.distance(&leaf, &t.point(2, 0.25).unwrap()), 0.5 + 2.0 + 0.25);
        assert_eq!(t.distance(&leaf, &t.vertex_point(0)), 1.5);
    }

    #[test]
    fn geodesic_points() {
        let t = sample();
        let a = t.vertex_point(0);
        let b = t.point(2, 0.5).unwrap();
        let total = t.distance(&a, &b);
        assert_eq!(total, 3.5);
        for k in 0..=14 {
            let s = total * k as f64 / 14.0;
            let m = t.geodesic_point(&a, &b, s);
            assert!((t.distance(&a, &m) - s).abs() < 1e-12);
            assert!((t.distance(&m, &b) - (total - s)).abs() < 1e-12);
        }
        assert_eq!(t.geodesic_point(&a, &b, 2.0), t.point(1, 1.0).unwrap());
    }

    #[test]
    fn single_ball_minimizer_is_its_center() {
        let t = sample();
        let c = t.point(1, 0.7).unwrap();
        let (p, h) = tree_ball_minimizer(&t, &[(c, 0.3)]).unwrap();
        assert_eq!(p, c);
        assert!((h + 0.3).abs() < 1e-15);
    }

    #[test]
    fn two_balls_on_a_path() {
        let t = WeightedTree::new(3, &[(0, 1, 2.0), (1, 2, 2.0)]).unwrap();
        let a = t.vertex_point(0);
        let b = t.vertex_point(2);
        let p = tree_ball_intersection(&t, &[(a, 1.0), (b, 3.0)]).unwrap();
        assert_eq!(p, t.point(0, 1.0).unwrap());
        assert!(tree_ball_intersection(&t, &[(a, 1.0), (b, 1.0)]).is_none());
        assert!(!tree_balls_pairwise_intersect(&t, &[(a, 1.0), (b, 1.0)]));
    }

    #[test]
    fn touching_balls_force_the_geodesic_midpoint() {
        let tree = Arc::new(sample());
        let target = TreeTarget { tree: tree.clone() };
        let space = Arc::new(FiniteMetricSpace::from_points(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap());
        let a = tree.vertex_point(4);
        let b = tree.vertex_point(3);
        let lip = tree.distance(&a, &b) / 2.0;
        let f = PartialMap::new(space, target, vec![0, 2], vec![a, b]).unwrap();
        let ext = lipschitz_extend_tree(&f, lip, None).unwrap();
        let mid = tree.geodesic_point(&a, &b, lip);
        assert!(tree.distance(&ext.values[1], &mid) < 1e-12);
        assert!(ext.lip_achieved <= lip * (1.0 + 1e-12));
    }

    #[test]
    fn transport_with_equal_maps_is_identity() {
        let tree = Arc::new(sample());
        let target = TreeTarget { tree: tree.clone() };
        let space = Arc::new(
            FiniteMetricSpace::from_points(&[vec![0.0], vec![0.4], vec![1.2], vec![1.5], vec![2.6]]).unwrap(),
        );
        let f = PartialMap::new(
            space,
            target,
            vec![0, 2, 4],
            vec![tree.point(0, 0.2).unwrap(), tree.point(3, 0.3).unwrap(), tree.point(1, 1.0).unwrap()],
        )
        .unwrap();
        let ext = lipschitz_extend_tree(&f, 1.0, None).unwrap();
        assert_eq!(transport_extension_tree(&f, &ext, &f, None).unwrap().values, ext.values);

        let g = f
            .with_values(vec![tree.point(0, 0.45).unwrap(), tree.point(3, 0.3).unwrap(), tree.point(1, 0.8).unwrap()])
            .unwrap();
        let r = sup_distance_values(&f.target, &f.values, &g.values).unwrap();
        let out = transport_extension_tree(&f, &ext, &g, Some(&[3, 1])).unwrap();
        let d = sup_distance_values(&f.target, &ext.values, &out.values).unwrap();
        assert!(d <= r + 1e-12);
        assert!(out.lip_achieved <= 1.0 + 1e-9);
    }
}
