//! Extensions into `l_inf^m`.
//!
//! Closed balls in the max norm are axis-aligned cubes, so every finite ball
//! intersection is a box computed coordinatewise. The greedy constructions
//! assign one source point at a time and pick the box point nearest an anchor.

use std::fmt;

use crate::error::{Error, Result};
use crate::metric::{
    lip_full, sup_distance_values, ExtensionResult, FiniteMetricSpace, PartialMap, SupNorm, Target,
    LIP_REL_TOL,
};
use crate::vector;

/// A nonempty axis-aligned box `prod [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Box {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Box {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::InvalidPoint("box bounds must have one common positive length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidPoint("box bounds must be finite with lower <= upper".into()));
        }
        Ok(Box { lower, upper })
    }

    /// The closed ball `B(center, radius)`.
    pub fn cube(center: &[f64], radius: f64) -> Self {
        Box {
            lower: center.iter().map(|c| c - radius).collect(),
            upper: center.iter().map(|c| c + radius).collect(),
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (l, u))| l <= x && x <= u)
    }

    /// Nearest point of the box to `p` in every coordinate.
    pub fn clamp(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| x.clamp(*l, *u))
            .collect()
    }

    pub fn intersect(&self, other: &Box) -> Option<Box> {
        let lower: Vec<f64> = self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect();
        let upper: Vec<f64> = self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect();
        lower.iter().zip(&upper).all(|(l, u)| l <= u).then_some(Box { lower, upper })
    }

    /// Half the longest side: the radius of the smallest cube containing the box.
    pub fn circumradius(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| (u - l) / 2.0)
            .fold(0.0, f64::max)
    }
}

fn check_lip(f: &PartialMap<SupNorm>, lip: f64) -> Result<()> {
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
    Ok(())
}

fn envelopes_unchecked(f: &PartialMap<SupNorm>, lip: f64, x: usize) -> (Vec<f64>, Vec<f64>) {
    if let Some(v) = f.value_at(x) {
        return (v.clone(), v.clone());
    }
    let m = f.target.dim;
    let mut lower = vec![f64::NEG_INFINITY; m];
    let mut upper = vec![f64::INFINITY; m];
    for (&a, v) in f.domain.iter().zip(&f.values) {
        let r = lip * f.space.d(x, a);
        for i in 0..m {
            lower[i] = lower[i].max(v[i] - r);
            upper[i] = upper[i].min(v[i] + r);
        }
    }
    (lower, upper)
}

/// Coordinatewise smallest and largest `lip`-Lipschitz extensions of `f`,
/// evaluated at `x`:
/// `lower_i = max_a (f_i(a) - lip d(x,a))`, `upper_i = min_a (f_i(a) + lip d(x,a))`.
pub fn envelopes(f: &PartialMap<SupNorm>, lip: f64, x: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    check_lip(f, lip)?;
    if x >= f.space.len() {
        return Err(Error::InvalidDomain(format!("source index {x} out of range")));
    }
    Ok(envelopes_unchecked(f, lip, x))
}

fn midpoint_values(f: &PartialMap<SupNorm>, lip: f64) -> Vec<Vec<f64>> {
    (0..f.space.len())
        .map(|x| {
            if let Some(v) = f.value_at(x) {
                return v.clone();
            }
            let (lo, hi) = envelopes_unchecked(f, lip, x);
            lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect()
        })
        .collect()
}

/// Extension whose value at `x` is the midpoint of the two envelopes.
pub fn midpoint_operator(f: &PartialMap<SupNorm>, lip: f64) -> Result<ExtensionResult<Vec<f64>>> {
    check_lip(f, lip)?;
    ExtensionResult::certify(&f.space, &f.target, midpoint_values(f, lip), 0.0)
}

/// `cov` of a finite set in `l_inf^m`: its coordinatewise bounding box. Each
/// cube containing the set contains the box, and the box is the intersection
/// of the cubes of radius `R` centered at `lower + R` and `upper - R` per
/// axis for large `R`.
pub fn admissible_hull(values: &[Vec<f64>]) -> Result<Box> {
    let first = values.first().ok_or(Error::EmptySet)?;
    let mut lower = first.clone();
    let mut upper = first.clone();
    for v in &values[1..] {
        if v.len() != first.len() {
            return Err(Error::InvalidPoint("points of different dimensions".into()));
        }
        for i in 0..v.len() {
            lower[i] = lower[i].min(v[i]);
            upper[i] = upper[i].max(v[i]);
        }
    }
    Box::new(lower, upper)
}

/// Midpoint extension clamped into `cov(f(A))`.
pub fn clamped_operator(f: &PartialMap<SupNorm>, lip: f64) -> Result<ExtensionResult<Vec<f64>>> {
    check_lip(f, lip)?;
    let hull = admissible_hull(&f.values)?;
    let values = midpoint_values(f, lip)
        .into_iter()
        .enumerate()
        .map(|(x, v)| match f.value_at(x) {
            Some(a) => a.clone(),
            None => hull.clamp(&v),
        })
        .collect();
    ExtensionResult::certify(&f.space, &f.target, values, 0.0)
}

/// Intersection of the cubes `B(c, r)`; `None` when empty.
pub fn ball_intersection(balls: &[(Vec<f64>, f64)]) -> Option<Box> {
    let ((c0, r0), rest) = balls.split_first()?;
    rest.iter()
        .try_fold(Box::cube(c0, *r0), |acc, (c, r)| acc.intersect(&Box::cube(c, *r)))
}

/// The pairwise test `d(c_i, c_j) <= r_i + r_j` for all pairs.
pub fn balls_pairwise_intersect(balls: &[(Vec<f64>, f64)]) -> bool {
    balls.iter().enumerate().all(|(i, (ci, ri))| {
        balls[i + 1..]
            .iter()
            .all(|(cj, rj)| vector::dist_inf(ci, cj) <= ri + rj)
    })
}

#[derive(Debug, Clone, Copy)]
enum Source {
    Assigned(usize),
    Anchor,
    Member(usize),
    Hull,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Assigned(j) => write!(f, "ball around the value at {j}"),
            Source::Anchor => write!(f, "ball around the anchor extension"),
            Source::Member(k) => write!(f, "ball around family member {k}"),
            Source::Hull => write!(f, "admissible hull"),
        }
    }
}

/// Relative slack below which an inverted interval is treated as rounding.
const INTERSECT_REL_SLACK: f64 = 1e-12;

struct Feasible {
    lower: Vec<f64>,
    upper: Vec<f64>,
    lower_src: Vec<Source>,
    upper_src: Vec<Source>,
    scale: f64,
}

impl Feasible {
    fn new(dim: usize) -> Self {
        Feasible {
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            lower_src: vec![Source::Hull; dim],
            upper_src: vec![Source::Hull; dim],
            scale: 0.0,
        }
    }

    fn add(&mut self, lower: &[f64], upper: &[f64], src: Source) {
        for i in 0..self.lower.len() {
            self.scale = self.scale.max(lower[i].abs()).max(upper[i].abs());
            if lower[i] > self.lower[i] {
                self.lower[i] = lower[i];
                self.lower_src[i] = src;
            }
            if upper[i] < self.upper[i] {
                self.upper[i] = upper[i];
                self.upper_src[i] = src;
            }
        }
    }

    fn add_ball(&mut self, center: &[f64], radius: f64, src: Source) {
        let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
        self.add(&lo, &hi, src);
    }

    /// Nearest feasible point to `anchor`, or a description of the first
    /// coordinate whose interval is empty beyond rounding.
    fn pick(&self, anchor: &[f64]) -> std::result::Result<Vec<f64>, String> {
        let slack = INTERSECT_REL_SLACK * (1.0 + self.scale);
        let mut out = Vec::with_capacity(anchor.len());
        for i in 0..anchor.len() {
            let (l, u) = (self.lower[i], self.upper[i]);
            if l > u + slack {
                return Err(format!(
                    "coordinate {i}: {} and {} are {:e} apart",
                    self.lower_src[i],
                    self.upper_src[i],
                    l - u
                ));
            }
            out.push(anchor[i].clamp(l.min(u), l.max(u)));
        }
        Ok(out)
    }
}

/// Greedy assignment over `order`: each point gets the pick of the box cut
/// out by the balls around assigned values (radius = source distance) and
/// the balls produced by `extra`.
fn greedy_fill(
    space: &FiniteMetricSpace,
    known: &mut [Option<Vec<f64>>],
    order: &[usize],
    dim: usize,
    hull: Option<&Box>,
    extra: impl Fn(usize, &mut Feasible),
    anchor: impl Fn(usize) -> Vec<f64>,
) -> Result<()> {
    for (step, &x) in order.iter().enumerate() {
        let mut feasible = Feasible::new(dim);
        if let Some(h) = hull {
            feasible.add(h.lower(), h.upper(), Source::Hull);
        }
        for (j, v) in known.iter().enumerate() {
            if let Some(v) = v {
                feasible.add_ball(v, space.d(x, j), Source::Assigned(j));
            }
        }
        extra(x, &mut feasible);
        let value = feasible
            .pick(&anchor(x))
            .map_err(|detail| Error::Infeasible { step, index: x, detail })?;
        known[x] = Some(value);
    }
    Ok(())
}

fn resolve_order(f: &PartialMap<SupNorm>, order: Option<&[usize]>) -> Result<Vec<usize>> {
    let rest = f.complement();
    match order {
        Some(o) => {
            crate::euclid::kirszbraun::check_order(o, &rest, f.space.len())?;
            Ok(o.to_vec())
        }
        None => Ok(rest),
    }
}

fn seeded(f: &PartialMap<SupNorm>, values: &[Vec<f64>]) -> Vec<Option<Vec<f64>>> {
    let mut known = vec![None; f.space.len()];
    for (&a, v) in f.domain.iter().zip(values) {
        known[a] = Some(v.clone());
    }
    known
}

fn check_nonexpansive(space: &FiniteMetricSpace, target: &SupNorm, values: &[Vec<f64>], what: &str) -> Result<()> {
    let lip = lip_full(space, target, values)?;
    if lip > 1.0 + LIP_REL_TOL {
        return Err(Error::Precondition(format!("{what} is not nonexpansive: Lip = {lip}")));
    }
    Ok(())
}

fn check_extends(f: &PartialMap<SupNorm>, values: &[Vec<f64>], what: &str) -> Result<()> {
    if values.len() != f.space.len() {
        return Err(Error::DomainMismatch);
    }
    values.iter().try_for_each(|v| f.target.check_point(v))?;
    for (&a, v) in f.domain.iter().zip(&f.values) {
        if &values[a] != v {
            return Err(Error::Precondition(format!("{what} does not extend f at {a}")));
        }
    }
    Ok(())
}

fn transport_impl(
    f: &PartialMap<SupNorm>,
    f_ext: &ExtensionResult<Vec<f64>>,
    g: &PartialMap<SupNorm>,
    order: Option<&[usize]>,
    within_hull: bool,
) -> Result<ExtensionResult<Vec<f64>>> {
    if f.domain != g.domain || f.target != g.target {
        return Err(Error::DomainMismatch);
    }
    check_extends(f, &f_ext.values, "f_ext")?;
    check_nonexpansive(&f.space, &f.target, &f_ext.values, "f_ext")?;
    let lip_g = g.lip()?;
    if lip_g > 1.0 + LIP_REL_TOL {
        return Err(Error::Precondition(format!("g is not nonexpansive: Lip = {lip_g}")));
    }
    let order = resolve_order(f, order)?;
    let r = sup_distance_values(&f.target, &f.values, &g.values)?;
    let hull = if within_hull { Some(admissible_hull(&g.values)?) } else { None };
    let mut known = seeded(g, &g.values);
    greedy_fill(
        &f.space,
        &mut known,
        &order,
        f.target.dim,
        hull.as_ref(),
        |x, feasible| feasible.add_ball(&f_ext.values[x], r, Source::Anchor),
        |x| f_ext.values[x].clone(),
    )?;
    let values = known.into_iter().map(|v| v.expect("assigned")).collect();
    ExtensionResult::certify(&f.space, &f.target, values, 0.0)
}

/// Nonexpansive extension `g'` of `g` with `d_inf(f_ext, g') <= d_inf(f, g)`,
/// where `f_ext` is a nonexpansive extension of `f`. Each step picks the
/// point of the feasible box nearest to `f_ext(x)`, so `g = f` returns
/// `f_ext` unchanged.
pub fn transport_extension(
    f: &PartialMap<SupNorm>,
    f_ext: &ExtensionResult<Vec<f64>>,
    g: &PartialMap<SupNorm>,
    order: Option<&[usize]>,
) -> Result<ExtensionResult<Vec<f64>>> {
    transport_impl(f, f_ext, g, order, false)
}

/// [`transport_extension`] restricted to `cov(g(A))`; `f_ext` should map into
/// `cov(f(A))` for the feasible sets to stay nonempty.
pub fn transport_extension_in_hull(
    f: &PartialMap<SupNorm>,
    f_ext: &ExtensionResult<Vec<f64>>,
    g: &PartialMap<SupNorm>,
    order: Option<&[usize]>,
) -> Result<ExtensionResult<Vec<f64>>> {
    transport_impl(f, f_ext, g, order, true)
}

/// One member of an externally hyperconvex family: a full map `values`, the
/// radius of its ball, and a nonexpansive extension of `f` within `radius`
/// of it.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyMember {
    pub values: Vec<Vec<f64>>,
    pub radius: f64,
    pub witness: Vec<Vec<f64>>,
}

/// Tolerance of the family precondition checks.
pub const FAMILY_TOL: f64 = 1e-9;

/// Nonexpansive extension of `f` lying within `radius` of every family
/// member. Each step picks the feasible point nearest to the centroid of the
/// member values.
pub fn external_intersection(
    f: &PartialMap<SupNorm>,
    family: &[FamilyMember],
    order: Option<&[usize]>,
) -> Result<ExtensionResult<Vec<f64>>> {
    if family.is_empty() {
        return Err(Error::EmptySet);
    }
    let target = &f.target;
    for (k, m) in family.iter().enumerate() {
        if !(m.radius >= 0.0) {
            return Err(Error::Precondition(format!("member {k} has a negative radius")));
        }
        if m.values.len() != f.space.len() {
            return Err(Error::DomainMismatch);
        }
        m.values.iter().try_for_each(|v| target.check_point(v))?;
        check_nonexpansive(&f.space, target, &m.values, &format!("member {k}"))?;
        check_extends(f, &m.witness, &format!("witness {k}"))?;
        check_nonexpansive(&f.space, target, &m.witness, &format!("witness {k}"))?;
        let d = sup_distance_values(target, &m.values, &m.witness)?;
        if d > m.radius + FAMILY_TOL {
            return Err(Error::Precondition(format!(
                "witness {k} lies at distance {d} from its member, above radius {}",
                m.radius
            )));
        }
    }
    for (k, a) in family.iter().enumerate() {
        for (l, b) in family.iter().enumerate().skip(k + 1) {
            let d = sup_distance_values(target, &a.values, &b.values)?;
            if d > a.radius + b.radius + FAMILY_TOL {
                return Err(Error::Precondition(format!(
                    "members {k} and {l} are {d} apart, above {} + {}",
                    a.radius, b.radius
                )));
            }
        }
    }
    let order = resolve_order(f, order)?;
    let mut known = seeded(f, &f.values);
    greedy_fill(
        &f.space,
        &mut known,
        &order,
        target.dim,
        None,
        |x, feasible| {
            for (k, m) in family.iter().enumerate() {
                feasible.add_ball(&m.values[x], m.radius, Source::Member(k));
            }
        },
        |x| {
            let at_x: Vec<Vec<f64>> = family.iter().map(|m| m.values[x].clone()).collect();
            vector::mean(&at_x)
        },
    )?;
    let values = known.into_iter().map(|v| v.expect("assigned")).collect();
    ExtensionResult::certify(&f.space, target, values, 0.0)
}
