//! JSON instance files.
//!
//! ```json
//! {
//!   "n": 3,
//!   "dist": [[0, 1, 2], [1, 0, 1], [2, 1, 0]],
//!   "target": {"kind": "euclidean", "dim": 2},
//!   "A": [0, 2],
//!   "values": [[0, 0], [1, 1]],
//!   "points": [[0], [1], [2]]
//! }
//! ```
//!
//! `target.kind` is `euclidean`, `supnorm` or `tree`; a tree target carries
//! `vertices` and `edges` as `[[u, v, len], ...]`, and its values are
//! `[edge_index, offset]` pairs. `points` (source coordinates) is optional.
//! Reals are written with 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metric::{lip_constant, validate_metric, Euclidean, FiniteMetricSpace, PartialMap, SupNorm};
use crate::tree::{TreePoint, TreeTarget, WeightedTree};

#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    Euclidean { dim: usize },
    SupNorm { dim: usize },
    Tree { vertices: usize, edges: Vec<(usize, usize, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceValues {
    Vectors(Vec<Vec<f64>>),
    Tree(Vec<TreePoint>),
}

impl InstanceValues {
    pub fn len(&self) -> usize {
        match self {
            InstanceValues::Vectors(v) => v.len(),
            InstanceValues::Tree(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub dist: Vec<Vec<f64>>,
    pub points: Option<Vec<Vec<f64>>>,
    pub target: TargetSpec,
    pub domain: Vec<usize>,
    pub values: InstanceValues,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    n: usize,
    dist: Vec<Vec<f64>>,
    target: RawTarget,
    #[serde(rename = "A")]
    domain: Vec<usize>,
    values: Vec<Vec<f64>>,
    #[serde(default)]
    points: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawTarget {
    Euclidean { dim: usize },
    Supnorm { dim: usize },
    Tree { vertices: usize, edges: Vec<(usize, usize, f64)> },
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_row(out: &mut String, row: &[f64]) {
    out.push('[');
    for (k, x) in row.iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        out.push_str(&real(*x));
    }
    out.push(']');
}

fn write_rows(out: &mut String, key: &str, rows: impl ExactSizeIterator<Item = Vec<f64>>, last: bool) {
    let _ = write!(out, "  \"{key}\": [");
    let count = rows.len();
    for (k, row) in rows.enumerate() {
        out.push_str("\n    ");
        write_row(out, &row);
        if k + 1 < count {
            out.push(',');
        }
    }
    if count > 0 {
        out.push_str("\n  ");
    }
    out.push(']');
    out.push_str(if last { "\n" } else { ",\n" });
}

impl Instance {
    /// Instance with a Euclidean source given by coordinates.
    pub fn from_source_points(
        points: Vec<Vec<f64>>,
        target: TargetSpec,
        domain: Vec<usize>,
        values: InstanceValues,
    ) -> Result<Self> {
        let space = FiniteMetricSpace::from_points(&points)?;
        Ok(Instance {
            dist: space.to_table(),
            points: Some(points),
            target,
            domain,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.dist.len()
    }

    pub fn kind(&self) -> &'static str {
        match self.target {
            TargetSpec::Euclidean { .. } => "euclidean",
            TargetSpec::SupNorm { .. } => "supnorm",
            TargetSpec::Tree { .. } => "tree",
        }
    }

    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        let _ = writeln!(out, "  \"n\": {},", self.n());
        write_rows(&mut out, "dist", self.dist.iter().cloned(), false);
        match &self.target {
            TargetSpec::Euclidean { dim } => {
                let _ = writeln!(out, "  \"target\": {{\"kind\": \"euclidean\", \"dim\": {dim}}},");
            }
            TargetSpec::SupNorm { dim } => {
                let _ = writeln!(out, "  \"target\": {{\"kind\": \"supnorm\", \"dim\": {dim}}},");
            }
            TargetSpec::Tree { vertices, edges } => {
                let _ = write!(out, "  \"target\": {{\"kind\": \"tree\", \"vertices\": {vertices}, \"edges\": [");
                for (k, (u, v, len)) in edges.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "[{u}, {v}, {}]", real(*len));
                }
                out.push_str("]},\n");
            }
        }
        let domain: Vec<String> = self.domain.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "  \"A\": [{}],", domain.join(", "));
        let has_points = self.points.is_some();
        match &self.values {
            InstanceValues::Vectors(v) => write_rows(&mut out, "values", v.iter().cloned(), !has_points),
            InstanceValues::Tree(v) => {
                let _ = write!(out, "  \"values\": [");
                for (k, p) in v.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "[{}, {}]", p.edge, real(p.offset));
                }
                out.push(']');
                out.push_str(if has_points { ",\n" } else { "\n" });
            }
        }
        if let Some(points) = &self.points {
            write_rows(&mut out, "points", points.iter().cloned(), true);
        }
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if raw.dist.len() != raw.n {
            return Err(Error::Format(format!("n = {} but dist has {} rows", raw.n, raw.dist.len())));
        }
        if raw.values.len() != raw.domain.len() {
            return Err(Error::Format(format!(
                "{} values for {} domain indices",
                raw.values.len(),
                raw.domain.len()
            )));
        }
        if let Some(points) = &raw.points {
            if points.len() != raw.n {
                return Err(Error::Format(format!("n = {} but {} source points", raw.n, points.len())));
            }
        }
        let (target, values) = match raw.target {
            RawTarget::Euclidean { dim } => (TargetSpec::Euclidean { dim }, InstanceValues::Vectors(raw.values)),
            RawTarget::Supnorm { dim } => (TargetSpec::SupNorm { dim }, InstanceValues::Vectors(raw.values)),
            RawTarget::Tree { vertices, edges } => {
                let points = raw
                    .values
                    .iter()
                    .map(|v| match v.as_slice() {
                        [e, t] if *e >= 0.0 && e.fract() == 0.0 => Ok(TreePoint {
                            edge: *e as usize,
                            offset: *t,
                        }),
                        _ => Err(Error::Format("tree values must be [edge_index, offset] pairs".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                (TargetSpec::Tree { vertices, edges }, InstanceValues::Tree(points))
            }
        };
        Ok(Instance {
            dist: raw.dist,
            points: raw.points,
            target,
            domain: raw.domain,
            values,
        })
    }

    /// First 16 hex digits of the SHA-256 of [`Instance::to_json`].
    pub fn digest(&self) -> String {
        digest_text(&self.to_json())
    }

    pub fn space(&self) -> Result<Arc<FiniteMetricSpace>> {
        validate_metric(&self.dist).map(Arc::new)
    }

    fn vectors(&self) -> Result<&Vec<Vec<f64>>> {
        match &self.values {
            InstanceValues::Vectors(v) => Ok(v),
            InstanceValues::Tree(_) => Err(Error::Format("instance has tree values".into())),
        }
    }

    pub fn euclidean_map(&self) -> Result<PartialMap<Euclidean>> {
        match self.target {
            TargetSpec::Euclidean { dim } => {
                PartialMap::new(self.space()?, Euclidean { dim }, self.domain.clone(), self.vectors()?.clone())
            }
            _ => Err(Error::Format(format!("instance target is {}, not euclidean", self.kind()))),
        }
    }

    pub fn supnorm_map(&self) -> Result<PartialMap<SupNorm>> {
        match self.target {
            TargetSpec::SupNorm { dim } => {
                PartialMap::new(self.space()?, SupNorm { dim }, self.domain.clone(), self.vectors()?.clone())
            }
            _ => Err(Error::Format(format!("instance target is {}, not supnorm", self.kind()))),
        }
    }

    pub fn tree_map(&self) -> Result<PartialMap<TreeTarget>> {
        match (&self.target, &self.values) {
            (TargetSpec::Tree { vertices, edges }, InstanceValues::Tree(v)) => {
                let tree = Arc::new(WeightedTree::new(*vertices, edges)?);
                PartialMap::new(self.space()?, TreeTarget { tree }, self.domain.clone(), v.clone())
            }
            _ => Err(Error::Format(format!("instance target is {}, not tree", self.kind()))),
        }
    }
}

pub fn digest_text(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Result of validating an instance file.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub n: usize,
    pub domain_size: usize,
    pub kind: &'static str,
    pub lip: f64,
}

/// Validates the metric and the values, then reports `Lip(f, A)`.
pub fn check_instance(inst: &Instance) -> Result<CheckReport> {
    let lip = match inst.target {
        TargetSpec::Euclidean { .. } => {
            let f = inst.euclidean_map()?;
            lip_constant(&f, &f.domain)?
        }
        TargetSpec::SupNorm { .. } => {
            let f = inst.supnorm_map()?;
            lip_constant(&f, &f.domain)?
        }
        TargetSpec::Tree { .. } => {
            let f = inst.tree_map()?;
            lip_constant(&f, &f.domain)?
        }
    };
    Ok(CheckReport {
        n: inst.n(),
        domain_size: inst.domain.len(),
        kind: inst.kind(),
        lip,
    })
}
