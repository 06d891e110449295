//! Python bindings. Points and map values travel as lists of floats, tree
//! points as `(edge, offset)` tuples; library errors surface as `ValueError`.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use lipext::euclid::hull::{self, HullVertexSet};
use lipext::euclid::kirszbraun::{self, EuclideanInstance};
use lipext::euclid::slack;
use lipext::euclid::solver::SolverOptions;
use lipext::euclid::transport::{self, PsiBranch};
use lipext::instance::{self, Instance};
use lipext::lab::{self, ExperimentConfig, InstanceKind};
use lipext::metric::{self, Euclidean, ExtensionResult, FiniteMetricSpace, PartialMap, SupNorm};
use lipext::supnorm;
use lipext::tree::{self, TreePoint, TreeTarget, WeightedTree};

fn py_err(e: lipext::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn options(tol: f64, max_iter: usize) -> SolverOptions {
    SolverOptions { tol, max_iter }
}

/// A full map with its certificates.
#[pyclass(name = "ExtensionResult", frozen, module = "lipext_py")]
struct PyExtension {
    #[pyo3(get)]
    values: Vec<Vec<f64>>,
    #[pyo3(get)]
    lip_achieved: f64,
    #[pyo3(get)]
    max_constraint_violation: f64,
}

#[pymethods]
impl PyExtension {
    fn __repr__(&self) -> String {
        format!(
            "ExtensionResult(points={}, lip_achieved={}, max_constraint_violation={:e})",
            self.values.len(),
            self.lip_achieved,
            self.max_constraint_violation
        )
    }
}

impl From<ExtensionResult<Vec<f64>>> for PyExtension {
    fn from(r: ExtensionResult<Vec<f64>>) -> Self {
        PyExtension {
            values: r.values,
            lip_achieved: r.lip_achieved,
            max_constraint_violation: r.max_constraint_violation,
        }
    }
}

fn euclidean_map(points: Vec<Vec<f64>>, domain: Vec<usize>, values: Vec<Vec<f64>>) -> PyResult<PartialMap<Euclidean>> {
    EuclideanInstance::new(points, domain, values)
        .and_then(|i| i.to_map())
        .map_err(py_err)
}

fn supnorm_map(points: &[Vec<f64>], domain: Vec<usize>, values: Vec<Vec<f64>>) -> PyResult<PartialMap<SupNorm>> {
    let dim = values.first().map_or(0, Vec::len);
    let space = FiniteMetricSpace::from_points(points).map_err(py_err)?;
    PartialMap::new(Arc::new(space), SupNorm { dim }, domain, values).map_err(py_err)
}

fn full_extension(space: &FiniteMetricSpace, values: Vec<Vec<f64>>) -> PyResult<ExtensionResult<Vec<f64>>> {
    let dim = values.first().map_or(0, Vec::len);
    ExtensionResult::certify(space, &Euclidean { dim }, values, 0.0).map_err(py_err)
}

/// Largest ratio `|f(x) - f(y)| / d(x, y)` of a map given on all of `points`;
/// `target` is "euclidean" or "supnorm".
#[pyfunction]
#[pyo3(signature = (points, values, target = "euclidean"))]
fn lip_constant(points: Vec<Vec<f64>>, values: Vec<Vec<f64>>, target: &str) -> PyResult<f64> {
    let space = FiniteMetricSpace::from_points(&points).map_err(py_err)?;
    let dim = values.first().map_or(0, Vec::len);
    match target {
        "euclidean" => metric::lip_full(&space, &Euclidean { dim }, &values),
        "supnorm" => metric::lip_full(&space, &SupNorm { dim }, &values),
        other => return Err(PyValueError::new_err(format!("unknown target {other:?}"))),
    }
    .map_err(py_err)
}

/// Sequential Kirszbraun extension of `values` on `domain` to every point.
#[pyfunction]
#[pyo3(signature = (points, domain, values, lip, order = None, tol = 1e-7, max_iter = 100_000))]
fn kirszbraun_extend(
    py: Python<'_>,
    points: Vec<Vec<f64>>,
    domain: Vec<usize>,
    values: Vec<Vec<f64>>,
    lip: f64,
    order: Option<Vec<usize>>,
    tol: f64,
    max_iter: usize,
) -> PyResult<PyExtension> {
    let f = euclidean_map(points, domain, values)?;
    py.detach(|| kirszbraun::kirszbraun_extend(&f, lip, order.as_deref(), &options(tol, max_iter)))
        .map(Into::into)
        .map_err(py_err)
}

/// Nonexpansive transport. Returns the extension of `g` and the admissible
/// perturbation size `delta`.
#[pyfunction]
#[pyo3(signature = (points, domain, f_full, g_values, eps, tol = 1e-7, max_iter = 100_000))]
fn transport_phi(
    points: Vec<Vec<f64>>,
    domain: Vec<usize>,
    f_full: Vec<Vec<f64>>,
    g_values: Vec<Vec<f64>>,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(PyExtension, f64)> {
    let g = euclidean_map(points, domain, g_values)?;
    let f = full_extension(&g.space, f_full)?;
    let out = transport::transport_phi(&f, &g, eps, &options(tol, max_iter)).map_err(py_err)?;
    Ok((out.extension.into(), out.delta))
}

/// Lipschitz transport. Returns the extension, the construction used
/// ("constant", "product" or "patched") and `delta`.
#[pyfunction]
#[pyo3(signature = (points, domain, f_full, g_values, eps, tol = 1e-7, max_iter = 100_000))]
fn transport_psi(
    points: Vec<Vec<f64>>,
    domain: Vec<usize>,
    f_full: Vec<Vec<f64>>,
    g_values: Vec<Vec<f64>>,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> PyResult<(PyExtension, &'static str, f64)> {
    let g = euclidean_map(points, domain, g_values)?;
    let f = full_extension(&g.space, f_full)?;
    let out = transport::transport_psi(&f, &g, eps, &options(tol, max_iter)).map_err(py_err)?;
    let branch = match out.branch {
        PsiBranch::ConstantProjection => "constant",
        PsiBranch::Product => "product",
        PsiBranch::Patched => "patched",
    };
    Ok((out.extension.into(), branch, out.delta))
}

/// Nearest point of the convex hull of `vertices` to `p`, as
/// `(point, weights, distance)`.
#[pyfunction]
fn project_to_hull(p: Vec<f64>, vertices: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let h = HullVertexSet::new(vertices).map_err(py_err)?;
    let pr = hull::project(&p, &h, &SolverOptions::default()).map_err(py_err)?;
    Ok((pr.point, pr.weights, pr.distance))
}

/// Hausdorff distance between the convex hulls of two point sets.
#[pyfunction]
fn hull_hausdorff(v1: Vec<Vec<f64>>, v2: Vec<Vec<f64>>) -> PyResult<f64> {
    let h1 = HullVertexSet::new(v1).map_err(py_err)?;
    let h2 = HullVertexSet::new(v2).map_err(py_err)?;
    hull::hull_hausdorff(&h1, &h2, &SolverOptions::default()).map_err(py_err)
}

/// Projects every value of an extension of `g` onto the hull of `g`'s values.
#[pyfunction]
fn alpha_c_compose(
    points: Vec<Vec<f64>>,
    domain: Vec<usize>,
    g_values: Vec<Vec<f64>>,
    extension: Vec<Vec<f64>>,
) -> PyResult<PyExtension> {
    let g = euclidean_map(points, domain, g_values)?;
    let ext = full_extension(&g.space, extension)?;
    hull::alpha_c_compose(&g, &ext, &SolverOptions::default())
        .map(Into::into)
        .map_err(py_err)
}

#[pyfunction]
fn reshetnyak_slack(x: Vec<f64>, y: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> f64 {
    slack::reshetnyak_slack(&x, &y, &u, &v)
}

/// Midpoint of the coordinate envelopes, as a map into the sup-norm space.
#[pyfunction]
fn midpoint_operator(points: Vec<Vec<f64>>, domain: Vec<usize>, values: Vec<Vec<f64>>, lip: f64) -> PyResult<PyExtension> {
    let f = supnorm_map(&points, domain, values)?;
    supnorm::midpoint_operator(&f, lip).map(Into::into).map_err(py_err)
}

/// Midpoint operator clamped into the bounding box of the values.
#[pyfunction]
fn clamped_operator(points: Vec<Vec<f64>>, domain: Vec<usize>, values: Vec<Vec<f64>>, lip: f64) -> PyResult<PyExtension> {
    let f = supnorm_map(&points, domain, values)?;
    supnorm::clamped_operator(&f, lip).map(Into::into).map_err(py_err)
}

/// Bounding box `(lower, upper)` of a point set.
#[pyfunction]
fn admissible_hull(values: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let b = supnorm::admissible_hull(&values).map_err(py_err)?;
    Ok((b.lower().to_vec(), b.upper().to_vec()))
}

/// Sup-norm transport of `f_ext` along the change from `f` to `g` on `domain`.
#[pyfunction]
#[pyo3(signature = (points, domain, f_values, f_ext, g_values, order = None))]
fn transport_supnorm(
    points: Vec<Vec<f64>>,
    domain: Vec<usize>,
    f_values: Vec<Vec<f64>>,
    f_ext: Vec<Vec<f64>>,
    g_values: Vec<Vec<f64>>,
    order: Option<Vec<usize>>,
) -> PyResult<PyExtension> {
    let f = supnorm_map(&points, domain, f_values)?;
    let g = f.with_values(g_values).map_err(py_err)?;
    let ext = ExtensionResult::certify(&f.space, &f.target, f_ext, 0.0).map_err(py_err)?;
    supnorm::transport_extension(&f, &ext, &g, order.as_deref())
        .map(Into::into)
        .map_err(py_err)
}

/// Finite weighted tree; points are `(edge, offset)` with the offset measured
/// from the lower-numbered endpoint.
#[pyclass(name = "Tree", frozen, module = "lipext_py")]
struct PyTree {
    inner: Arc<WeightedTree>,
}

impl PyTree {
    fn at(&self, p: (usize, f64)) -> PyResult<TreePoint> {
        self.inner.point(p.0, p.1).map_err(py_err)
    }
}

fn pair(p: TreePoint) -> (usize, f64) {
    (p.edge, p.offset)
}

#[pymethods]
impl PyTree {
    #[new]
    fn new(n_vertices: usize, edges: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        let inner = WeightedTree::new(n_vertices, &edges).map_err(py_err)?;
        Ok(PyTree { inner: Arc::new(inner) })
    }

    #[getter]
    fn total_length(&self) -> f64 {
        self.inner.total_length()
    }

    /// Canonical form of a point.
    fn point(&self, edge: usize, offset: f64) -> PyResult<(usize, f64)> {
        self.at((edge, offset)).map(pair)
    }

    fn vertex(&self, w: usize) -> PyResult<(usize, f64)> {
        if w >= self.inner.n_vertices() {
            return Err(PyValueError::new_err(format!("vertex {w} does not exist")));
        }
        Ok(pair(self.inner.vertex_point(w)))
    }

    fn distance(&self, p: (usize, f64), q: (usize, f64)) -> PyResult<f64> {
        Ok(self.inner.distance(&self.at(p)?, &self.at(q)?))
    }

    /// The point at distance `t` from `p` toward `q`.
    fn geodesic_point(&self, p: (usize, f64), q: (usize, f64), t: f64) -> PyResult<(usize, f64)> {
        Ok(pair(self.inner.geodesic_point(&self.at(p)?, &self.at(q)?, t)))
    }

    /// Greedy `lip`-Lipschitz extension of tree values given on `domain` of
    /// Euclidean source `points`. Returns `(values, lip_achieved)`.
    #[pyo3(signature = (points, domain, values, lip, order = None))]
    fn extend(
        &self,
        points: Vec<Vec<f64>>,
        domain: Vec<usize>,
        values: Vec<(usize, f64)>,
        lip: f64,
        order: Option<Vec<usize>>,
    ) -> PyResult<(Vec<(usize, f64)>, f64)> {
        let space = FiniteMetricSpace::from_points(&points).map_err(py_err)?;
        let vals = values.into_iter().map(|p| self.at(p)).collect::<PyResult<Vec<_>>>()?;
        let target = TreeTarget { tree: self.inner.clone() };
        let f = PartialMap::new(Arc::new(space), target, domain, vals).map_err(py_err)?;
        let out = tree::lipschitz_extend_tree(&f, lip, order.as_deref()).map_err(py_err)?;
        Ok((out.values.into_iter().map(pair).collect(), out.lip_achieved))
    }

    fn __repr__(&self) -> String {
        format!(
            "Tree(vertices={}, total_length={})",
            self.inner.n_vertices(),
            self.inner.total_length()
        )
    }
}

/// Instance file contents.
#[pyclass(name = "Instance", module = "lipext_py")]
struct PyInstance {
    inner: Instance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Instance::from_json(text).map(|inner| PyInstance { inner }).map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn digest(&self) -> String {
        self.inner.digest()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn domain(&self) -> Vec<usize> {
        self.inner.domain.clone()
    }

    /// Validates the instance; returns a dict with `n`, `domain_size`,
    /// `kind` and `lip`.
    fn check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = instance::check_instance(&self.inner).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("n", r.n)?;
        d.set_item("domain_size", r.domain_size)?;
        d.set_item("kind", r.kind)?;
        d.set_item("lip", r.lip)?;
        Ok(d)
    }
}

fn config_from(text: &str) -> PyResult<ExperimentConfig> {
    ExperimentConfig::from_toml(text).map_err(py_err)
}

/// Seeded instance of `kind` ("euclidean", "supnorm" or "tree") under a TOML config.
#[pyfunction]
#[pyo3(signature = (kind, config = ""))]
fn generate_instance(kind: &str, config: &str) -> PyResult<PyInstance> {
    let kind: InstanceKind = kind.parse().map_err(py_err)?;
    let inner = lab::generate_instance(&config_from(config)?, kind).map_err(py_err)?;
    Ok(PyInstance { inner })
}

/// Runs experiment `tag` under a TOML config. Returns `(csv, all_passed)`.
#[pyfunction]
#[pyo3(signature = (tag, config = "", threads = 0))]
fn run_experiment(py: Python<'_>, tag: &str, config: &str, threads: usize) -> PyResult<(String, bool)> {
    let mut c = config_from(config)?;
    c.experiment = tag.to_string();
    let report = py.detach(|| lab::run_experiment_with_threads(&c, threads)).map_err(py_err)?;
    Ok((report.to_csv(), report.all_passed()))
}

#[pymodule]
fn lipext_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExtension>()?;
    m.add_class::<PyTree>()?;
    m.add_class::<PyInstance>()?;
    m.add_function(wrap_pyfunction!(lip_constant, m)?)?;
    m.add_function(wrap_pyfunction!(kirszbraun_extend, m)?)?;
    m.add_function(wrap_pyfunction!(transport_phi, m)?)?;
    m.add_function(wrap_pyfunction!(transport_psi, m)?)?;
    m.add_function(wrap_pyfunction!(project_to_hull, m)?)?;
    m.add_function(wrap_pyfunction!(hull_hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_c_compose, m)?)?;
    m.add_function(wrap_pyfunction!(reshetnyak_slack, m)?)?;
    m.add_function(wrap_pyfunction!(midpoint_operator, m)?)?;
    m.add_function(wrap_pyfunction!(clamped_operator, m)?)?;
    m.add_function(wrap_pyfunction!(admissible_hull, m)?)?;
    m.add_function(wrap_pyfunction!(transport_supnorm, m)?)?;
    m.add_function(wrap_pyfunction!(generate_instance, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
