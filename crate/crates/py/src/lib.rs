//! Python module `kopt`. Vertices, tour positions and pattern points are
//! 1-based, as in the JSON formats.

use kopt_core::alpha::c_of_k as core_c_of_k;
use kopt_core::buckets::parse_rational;
use kopt_core::decomp::{treewidth_exact, DepGraph};
use kopt_core::dpengine::{default_alpha, Engine, Policy};
use kopt_core::instance::{self as core, gen_negative_triangle_reduction, ReductionInput};
use kopt_core::moves::{apply_move, valid_patterns, ConnectionPattern, MoveReport};
use kopt_core::oracle::{self, DEFAULT_MOVE_BUDGET};
use kopt_core::Rational;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: kopt_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(frozen)]
struct Instance(core::Instance);

#[pymethods]
impl Instance {
    /// Full symmetric matrix as a list of rows.
    #[staticmethod]
    fn from_matrix(rows: Vec<Vec<i64>>) -> PyResult<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("matrix must be square"));
        }
        core::Instance::from_matrix(n, &rows.concat()).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_coords(coords: Vec<(f64, f64)>) -> PyResult<Self> {
        core::Instance::from_coords(coords).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::Instance::from_json_str(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_tsplib(text: &str) -> PyResult<Self> {
        core::parse_tsplib(text).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed=0, wmax=1000))]
    fn random(n: usize, seed: u64, wmax: i64) -> PyResult<Self> {
        core::gen_random(n, seed, wmax).map(Self).map_err(err)
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn weight(&self, u: usize, v: usize) -> PyResult<i64> {
        let n = self.0.n();
        if u == 0 || v == 0 || u > n || v > n {
            return Err(PyValueError::new_err(format!("vertices are 1..={n}")));
        }
        Ok(self.0.weight(u - 1, v - 1))
    }

    fn tour_weight(&self, tour: &Tour) -> PyResult<i64> {
        tour.0.check_for(&self.0).map_err(err)?;
        Ok(self.0.tour_weight(&tour.0))
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={})", self.0.n())
    }
}

#[pyclass(frozen)]
struct Tour(core::Tour);

#[pymethods]
impl Tour {
    #[new]
    fn new(order: Vec<usize>) -> PyResult<Self> {
        core::Tour::from_one_based(&order).map(Self).map_err(err)
    }

    #[staticmethod]
    fn identity(n: usize) -> PyResult<Self> {
        core::Tour::identity(n).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (n, seed=0))]
    fn random(n: usize, seed: u64) -> PyResult<Self> {
        core::gen_random_tour(n, seed).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::Tour::from_json_str(text).map(Self).map_err(err)
    }

    #[getter]
    fn order(&self) -> Vec<usize> {
        self.0.order().iter().map(|v| v + 1).collect()
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __eq__(&self, other: &Tour) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("Tour({:?})", self.order())
    }
}

fn alpha_arg(alpha: Option<&str>, k: usize) -> PyResult<Rational> {
    alpha.map_or(Ok(default_alpha(k)), |s| parse_rational(s).map_err(err))
}

fn policy_arg(policy: &str) -> PyResult<Policy> {
    policy.parse().map_err(err)
}

fn report<'py>(py: Python<'py>, r: &MoveReport, next: core::Tour) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("k", r.k)?;
    d.set_item("removed", &r.removed)?;
    d.set_item("added", r.added.iter().map(|a| (a[0], a[1])).collect::<Vec<_>>())?;
    d.set_item("gain", r.gain)?;
    d.set_item("pattern", r.pattern.iter().map(|a| (a[0], a[1])).collect::<Vec<_>>())?;
    d.set_item("embedding", &r.embedding)?;
    d.set_item("improving", r.gain > 0)?;
    d.set_item("tour", Tour(next))?;
    Ok(d)
}

/// Best k-move by dynamic programming; `None` if no move exists.
#[pyfunction]
#[pyo3(signature = (instance, tour, k, alpha=None, policy="best"))]
fn best_move<'py>(
    py: Python<'py>,
    instance: &Instance,
    tour: &Tour,
    k: usize,
    alpha: Option<&str>,
    policy: &str,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let (alpha, policy) = (alpha_arg(alpha, k)?, policy_arg(policy)?);
    let (inst, t) = (&instance.0, &tour.0);
    let r = py.detach(|| Engine::new().best_move(inst, t, k, alpha, policy)).map_err(err)?;
    match (r.kmove, r.pattern, r.embedding, r.new_tour) {
        (Some(mv), Some(m), Some(f), Some(next)) => Ok(Some(report(py, &MoveReport::new(&mv, &m, &f), next)?)),
        _ => Ok(None),
    }
}

/// Best k-move by exhaustive search.
#[pyfunction]
#[pyo3(signature = (instance, tour, k, budget=DEFAULT_MOVE_BUDGET))]
fn naive_best_move<'py>(
    py: Python<'py>,
    instance: &Instance,
    tour: &Tour,
    k: usize,
    budget: u128,
) -> PyResult<Option<Bound<'py, PyDict>>> {
    let (inst, t) = (&instance.0, &tour.0);
    let r = py.detach(|| oracle::naive_best_move(inst, t, k, budget)).map_err(err)?;
    let Some(w) = r.witness else { return Ok(None) };
    let m = ConnectionPattern::from_pairs(k, &w.pattern).map_err(err)?;
    let (next, mv) = apply_move(inst, t, &m, &w.embedding).map_err(err)?;
    Ok(Some(report(py, &MoveReport::new(&mv, &m, &w.embedding), next)?))
}

/// Improve `tour` by k-moves; returns the final tour and `(gain, weight)`
/// per step.
#[pyfunction]
#[pyo3(signature = (instance, tour, k, alpha=None, policy="best", max_steps=1000))]
fn local_search(
    py: Python<'_>,
    instance: &Instance,
    tour: &Tour,
    k: usize,
    alpha: Option<&str>,
    policy: &str,
    max_steps: usize,
) -> PyResult<(Tour, Vec<(i64, i64)>)> {
    let (alpha, policy) = (alpha_arg(alpha, k)?, policy_arg(policy)?);
    let (inst, t) = (&instance.0, &tour.0);
    let (last, hist) = py.detach(|| Engine::new().local_search(inst, t, k, alpha, policy, max_steps)).map_err(err)?;
    Ok((Tour(last), hist.iter().map(|s| (s.gain, s.weight)).collect()))
}

/// `c(k)` and the bucket exponent as `"p/q"` strings.
#[pyfunction]
#[pyo3(signature = (k, allow_large_k=false))]
fn c_of_k<'py>(py: Python<'py>, k: usize, allow_large_k: bool) -> PyResult<Bound<'py, PyDict>> {
    let rep = py.detach(|| core_c_of_k(k, false, allow_large_k)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("k", k)?;
    d.set_item("c", rep.c.to_string())?;
    d.set_item("alpha", rep.alpha.to_string())?;
    d.set_item("valid_patterns", rep.valid_patterns)?;
    Ok(d)
}

/// Treewidth of a graph on vertices `1..=vertices`.
#[pyfunction]
fn treewidth(vertices: usize, edges: Vec<(usize, usize)>) -> PyResult<usize> {
    let mut g = DepGraph::empty(vertices);
    for (u, v) in edges {
        if u == 0 || v == 0 || u > vertices || v > vertices {
            return Err(PyValueError::new_err(format!("edge ({u}, {v}) outside 1..={vertices}")));
        }
        g.add_edge(u - 1, v - 1);
    }
    treewidth_exact(&g).map(|(w, _)| w).map_err(err)
}

/// Valid connection patterns in canonical order, as point pairs.
#[pyfunction]
fn patterns(k: usize) -> PyResult<Vec<Vec<(usize, usize)>>> {
    let ps = valid_patterns(k).map_err(err)?;
    Ok(ps.iter().map(|m| m.one_based_pairs().iter().map(|p| (p[0], p[1])).collect()).collect())
}

/// 4-opt instance and tour encoding a negative-triangle question on `n`
/// vertices with the given upper-triangle weights.
#[pyfunction]
#[pyo3(signature = (n, weights, nonnegative=false))]
fn neg_triangle_instance(n: usize, weights: Vec<i64>, nonnegative: bool) -> PyResult<(Instance, Tour)> {
    let g = ReductionInput::from_upper_triangle(n, &weights).map_err(err)?;
    let (inst, tour) = gen_negative_triangle_reduction(&g, nonnegative).map_err(err)?;
    Ok((Instance(inst), Tour(tour)))
}

#[pyfunction]
fn negative_triangle(n: usize, weights: Vec<i64>) -> PyResult<Option<(usize, usize, usize)>> {
    let g = ReductionInput::from_upper_triangle(n, &weights).map_err(err)?;
    Ok(oracle::negative_triangle(&g).map_err(err)?.map(|[a, b, c]| (a + 1, b + 1, c + 1)))
}

#[pymodule]
fn kopt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<Tour>()?;
    m.add_function(wrap_pyfunction!(best_move, m)?)?;
    m.add_function(wrap_pyfunction!(naive_best_move, m)?)?;
    m.add_function(wrap_pyfunction!(local_search, m)?)?;
    m.add_function(wrap_pyfunction!(c_of_k, m)?)?;
    m.add_function(wrap_pyfunction!(treewidth, m)?)?;
    m.add_function(wrap_pyfunction!(patterns, m)?)?;
    m.add_function(wrap_pyfunction!(neg_triangle_instance, m)?)?;
    m.add_function(wrap_pyfunction!(negative_triangle, m)?)?;
    Ok(())
}
