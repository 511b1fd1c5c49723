//! Python bindings: models, qualitative analysis, RTDP-Bel tables, decision
//! trees and Monte-Carlo evaluation.

use std::sync::Arc;

use energy_pomdp::benchmarks::{toy, Hallway, RockSample};
use energy_pomdp::dtree::{
    generate_training_data, learn_tree, prune_tree, Criterion, DecisionTree, DtPolicy, FeatureMap, LearnOptions,
    DEFAULT_ALPHA, DEFAULT_MIN_LEAF, DEFAULT_SIMULATIONS, DEFAULT_STEPS,
};
use energy_pomdp::parser::{emit_model, parse_model};
use energy_pomdp::qualitative::{compute_allowed, export_allowed, qualitative_answer, Feasibility, SigmaAll};
use energy_pomdp::rtdp::{Rtdp, DEFAULT_CUTOFF, DEFAULT_PRECISION, DEFAULT_TRIALS};
use energy_pomdp::simulate::{evaluate, EvalReport};
use energy_pomdp::{AllowedTable, Pomdp, ProductPomdp, SupportGraph, ValueTable};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// An energy-constrained POMDP with deterministic observations.
#[pyclass(name = "Model", module = "energy_pomdp", frozen)]
struct PyModel {
    inner: Arc<Pomdp>,
}

#[pymethods]
impl PyModel {
    /// Parses the text format (probabilistic observations are determinized).
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let model = parse_model(text).map_err(value_err)?.into_pomdp();
        if let Some(v) = model.validate().first() {
            return Err(PyValueError::new_err(format!("{v:?}")));
        }
        Ok(PyModel { inner: Arc::new(model) })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| value_err(format!("{path}: {e}")))?;
        Self::parse(&text).map_err(|e| value_err(format!("{path}:{e}")))
    }

    #[staticmethod]
    #[pyo3(signature = (layout = "6x6", capacity = 10))]
    fn hallway(layout: &str, capacity: u32) -> PyResult<Self> {
        let model = Hallway::builtin(layout, capacity).and_then(|h| h.generate()).map_err(value_err)?;
        Ok(PyModel { inner: Arc::new(model) })
    }

    #[staticmethod]
    #[pyo3(signature = (size = 3, rocks = 4, capacity = 7))]
    fn rocksample(size: usize, rocks: usize, capacity: u32) -> PyResult<Self> {
        let model = RockSample::standard(size, rocks, capacity).generate().map_err(value_err)?;
        Ok(PyModel { inner: Arc::new(model) })
    }

    #[staticmethod]
    #[pyo3(signature = (capacity = 3))]
    fn tiger(capacity: u32) -> Self {
        PyModel { inner: Arc::new(toy::energy_tiger(capacity)) }
    }

    #[staticmethod]
    #[pyo3(signature = (length = 5, capacity = 3, reload_at = None))]
    fn corridor(length: usize, capacity: u32, reload_at: Option<usize>) -> PyResult<Self> {
        if length < 2 || reload_at.is_some_and(|r| r >= length) {
            return Err(PyValueError::new_err("corridor needs length >= 2 and reload_at inside it"));
        }
        Ok(PyModel { inner: Arc::new(toy::reload_corridor(length, capacity, reload_at)) })
    }

    /// Copy with a different energy capacity (0 disables the constraint).
    fn with_capacity(&self, capacity: u32) -> Self {
        let mut m = (*self.inner).clone();
        m.capacity = capacity;
        PyModel { inner: Arc::new(m) }
    }

    fn to_text(&self) -> String {
        emit_model(&self.inner)
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.states.clone()
    }

    #[getter]
    fn actions(&self) -> Vec<String> {
        self.inner.actions.clone()
    }

    #[getter]
    fn observations(&self) -> Vec<String> {
        self.inner.observations.clone()
    }

    #[getter]
    fn capacity(&self) -> u32 {
        self.inner.capacity
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(states={}, actions={}, observations={}, capacity={})",
            self.inner.num_states(),
            self.inner.num_actions(),
            self.inner.num_observations(),
            self.inner.capacity
        )
    }
}

struct Analysis {
    product: ProductPomdp,
    graph: SupportGraph,
    allowed: AllowedTable,
}

/// Product construction and belief-support analysis of a model; entry point
/// for solving, learning and evaluation.
#[pyclass(name = "Solver", module = "energy_pomdp", frozen)]
struct PySolver {
    model: Arc<Pomdp>,
    inner: Arc<Analysis>,
}

/// Value table computed by RTDP-Bel.
#[pyclass(name = "ValueTable", module = "energy_pomdp", frozen)]
struct PyTable {
    inner: Arc<ValueTable>,
}

/// Decision tree over belief features.
#[pyclass(name = "Tree", module = "energy_pomdp", frozen)]
struct PyTree {
    tree: Arc<DecisionTree>,
    /// Feature map kind, "raw" or "grid".
    kind: String,
}

fn feature_map(model: &Pomdp, features: &str) -> PyResult<FeatureMap> {
    match features {
        "raw" => Ok(FeatureMap::raw(model)),
        "grid" => FeatureMap::grid(model).map_err(value_err),
        other => Err(PyValueError::new_err(format!("unknown feature map '{other}' (raw or grid)"))),
    }
}

fn report_dict<'py>(py: Python<'py>, r: &EvalReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("policy", &r.policy)?;
    d.set_item("size", r.size)?;
    d.set_item("value", r.val)?;
    d.set_item("ci95", r.half_width)?;
    d.set_item("lower_bound", r.is_lower_bound())?;
    d.set_item("reach", r.reach)?;
    d.set_item("sink", r.sink)?;
    d.set_item("cutoff", r.truncated)?;
    d.set_item("mean_steps", r.mean_steps)?;
    d.set_item("fallback_rate", r.fallback_rate)?;
    d.set_item("violations", r.violations)?;
    d.set_item("runs", r.sims)?;
    Ok(d)
}

#[pymethods]
impl PySolver {
    #[new]
    fn new(py: Python<'_>, model: &PyModel) -> PyResult<Self> {
        let m = model.inner.clone();
        let inner = py.detach(|| {
            let product = ProductPomdp::for_model(m.clone());
            let graph = SupportGraph::build(&product).map_err(|e| e.to_string())?;
            let allowed = compute_allowed(&graph);
            Ok::<_, String>(Analysis { product, graph, allowed })
        });
        Ok(PySolver { model: m, inner: Arc::new(inner.map_err(runtime_err)?) })
    }

    #[getter]
    fn feasible(&self) -> bool {
        qualitative_answer(&self.inner.graph, &self.inner.allowed) == Feasibility::Feasible
    }

    #[getter]
    fn product_states(&self) -> usize {
        self.inner.product.num_states()
    }

    #[getter]
    fn supports(&self) -> usize {
        self.inner.graph.len()
    }

    #[getter]
    fn winning_supports(&self) -> usize {
        self.inner.allowed.num_winning()
    }

    /// Allowed actions per winning support, one line each.
    fn allowed_text(&self) -> String {
        export_allowed(&self.inner.graph, &self.inner.allowed, &self.inner.product)
    }

    #[pyo3(signature = (trials = DEFAULT_TRIALS, cutoff = DEFAULT_CUTOFF, seed = 0, precision = DEFAULT_PRECISION))]
    fn solve(&self, py: Python<'_>, trials: usize, cutoff: usize, seed: u64, precision: u32) -> PyResult<PyTable> {
        if precision == 0 {
            return Err(PyValueError::new_err("precision must be positive"));
        }
        let an = self.inner.clone();
        let table = py.detach(move || {
            let rtdp = Rtdp::new(&an.product, &an.graph, &an.allowed, precision);
            let mut table = ValueTable::new(&an.product, precision);
            rtdp.solve(&mut table, trials, cutoff, seed).map(|_| table)
        });
        Ok(PyTable { inner: Arc::new(table.map_err(runtime_err)?) })
    }

    /// Learns a pruned tree from simulations of the table's greedy policy.
    #[pyo3(signature = (table, criterion = "infogain", alpha = DEFAULT_ALPHA, min_leaf = DEFAULT_MIN_LEAF,
                        features = "raw", sims = DEFAULT_SIMULATIONS, steps = DEFAULT_STEPS, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn learn(
        &self,
        py: Python<'_>,
        table: &PyTable,
        criterion: &str,
        alpha: f64,
        min_leaf: usize,
        features: &str,
        sims: usize,
        steps: usize,
        seed: u64,
    ) -> PyResult<PyTree> {
        let criterion: Criterion = criterion.parse().map_err(value_err)?;
        let kind = features.to_string();
        let f = feature_map(&self.model, features)?;
        table.inner.check_compatible(&self.inner.product).map_err(value_err)?;
        let (an, t) = (self.inner.clone(), table.inner.clone());
        let tree = py.detach(move || {
            let rtdp = Rtdp::new(&an.product, &an.graph, &an.allowed, t.precision);
            let data = generate_training_data(&mut rtdp.greedy(&t), &an.product, &f, t.precision, sims, steps, seed)
                .map_err(|e| e.to_string())?;
            let options = LearnOptions { criterion, min_leaf, max_depth: None };
            let tree = learn_tree(&data, &options).map_err(|e| e.to_string())?;
            Ok::<_, String>(prune_tree(&tree, &data, alpha))
        });
        Ok(PyTree { tree: Arc::new(tree.map_err(runtime_err)?), kind })
    }

    /// Evaluates `policy` ("all", "rtdp" with `table`, or "dt" with `tree`).
    #[pyo3(signature = (policy, table = None, tree = None, sims = 10_000, cutoff = DEFAULT_CUTOFF, seed = 0, precision = DEFAULT_PRECISION))]
    #[allow(clippy::too_many_arguments)]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        policy: &str,
        table: Option<&PyTable>,
        tree: Option<&PyTree>,
        sims: usize,
        cutoff: usize,
        seed: u64,
        precision: u32,
    ) -> PyResult<Bound<'py, PyDict>> {
        let an = self.inner.clone();
        let report = match policy {
            "all" => py.detach(|| {
                evaluate("sigma_all", || SigmaAll::new(&an.graph, &an.allowed), &an.product, sims, cutoff, seed, None)
            }),
            "rtdp" => {
                let t = table.ok_or_else(|| PyValueError::new_err("policy 'rtdp' needs a table"))?.inner.clone();
                t.check_compatible(&an.product).map_err(value_err)?;
                py.detach(|| {
                    let rtdp = Rtdp::new(&an.product, &an.graph, &an.allowed, t.precision);
                    evaluate("rtdp", || rtdp.greedy(&t), &an.product, sims, cutoff, seed, None)
                        .map(|r| r.with_size(t.len()))
                })
            }
            "dt" => {
                let t = tree.ok_or_else(|| PyValueError::new_err("policy 'dt' needs a tree"))?;
                let tree = t.tree.clone();
                let features = feature_map(&self.model, &t.kind)?;
                if features.names() != tree.feature_names.as_slice() {
                    return Err(PyValueError::new_err("tree was learned for a different model"));
                }
                py.detach(|| {
                    let make = || DtPolicy::new(&tree, &features, &an.product, &an.graph, &an.allowed, precision);
                    evaluate("dt", make, &an.product, sims, cutoff, seed, None).map(|r| r.with_size(tree.size()))
                })
            }
            other => return Err(PyValueError::new_err(format!("unknown policy '{other}' (all, rtdp or dt)"))),
        };
        report_dict(py, &report.map_err(runtime_err)?)
    }

    fn __repr__(&self) -> String {
        format!(
            "Solver(product_states={}, supports={}, feasible={})",
            self.product_states(),
            self.supports(),
            if self.feasible() { "True" } else { "False" }
        )
    }
}

#[pymethods]
impl PyTable {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyTable { inner: Arc::new(ValueTable::from_text(text).map_err(value_err)?) })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[getter]
    fn precision(&self) -> u32 {
        self.inner.precision
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("ValueTable(entries={}, precision={})", self.inner.len(), self.inner.precision)
    }
}

#[pymethods]
impl PyTree {
    /// Parses the tree text format against a model's feature map.
    #[staticmethod]
    #[pyo3(signature = (text, model, features = "raw"))]
    fn parse(text: &str, model: &PyModel, features: &str) -> PyResult<Self> {
        let names = feature_map(&model.inner, features)?;
        let tree = DecisionTree::parse(text, names.names()).map_err(value_err)?;
        Ok(PyTree { tree: Arc::new(tree), kind: features.to_string() })
    }

    #[getter]
    fn size(&self) -> usize {
        self.tree.size()
    }

    #[getter]
    fn depth(&self) -> usize {
        self.tree.depth()
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.tree.feature_names.clone()
    }

    /// Action index chosen for a feature vector.
    fn decide(&self, features: Vec<i64>) -> PyResult<usize> {
        self.tree.eval(&features).map_err(value_err)
    }

    fn to_dot(&self, model: &PyModel) -> String {
        self.tree.to_dot(&model.inner.actions)
    }

    fn __str__(&self) -> String {
        self.tree.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Tree(size={}, depth={})", self.tree.size(), self.tree.depth())
    }
}

#[pymodule(name = "energy_pomdp")]
fn init_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PySolver>()?;
    m.add_class::<PyTable>()?;
    m.add_class::<PyTree>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
