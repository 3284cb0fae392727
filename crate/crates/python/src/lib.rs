//! Python bindings for the MOLE solver, the MOGSA baseline and the
//! landscape grid.

#![allow(clippy::useless_conversion)]

use mole_cli::config::{apply_overrides, AlgoConfig};
use mole_cli::run::build_problem;
use mole_core::landscape::{compute_landscape, GridSpec, Landscape, DEFAULT_GRID_EPS};
use mole_core::mogsa::run_mogsa as core_run_mogsa;
use mole_core::postprocess::normalized_gap;
use mole_core::{MogVariant, Mop, ObjectiveVector, StartingPoints, TestProblem};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn variant(name: &str) -> PyResult<MogVariant> {
    match name.to_ascii_lowercase().as_str() {
        "gm" => Ok(MogVariant::GeometricMean),
        "n" => Ok(MogVariant::Normalized),
        "ch" => Ok(MogVariant::ConvexHull),
        _ => Err(err(format!(
            "unknown variant '{name}', expected gm, n or ch"
        ))),
    }
}

fn overrides(map: Option<Vec<(String, String)>>) -> Vec<(String, String)> {
    map.unwrap_or_default()
}

fn setup(
    name: &str,
    dimension: usize,
    budget: Option<u64>,
    set: &[(String, String)],
) -> PyResult<(Mop, AlgoConfig)> {
    let budget = budget.unwrap_or(100_000 * dimension as u64);
    if budget == 0 {
        return Err(err("budget must be positive"));
    }
    let mop = build_problem(name, dimension)
        .map_err(err)?
        .with_budget(budget);
    let config = apply_overrides(&AlgoConfig::for_problem(&mop), set).map_err(err)?;
    Ok((mop, config))
}

/// A named test problem with an evaluation counter.
#[pyclass]
struct Problem {
    inner: Mop,
}

#[pymethods]
impl Problem {
    #[new]
    #[pyo3(signature = (name, dimension = 2))]
    fn new(name: &str, dimension: usize) -> PyResult<Self> {
        Ok(Self {
            inner: build_problem(name, dimension).map_err(err)?,
        })
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name().to_string()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn evaluations(&self) -> u64 {
        self.inner.evaluations()
    }

    /// `(lower, upper)` or `None` when unbounded.
    #[getter]
    fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.inner
            .bounds()
            .map(|b| (b.lower().to_vec(), b.upper().to_vec()))
    }

    fn evaluate(&mut self, x: Vec<f64>) -> PyResult<(f64, f64)> {
        let f = self.inner.evaluate(&x).map_err(err)?;
        Ok((f.f1(), f.f2()))
    }

    fn gradients(&mut self, x: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        self.inner.gradients(&x).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Problem('{}', dimension={})",
            self.inner.name(),
            self.inner.dimension()
        )
    }
}

/// Multi-objective gradient of two objective gradients.
#[pyfunction]
#[pyo3(signature = (g1, g2, variant = "gm"))]
fn mog(g1: Vec<f64>, g2: Vec<f64>, variant: &str) -> PyResult<Vec<f64>> {
    if g1.len() != g2.len() {
        return Err(err("gradients differ in length"));
    }
    Ok(self::variant(variant)?.compute(&g1, &g2).direction)
}

#[pyfunction]
#[pyo3(signature = (points, reference = (1.0, 1.0)))]
fn hypervolume(points: Vec<(f64, f64)>, reference: (f64, f64)) -> f64 {
    let pts: Vec<ObjectiveVector> = points
        .iter()
        .map(|&(a, b)| ObjectiveVector::new(a, b))
        .collect();
    mole_core::hypervolume_2d(&pts, &ObjectiveVector::new(reference.0, reference.1))
}

/// Area of the box spanned by two mutually nondominated points.
#[pyfunction]
fn hv_gap(a: (f64, f64), b: (f64, f64)) -> PyResult<f64> {
    mole_core::hv_gap(
        &ObjectiveVector::new(a.0, a.1),
        &ObjectiveVector::new(b.0, b.1),
    )
    .map_err(err)
}

#[pyclass(get_all)]
struct EfficientSet {
    set_id: usize,
    x: Vec<Vec<f64>>,
    f: Vec<(f64, f64)>,
}

#[pymethods]
impl EfficientSet {
    fn __len__(&self) -> usize {
        self.x.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "EfficientSet(set_id={}, nodes={})",
            self.set_id,
            self.x.len()
        )
    }
}

#[pyclass(get_all)]
struct MoleResult {
    sets: Vec<Py<EfficientSet>>,
    front: Vec<(f64, f64)>,
    stop: String,
    evals_used: u64,
    explore_calls: usize,
    starting_points_consumed: usize,
    normalized_gap: f64,
}

#[pymethods]
impl MoleResult {
    fn __repr__(&self) -> String {
        format!(
            "MoleResult(sets={}, evals_used={}, stop={})",
            self.sets.len(),
            self.evals_used,
            self.stop
        )
    }
}

/// Runs MOLE. `starts` replaces the seeded uniform starting points;
/// `overrides` takes the same `key=value` pairs as the command line.
#[pyfunction]
#[pyo3(signature = (problem, dimension = 2, seed = 1, budget = None, starts = None, overrides = None))]
fn run_mole(
    py: Python<'_>,
    problem: &str,
    dimension: usize,
    seed: u64,
    budget: Option<u64>,
    starts: Option<Vec<Vec<f64>>>,
    overrides: Option<Vec<(String, String)>>,
) -> PyResult<MoleResult> {
    let (mut mop, config) = setup(problem, dimension, budget, &self::overrides(overrides))?;
    let source = match starts {
        Some(s) => StartingPoints::ExplicitList(s),
        None => StartingPoints::UniformRandom {
            seed,
            count: config.mole.max_starting_points,
        },
    };
    let r = py
        .allow_threads(|| mole_core::run_mole(&mut mop, &source, &config.mole))
        .map_err(err)?;
    let sets = r
        .archive
        .sets()
        .iter()
        .map(|s| {
            Py::new(
                py,
                EfficientSet {
                    set_id: s.set_id,
                    x: s.nodes().iter().map(|n| n.x.clone()).collect(),
                    f: s.nodes().iter().map(|n| (n.f.f1(), n.f.f2())).collect(),
                },
            )
        })
        .collect::<PyResult<_>>()?;
    Ok(MoleResult {
        sets,
        front: r
            .archive
            .nondominated()
            .iter()
            .map(|f| (f.f1(), f.f2()))
            .collect(),
        stop: format!("{:?}", r.stop),
        evals_used: r.evals_used,
        explore_calls: r.explore_calls,
        starting_points_consumed: r.starting_points_consumed,
        normalized_gap: normalized_gap(&r.archive),
    })
}

/// Runs the MOGSA baseline from `start` and returns its visited points.
#[pyfunction]
#[pyo3(signature = (problem, start, budget = None, overrides = None))]
fn run_mogsa<'py>(
    py: Python<'py>,
    problem: &str,
    start: Vec<f64>,
    budget: Option<u64>,
    overrides: Option<Vec<(String, String)>>,
) -> PyResult<Bound<'py, PyDict>> {
    let (mut mop, config) = setup(problem, start.len(), budget, &self::overrides(overrides))?;
    let a = py
        .allow_threads(|| core_run_mogsa(&start, &mut mop, &config.mogsa))
        .map_err(err)?;
    let out = PyDict::new_bound(py);
    out.set_item("termination", format!("{:?}", a.termination))?;
    out.set_item("rounds", a.rounds)?;
    out.set_item(
        "x",
        a.visited.iter().map(|p| p.x.clone()).collect::<Vec<_>>(),
    )?;
    out.set_item(
        "f",
        a.visited
            .iter()
            .map(|p| (p.f.f1(), p.f.f2()))
            .collect::<Vec<_>>(),
    )?;
    out.set_item("handoffs", a.handoffs)?;
    out.set_item("evals_used", mop.evaluations())?;
    Ok(out)
}

/// Gradient-field landscape on a regular grid over the plot bounds.
#[pyclass]
struct Grid {
    inner: Landscape,
}

#[pymethods]
impl Grid {
    #[getter]
    fn resolution(&self) -> (usize, usize) {
        self.inner.grid.resolution
    }

    #[getter]
    fn components(&self) -> usize {
        self.inner.efficient_components()
    }

    #[getter]
    fn x(&self) -> Vec<[f64; 2]> {
        self.inner.cells.iter().map(|c| c.x).collect()
    }

    #[getter]
    fn f(&self) -> Vec<(f64, f64)> {
        self.inner
            .cells
            .iter()
            .map(|c| (c.f.f1(), c.f.f2()))
            .collect()
    }

    #[getter]
    fn mog(&self) -> Vec<[f64; 2]> {
        self.inner.cells.iter().map(|c| c.mog).collect()
    }

    #[getter]
    fn height(&self) -> Vec<f64> {
        self.inner.cells.iter().map(|c| c.height).collect()
    }

    #[getter]
    fn efficient(&self) -> Vec<bool> {
        self.inner
            .cells
            .iter()
            .map(|c| c.is_locally_efficient)
            .collect()
    }

    #[getter]
    fn domination_count(&self) -> Vec<usize> {
        self.inner
            .cells
            .iter()
            .map(|c| c.domination_count)
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.cells.len()
    }
}

#[pyfunction]
#[pyo3(signature = (problem, resolution = (100, 100), variant = "gm", eps = DEFAULT_GRID_EPS))]
fn landscape(
    py: Python<'_>,
    problem: &str,
    resolution: (usize, usize),
    variant: &str,
    eps: f64,
) -> PyResult<Grid> {
    let kind = TestProblem::from_name(problem).map_err(err)?;
    let mut mop = build_problem(problem, 2).map_err(err)?;
    let grid = GridSpec::new(kind.plot_bounds(), resolution).map_err(err)?;
    let v = self::variant(variant)?;
    let inner = py
        .allow_threads(|| compute_landscape(&mut mop, &grid, v, eps))
        .map_err(err)?;
    Ok(Grid { inner })
}

#[pymodule]
fn mole(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Problem>()?;
    m.add_class::<EfficientSet>()?;
    m.add_class::<MoleResult>()?;
    m.add_class::<Grid>()?;
    m.add_function(wrap_pyfunction!(mog, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    m.add_function(wrap_pyfunction!(hv_gap, m)?)?;
    m.add_function(wrap_pyfunction!(run_mole, m)?)?;
    m.add_function(wrap_pyfunction!(run_mogsa, m)?)?;
    m.add_function(wrap_pyfunction!(landscape, m)?)?;
    Ok(())
}
