//! Python bindings: contours, consonant upper/lower probabilities, the
//! inferential-model contour, NPI bounds and the Monte Carlo harness.

use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use consonant::harness::{
    default_assertions, estimate_strong_validity, estimate_weak_validity, ks_uniformity,
    reproduce_table1, reproduce_table2, ConformalRegions, ConsonantUpper, ExperimentConfig,
    ValidityReport,
};
use consonant::{
    classical_interval, contour_on_grid, im_contour, im_contour_on_grid, npi_bounds,
    prediction_region, randomized_im_contour, Assertion, ConsonantPredictor, Generator, GridSpec,
    MeasureSpec, NestedRandomSetFamily, NonconformityMeasure, PlausibilityContour, RankTies,
    Sample,
};

fn err(e: consonant::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Scalars or equal-length coordinate lists.
#[derive(FromPyObject)]
enum Points {
    Scalars(Vec<f64>),
    Vectors(Vec<Vec<f64>>),
}

impl Points {
    fn sample(self) -> PyResult<Sample> {
        match self {
            Points::Scalars(v) => Sample::from_scalars(&v),
            Points::Vectors(v) => Sample::from_points(&v),
        }
        .map_err(err)
    }
}

#[derive(FromPyObject)]
enum Point {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Point {
    fn coords(self) -> Vec<f64> {
        match self {
            Point::Scalar(x) => vec![x],
            Point::Vector(v) => v,
        }
    }
}

fn measure(name: &str) -> PyResult<Arc<dyn NonconformityMeasure>> {
    Ok(name.parse::<MeasureSpec>().map_err(err)?.build())
}

fn assertion(spec: &str) -> PyResult<Assertion> {
    spec.parse().map_err(err)
}

fn generator(spec: &str) -> PyResult<Generator> {
    spec.parse().map_err(err)
}

/// A plausibility contour on a grid, read as a consonant predictor.
#[pyclass(module = "consonant_py", name = "Contour", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyContour {
    inner: PlausibilityContour,
}

#[pymethods]
impl PyContour {
    /// Reads the CSV or JSON text written by `to_csv`/`to_json`.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyContour {
            inner: PlausibilityContour::read_any(text).map_err(err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn counts(&self) -> Vec<usize> {
        self.inner.counts().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values()
    }

    /// Grid points as coordinate lists.
    #[getter]
    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.grid().points().map(<[f64]>::to_vec).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Contour value at the grid point nearest to `point`.
    fn value_at(&self, point: Point) -> PyResult<f64> {
        self.inner.value_at(&point.coords()).map_err(err)
    }

    /// `sup_{y ∈ A} π(y)` over the grid.
    fn upper(&self, assertion_spec: &str) -> PyResult<f64> {
        ConsonantPredictor::new(self.inner.clone())
            .upper_probability(&assertion(assertion_spec)?)
            .map_err(err)
    }

    /// `1 − upper(not A)`.
    fn lower(&self, assertion_spec: &str) -> PyResult<f64> {
        ConsonantPredictor::new(self.inner.clone())
            .lower_probability(&assertion(assertion_spec)?)
            .map_err(err)
    }

    /// Region `{π > threshold}` as a dict with the mask, intervals (1-D) and area.
    #[pyo3(signature = (alpha, corrected = true))]
    fn region<'py>(
        &self,
        py: Python<'py>,
        alpha: f64,
        corrected: bool,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = prediction_region(&self.inner, alpha, corrected).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("alpha", alpha)?;
        d.set_item("threshold", r.threshold)?;
        d.set_item("mask", r.mask().to_vec())?;
        d.set_item("intervals", r.intervals().map(<[(f64, f64)]>::to_vec))?;
        d.set_item("area", r.area())?;
        Ok(d)
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(err)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    fn to_json(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner
            .write_json(&mut buf, BTreeMap::new())
            .map_err(err)?;
        Ok(String::from_utf8(buf).expect("json output is UTF-8"))
    }

    fn __repr__(&self) -> String {
        format!("Contour(n={}, points={})", self.inner.n(), self.inner.len())
    }
}

/// Conformal contour of the next observation on a grid spec such as
/// `auto`, `auto:200:0.5` or `-3:3:121`.
#[pyfunction]
#[pyo3(signature = (data, measure_name = "median", grid = "auto"))]
fn contour(data: Points, measure_name: &str, grid: &str) -> PyResult<PyContour> {
    let data = data.sample()?;
    let grid = grid
        .parse::<GridSpec>()
        .map_err(err)?
        .resolve(&data)
        .map_err(err)?;
    Ok(PyContour {
        inner: contour_on_grid(&data, measure(measure_name)?.as_ref(), &grid).map_err(err)?,
    })
}

/// The inferential-model contour on a grid; `ties = "max"` gives every tie the largest rank.
#[pyfunction]
#[pyo3(signature = (data, measure_name = "median", grid = "auto", ties = "min"))]
fn im_contour_grid(
    data: Points,
    measure_name: &str,
    grid: &str,
    ties: &str,
) -> PyResult<PyContour> {
    let data = data.sample()?;
    let grid = grid
        .parse::<GridSpec>()
        .map_err(err)?
        .resolve(&data)
        .map_err(err)?;
    let ties: RankTies = ties.parse().map_err(err)?;
    Ok(PyContour {
        inner: im_contour_on_grid(&data, measure(measure_name)?.as_ref(), &grid, ties)
            .map_err(err)?,
    })
}

/// `π(y)`: the fraction of scores at least as large as the candidate's.
#[pyfunction]
#[pyo3(signature = (data, candidate, measure_name = "median"))]
fn transducer(data: Points, candidate: Point, measure_name: &str) -> PyResult<f64> {
    let data = data.sample()?;
    Ok(
        consonant::transducer(&data, measure(measure_name)?.as_ref(), &candidate.coords())
            .map_err(err)?
            .value(),
    )
}

/// `π` with ties weighted by `w ∈ [0, 1]`.
#[pyfunction]
#[pyo3(signature = (data, candidate, w, measure_name = "median"))]
fn smoothed_transducer(
    data: Points,
    candidate: Point,
    w: f64,
    measure_name: &str,
) -> PyResult<f64> {
    let data = data.sample()?;
    consonant::smoothed_transducer(
        &data,
        measure(measure_name)?.as_ref(),
        &candidate.coords(),
        w,
    )
    .map_err(err)
}

/// The inferential-model plausibility of one candidate, lower or randomized family.
#[pyfunction]
#[pyo3(signature = (data, candidate, measure_name = "median", w = None))]
fn im_plausibility(
    data: Points,
    candidate: Point,
    measure_name: &str,
    w: Option<f64>,
) -> PyResult<f64> {
    let data = data.sample()?;
    let m = measure(measure_name)?;
    match w {
        Some(w) => randomized_im_contour(&data, m.as_ref(), &candidate.coords(), w),
        None => {
            let family = NestedRandomSetFamily::lower(data.len()).map_err(err)?;
            im_contour(&data, m.as_ref(), &candidate.coords(), &family)
        }
    }
    .map_err(err)
}

/// `(lower, upper)` nonparametric predictive probabilities of an assertion.
#[pyfunction]
fn npi(data: Vec<f64>, assertion_spec: &str) -> PyResult<(f64, f64)> {
    let b = npi_bounds(
        &Sample::from_scalars(&data).map_err(err)?,
        &assertion(assertion_spec)?,
    )
    .map_err(err)?;
    Ok((b.lower(), b.upper()))
}

/// `(y_(r), y_(s), (s − r)/(n + 1))`.
#[pyfunction]
fn wilks(data: Vec<f64>, r: usize, s: usize) -> PyResult<(f64, f64, f64)> {
    let w = classical_interval(&Sample::from_scalars(&data).map_err(err)?, r, s).map_err(err)?;
    Ok((w.interval.lo.value, w.interval.hi.value, w.level))
}

#[pyfunction]
fn k_n(n: usize, alpha: f64) -> PyResult<f64> {
    consonant::k_n(n, alpha).map_err(err)
}

fn report_rows<'py>(py: Python<'py>, report: &ValidityReport) -> PyResult<Vec<Bound<'py, PyDict>>> {
    report
        .rows
        .iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("experiment", &r.experiment)?;
            d.set_item("predictor", &r.predictor)?;
            d.set_item("generator", &r.generator)?;
            d.set_item("n", r.n)?;
            d.set_item("alpha", r.alpha)?;
            d.set_item("assertion", &r.assertion)?;
            d.set_item("events", r.events)?;
            d.set_item("reps", r.reps)?;
            d.set_item("estimate", r.estimate)?;
            d.set_item("se", r.se)?;
            d.set_item("bound", r.bound)?;
            d.set_item("pass", r.pass)?;
            Ok(d)
        })
        .collect()
}

/// Monte Carlo coverage of conformal regions, one dict per level.
#[pyfunction]
#[pyo3(signature = (dist, n, reps, alphas, seed = 0, measure_name = "median"))]
fn validate_weak<'py>(
    py: Python<'py>,
    dist: &str,
    n: usize,
    reps: usize,
    alphas: Vec<f64>,
    seed: u64,
    measure_name: &str,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg =
        ExperimentConfig::new(generator(dist)?, n, reps, alphas, seed).with_measure(measure_name);
    let builder = ConformalRegions::new(measure(measure_name)?);
    let report = py
        .detach(|| estimate_weak_validity(&cfg, &builder))
        .map_err(err)?;
    report_rows(py, &report)
}

/// Monte Carlo strong-validity check of the consonant predictor over
/// `assertions` (a built-in suite when omitted).
#[pyfunction]
#[pyo3(signature = (dist, n, reps, alphas, seed = 0, measure_name = "median", assertions = None))]
#[allow(clippy::too_many_arguments)]
fn validate_strong<'py>(
    py: Python<'py>,
    dist: &str,
    n: usize,
    reps: usize,
    alphas: Vec<f64>,
    seed: u64,
    measure_name: &str,
    assertions: Option<Vec<String>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let assertions = match assertions {
        Some(specs) => specs
            .iter()
            .map(|s| assertion(s))
            .collect::<PyResult<Vec<_>>>()?,
        None => default_assertions(),
    };
    let cfg = ExperimentConfig::new(generator(dist)?, n, reps, alphas, seed)
        .with_measure(measure_name)
        .with_assertions(&assertions);
    let predictor = ConsonantUpper::new(measure(measure_name)?);
    let report = py
        .detach(|| estimate_strong_validity(&cfg, &predictor, &assertions))
        .map_err(err)?;
    report_rows(py, &report)
}

/// `(statistic, p_value)` of a KS test of the transducer at the truth against Unif(0, 1).
#[pyfunction]
#[pyo3(signature = (dist, n, reps, seed = 0, smoothed = true, measure_name = "median"))]
fn ks_test(
    py: Python<'_>,
    dist: &str,
    n: usize,
    reps: usize,
    seed: u64,
    smoothed: bool,
    measure_name: &str,
) -> PyResult<(f64, f64)> {
    let cfg = ExperimentConfig::new(generator(dist)?, n, reps, vec![0.05], seed)
        .with_measure(measure_name);
    let r = py.detach(|| ks_uniformity(&cfg, smoothed)).map_err(err)?;
    Ok((r.statistic, r.p_value))
}

/// Dirichlet-process coverage table as `{(n, distribution): coverage}`.
#[pyfunction]
#[pyo3(signature = (reps = 5000, seed = 0))]
fn table1(py: Python<'_>, reps: usize, seed: u64) -> PyResult<BTreeMap<(usize, String), f64>> {
    let t = py.detach(|| reproduce_table1(reps, seed)).map_err(err)?;
    Ok(t.rows
        .into_iter()
        .map(|r| ((r.n, r.distribution), r.coverage))
        .collect())
}

/// Depth-region table as `{(method, distribution): (coverage, area)}`.
#[pyfunction]
#[pyo3(signature = (reps = 500, seed = 0))]
fn table2(
    py: Python<'_>,
    reps: usize,
    seed: u64,
) -> PyResult<BTreeMap<(String, String), (f64, f64)>> {
    let t = py.detach(|| reproduce_table2(reps, seed)).map_err(err)?;
    Ok(t.rows
        .into_iter()
        .map(|r| ((r.method, r.distribution), (r.coverage, r.area)))
        .collect())
}

#[pymodule]
fn consonant_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyContour>()?;
    m.add_function(wrap_pyfunction!(contour, m)?)?;
    m.add_function(wrap_pyfunction!(im_contour_grid, m)?)?;
    m.add_function(wrap_pyfunction!(transducer, m)?)?;
    m.add_function(wrap_pyfunction!(smoothed_transducer, m)?)?;
    m.add_function(wrap_pyfunction!(im_plausibility, m)?)?;
    m.add_function(wrap_pyfunction!(npi, m)?)?;
    m.add_function(wrap_pyfunction!(wilks, m)?)?;
    m.add_function(wrap_pyfunction!(k_n, m)?)?;
    m.add_function(wrap_pyfunction!(validate_weak, m)?)?;
    m.add_function(wrap_pyfunction!(validate_strong, m)?)?;
    m.add_function(wrap_pyfunction!(ks_test, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    m.add_function(wrap_pyfunction!(table2, m)?)?;
    Ok(())
}
