//! Python bindings: fields, algebra elements, the metric, both right-hand
//! sides, whole simulations and the identity suite.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use chgeo::algebra;
use chgeo::checks::{identity_suite, CheckOptions};
use chgeo::diagnostics::apriori_check;
use chgeo::dynamics;
use chgeo::run;

fn py_err(e: chgeo::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Uniform periodic grid on the unit circle.
#[pyclass(frozen)]
struct Grid {
    inner: Arc<chgeo::PeriodicGrid>,
}

#[pymethods]
impl Grid {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        Ok(Self {
            inner: chgeo::PeriodicGrid::new(n).map_err(py_err)?,
        })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dealias_cutoff(&self) -> i64 {
        self.inner.dealias_cutoff()
    }

    fn points(&self) -> Vec<f64> {
        self.inner.points()
    }

    fn __repr__(&self) -> String {
        format!("Grid(n={})", self.inner.n())
    }
}

/// Real periodic field held as samples and Fourier coefficients.
#[pyclass(frozen)]
struct Field {
    inner: chgeo::SpectralField,
}

#[pymethods]
impl Field {
    #[new]
    fn new(samples: Vec<f64>) -> PyResult<Self> {
        let grid = chgeo::PeriodicGrid::new(samples.len()).map_err(py_err)?;
        Ok(Self {
            inner: chgeo::SpectralField::from_samples(&grid, samples).map_err(py_err)?,
        })
    }

    fn samples(&self) -> Vec<f64> {
        self.inner.samples().to_vec()
    }

    /// Coefficient of `e^{2 pi i k x}` as `(re, im)`.
    fn coeff(&self, k: i64) -> (f64, f64) {
        let c = self.inner.coeff(k);
        (c.re, c.im)
    }

    fn derivative(&self) -> Self {
        Self {
            inner: self.inner.derivative(),
        }
    }

    /// `A^s` with symbol `(1 + 4 pi^2 k^2)^s`.
    fn apply_power(&self, s: f64) -> Self {
        Self {
            inner: self.inner.apply_power(s),
        }
    }

    fn circle_integral(&self) -> f64 {
        self.inner.circle_integral()
    }

    fn sobolev_norm_sq(&self, s: f64) -> f64 {
        self.inner.sobolev_norm_sq(s)
    }

    fn dealiased_product(&self, other: &Field) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.dealiased_product(&other.inner).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }
}

/// Element `(u, rho, alpha)` of the extended algebra.
#[pyclass(frozen)]
struct AlgebraElement {
    inner: chgeo::AlgebraElement,
}

#[pymethods]
impl AlgebraElement {
    #[new]
    fn new(u: Vec<f64>, rho: Vec<f64>, alpha: f64) -> PyResult<Self> {
        let grid = chgeo::PeriodicGrid::new(u.len()).map_err(py_err)?;
        let u = chgeo::SpectralField::from_samples(&grid, u).map_err(py_err)?;
        let rho = chgeo::SpectralField::from_samples(&grid, rho).map_err(py_err)?;
        Ok(Self {
            inner: chgeo::AlgebraElement::new(u, rho, alpha).map_err(py_err)?,
        })
    }

    #[getter]
    fn u(&self) -> Vec<f64> {
        self.inner.u.samples().to_vec()
    }

    #[getter]
    fn rho(&self) -> Vec<f64> {
        self.inner.rho.samples().to_vec()
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    fn __repr__(&self) -> String {
        format!("AlgebraElement(n={}, alpha={})", self.inner.u.n(), self.inner.alpha)
    }
}

fn metric(kappa: f64, s: f64) -> PyResult<chgeo::MetricParams> {
    chgeo::MetricParams::new(kappa, s).map_err(py_err)
}

#[pyfunction]
fn inner_product(x: &AlgebraElement, y: &AlgebraElement, kappa: f64, s: f64) -> PyResult<f64> {
    Ok(algebra::inner_product(&x.inner, &y.inner, &metric(kappa, s)?))
}

#[pyfunction]
fn metric_norm_sq(x: &AlgebraElement, kappa: f64, s: f64) -> PyResult<f64> {
    Ok(algebra::metric_norm_sq(&x.inner, &metric(kappa, s)?))
}

#[pyfunction]
fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> PyResult<AlgebraElement> {
    Ok(AlgebraElement {
        inner: algebra::ad(&x.inner, &y.inner).map_err(py_err)?,
    })
}

#[pyfunction]
fn ad_transpose(x: &AlgebraElement, z: &AlgebraElement, kappa: f64, s: f64) -> PyResult<AlgebraElement> {
    Ok(AlgebraElement {
        inner: algebra::ad_transpose(&x.inner, &z.inner, &metric(kappa, s)?).map_err(py_err)?,
    })
}

/// Returns `(lhs, rhs, holds)` of the a-priori energy inequality.
#[pyfunction]
fn apriori(x: &AlgebraElement, kappa: f64, s: f64) -> PyResult<(f64, f64, bool)> {
    let c = apriori_check(&x.inner, &metric(kappa, s)?);
    Ok((c.lhs, c.rhs, c.holds))
}

fn model(x: &AlgebraElement, a: f64, kappa: f64, s: f64) -> PyResult<chgeo::ModelParams> {
    chgeo::ModelParams::new(a, kappa, x.inner.alpha, s).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (x, a, kappa, s))]
fn rhs_direct(x: &AlgebraElement, a: f64, kappa: f64, s: f64) -> PyResult<AlgebraElement> {
    Ok(AlgebraElement {
        inner: dynamics::rhs_direct(&x.inner, &model(x, a, kappa, s)?).map_err(py_err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (x, kappa, s))]
fn rhs_geodesic(x: &AlgebraElement, kappa: f64, s: f64) -> PyResult<AlgebraElement> {
    Ok(AlgebraElement {
        inner: dynamics::rhs_geodesic(&x.inner, &model(x, 2.0, kappa, s)?).map_err(py_err)?,
    })
}

/// Runs a configuration given as JSON text; returns `{"summary", "trajectory"}`.
#[pyfunction]
fn simulate<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = chgeo::parse_config(config_json).map_err(py_err)?;
    let out = py.detach(|| run::simulate(&cfg)).map_err(py_err)?;
    let text = format!(
        "{{\"summary\":{},\"trajectory\":{}}}",
        to_json(&out.summary)?,
        to_json(&out.report.rows)?
    );
    json_to_py(py, &text)
}

/// The operator-identity suite as a list of `{name, worst, tolerance, passed}`.
#[pyfunction]
fn run_check<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    let rows = py.detach(|| identity_suite(&CheckOptions::default())).map_err(py_err)?;
    json_to_py(py, &to_json(&rows)?)
}

#[pymodule]
fn chgeo_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", chgeo::ENGINE_VERSION)?;
    m.add_class::<Grid>()?;
    m.add_class::<Field>()?;
    m.add_class::<AlgebraElement>()?;
    m.add_function(wrap_pyfunction!(inner_product, m)?)?;
    m.add_function(wrap_pyfunction!(metric_norm_sq, m)?)?;
    m.add_function(wrap_pyfunction!(bracket, m)?)?;
    m.add_function(wrap_pyfunction!(ad_transpose, m)?)?;
    m.add_function(wrap_pyfunction!(apriori, m)?)?;
    m.add_function(wrap_pyfunction!(rhs_direct, m)?)?;
    m.add_function(wrap_pyfunction!(rhs_geodesic, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_check, m)?)?;
    Ok(())
}
