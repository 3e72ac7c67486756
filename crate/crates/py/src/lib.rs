//! Python bindings. Reports come back as plain dicts and lists.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;
use serde_json::Value;

use lpiso_core::certificate::{self, ConstraintSet, VerifyOptions};
use lpiso_core::chord::{self, Functional};
use lpiso_core::lemmas::{self, HGrid, LemmaCase};
use lpiso_core::lp::builders::{build_isoperimetric_lp, default_products, LpGrid};
use lpiso_core::negbound::{self, SmallnessInput};
use lpiso_core::prince::{self, StarDomain};
use lpiso_core::relative::{self, RelativeCase};
use lpiso_core::spaceform::{self, BallGeometry, CurvatureSpectrum, ModelParams};

fn err(e: lpiso_core::error::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn params(n: usize, kappa: f64) -> PyResult<ModelParams> {
    ModelParams::new(n, kappa).map_err(err)
}

fn to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any().unbind(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any().unbind(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any().unbind(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any().unbind(),
        Value::Array(a) => {
            let items = a.iter().map(|x| to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any().unbind()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, to_py(py, x)?)?;
            }
            d.into_any().unbind()
        }
    })
}

fn report<T: Serialize>(py: Python<'_>, x: &T) -> PyResult<Py<PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn lemma_case(name: &str) -> PyResult<LemmaCase> {
    match name {
        "spherical" => Ok(LemmaCase::Spherical),
        "hyperbolic" => Ok(LemmaCase::Hyperbolic),
        _ => Err(PyValueError::new_err(format!("case must be 'spherical' or 'hyperbolic', got {name:?}"))),
    }
}

/// Volume of the unit `k`-sphere.
#[pyfunction]
fn sphere_volume(k: i64) -> PyResult<f64> {
    spaceform::sphere_volume(k).map_err(err)
}

/// `s_κ(t)` in dimension `n`.
#[pyfunction]
fn candle(n: usize, kappa: f64, t: f64) -> PyResult<f64> {
    Ok(spaceform::candle(params(n, kappa)?, t))
}

/// First primitive of the candle.
#[pyfunction]
fn candle_anti(n: usize, kappa: f64, t: f64) -> PyResult<f64> {
    Ok(spaceform::candle_anti(params(n, kappa)?, t))
}

/// Second primitive of the candle.
#[pyfunction]
fn candle_anti2(n: usize, kappa: f64, t: f64) -> PyResult<f64> {
    Ok(spaceform::candle_anti2(params(n, kappa)?, t))
}

/// Radius, volume and area of the ball of volume `volume`.
#[pyfunction]
fn ball_from_volume(py: Python<'_>, n: usize, kappa: f64, volume: f64) -> PyResult<Py<PyAny>> {
    report(py, &spaceform::ball_from_volume(params(n, kappa)?, volume).map_err(err)?)
}

/// `T(ℓ) = cos α` on the chord curve of the ball of radius `r`.
#[pyfunction]
fn chord_t(kappa: f64, r: f64, ell: f64) -> PyResult<f64> {
    spaceform::chord_t(kappa, r, ell).map_err(err)
}

/// `δⁿ(α)`.
#[pyfunction]
fn delta_weight(n: usize, alpha: f64) -> f64 {
    spaceform::delta_weight(n, alpha)
}

/// Closed-form `(a, b, c, d)` for `n ∈ {2, 4}`.
#[pyfunction]
fn closed_form_certificate(py: Python<'_>, n: usize, kappa: f64, r: f64) -> PyResult<Py<PyAny>> {
    report(py, &certificate::closed_form_certificate(params(n, kappa)?, r).map_err(err)?)
}

/// Least-squares `(a, b, c, d)` from the consistency equation.
#[pyfunction]
#[pyo3(signature = (n, kappa, r, nodes = 64))]
fn solve_consistency(py: Python<'_>, n: usize, kappa: f64, r: f64, nodes: usize) -> PyResult<Py<PyAny>> {
    report(py, &certificate::solve_consistency(params(n, kappa)?, r, nodes).map_err(err)?)
}

/// `(f(α, β), ℓ*)` for the closed-form certificate.
#[pyfunction]
fn build_f(n: usize, kappa: f64, r: f64, alpha: f64, beta: f64) -> PyResult<(f64, f64)> {
    let cert = certificate::closed_form_certificate(params(n, kappa)?, r).map_err(err)?;
    certificate::build_f(&cert, alpha, beta).map_err(err)
}

/// Full verification report of the closed-form certificate; signed
/// coefficients are allowed when `kappa < 0`.
#[pyfunction]
fn verify_certificate(py: Python<'_>, n: usize, kappa: f64, r: f64) -> PyResult<Py<PyAny>> {
    let cert = certificate::closed_form_certificate(params(n, kappa)?, r).map_err(err)?;
    let set = if kappa < 0.0 { ConstraintSet::Signed } else { ConstraintSet::Table1 };
    report(py, &certificate::verify_certificate(&cert, set, &VerifyOptions::default()).map_err(err)?)
}

/// Relative residuals of the Santaló and Croke identities for the
/// quadrature measure of the ball of radius `r`.
#[pyfunction]
#[pyo3(signature = (n, kappa, r, nodes = 128))]
fn measure_residuals(py: Python<'_>, n: usize, kappa: f64, r: f64, nodes: usize) -> PyResult<Py<PyAny>> {
    let ball = BallGeometry::from_radius(params(n, kappa)?, r).map_err(err)?;
    let mu = chord::discretize_ball_measure(&ball, nodes).map_err(err)?;
    let s = chord::santalo_residual(&ball, &mu) / chord::santalo_target(&ball);
    let mut out = serde_json::Map::new();
    out.insert("santalo".into(), s.into());
    for k in 1..=3 {
        let rel = chord::croke_residual(&ball, &mu, k).map_err(err)? / chord::croke_target(&ball, k).map_err(err)?;
        out.insert(format!("croke{k}"), rel.into());
    }
    let f4 = chord::integrate(&mu, Functional::F4, ball.params).map_err(err)?;
    out.insert("integral_of_length".into(), f4.into());
    to_py(py, &Value::Object(out))
}

/// Optimum of the discretized isoperimetric program on a curve-aligned grid,
/// with the product family and the certificate's `f`.
#[pyfunction]
#[pyo3(signature = (n, kappa, volume, n_ell = 40, n_alpha = 20, tol = 1e-8))]
fn isoperimetric_lp(
    py: Python<'_>,
    n: usize,
    kappa: f64,
    volume: f64,
    n_ell: usize,
    n_alpha: usize,
    tol: f64,
) -> PyResult<Py<PyAny>> {
    let p = params(n, kappa)?;
    let ball = spaceform::ball_from_volume(p, volume).map_err(err)?;
    let mut family = default_products();
    family.push(certificate::certificate_family(&certificate::closed_form_certificate(p, ball.radius).map_err(err)?));
    let grid = LpGrid::curve_aligned(&ball, n_ell, n_alpha, None).map_err(err)?;
    let lp = build_isoperimetric_lp(p, volume, &grid, &family).map_err(err)?;
    let sol = lpiso_core::lp::solve(&lp, tol).map_err(err)?;
    let v = serde_json::json!({
        "status": sol.status,
        "optimum": sol.objective,
        "area": ball.area,
        "relative_error": (sol.objective - ball.area) / ball.area,
    });
    to_py(py, &v)
}

/// `H(t, p, q)`.
#[pyfunction]
fn h(case: &str, t: f64, p: f64, q: f64) -> PyResult<f64> {
    lemmas::h(lemma_case(case)?, t, p, q).map_err(err)
}

/// Grid scan of `H ≥ 0` with the escape rays.
#[pyfunction]
#[pyo3(signature = (case, grid = 120))]
fn verify_h_nonneg(py: Python<'_>, case: &str, grid: usize) -> PyResult<Py<PyAny>> {
    let c = lemma_case(case)?;
    report(py, &lemmas::verify_h_nonneg(c, &HGrid::default_for(c, grid)).map_err(err)?)
}

/// `tanh(L√−κ) tanh(r√−κ) ≤ 1/2`.
#[pyfunction]
fn smallness(py: Python<'_>, kappa: f64, length: f64, r: f64) -> PyResult<Py<PyAny>> {
    report(py, &negbound::smallness_ok(SmallnessInput { kappa, l: length, r }).map_err(err)?)
}

/// Margin of the Jacobian inequality for a curvature spectrum.
#[pyfunction]
fn question1_margin(spectrum: Vec<f64>, r: f64, ell: f64, alpha: f64, beta: f64) -> PyResult<f64> {
    let s = CurvatureSpectrum::new(spectrum).map_err(err)?;
    negbound::question1_margin(&s, r, ell, alpha, beta).map_err(err)
}

/// Most negative margin on the complex hyperbolic plane over
/// `(0, r_max] × (0, ell_max]`.
#[pyfunction]
#[pyo3(signature = (grid = 40, r_max = 5.0, ell_max = 10.0))]
fn ch2_counterexample_search(py: Python<'_>, grid: usize, r_max: f64, ell_max: f64) -> PyResult<Py<PyAny>> {
    let s = negbound::complex_hyperbolic_spectrum();
    report(py, &negbound::ch2_counterexample_search(&s, ell_max, r_max, grid).map_err(err)?)
}

/// Gravity, area and margin against the disk; `shape` is `disk` (uses
/// `size` as radius), `square` (`size` as side) or `ellipse` (`size`, `b`).
#[pyfunction]
#[pyo3(signature = (shape, size = 1.0, b = 0.5))]
fn gravity(py: Python<'_>, shape: &str, size: f64, b: f64) -> PyResult<Py<PyAny>> {
    let d = match shape {
        "disk" => StarDomain::Disk { r: size },
        "square" => StarDomain::Square { side: size },
        "ellipse" => StarDomain::Ellipse { a: size, b },
        _ => return Err(PyValueError::new_err(format!("unknown shape {shape:?}"))),
    };
    d.validate().map_err(err)?;
    let g = prince::gravity(&d).map_err(err)?;
    let a = prince::area(&d).map_err(err)?;
    let v = serde_json::json!({ "gravity": g, "area": a, "margin": prince::verify_pp(&d).map_err(err)? });
    to_py(py, &v)
}

/// `|∂B(mV)|/m`.
#[pyfunction]
fn relative_bound(n: usize, kappa: f64, m: usize, volume: f64) -> PyResult<f64> {
    let case = RelativeCase::new(params(n, kappa)?, m, volume).map_err(err)?;
    relative::relative_bound(&case).map_err(err)
}

/// Residuals of the orbifold equality case.
#[pyfunction]
#[pyo3(signature = (n, kappa, m, volume, nodes = 128))]
fn verify_relative_equality(
    py: Python<'_>,
    n: usize,
    kappa: f64,
    m: usize,
    volume: f64,
    nodes: usize,
) -> PyResult<Py<PyAny>> {
    let case = RelativeCase::new(params(n, kappa)?, m, volume).map_err(err)?;
    report(py, &relative::verify_relative_equality(&case, nodes).map_err(err)?)
}

#[pymodule]
fn lpiso(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(sphere_volume, m)?)?;
    m.add_function(wrap_pyfunction!(candle, m)?)?;
    m.add_function(wrap_pyfunction!(candle_anti, m)?)?;
    m.add_function(wrap_pyfunction!(candle_anti2, m)?)?;
    m.add_function(wrap_pyfunction!(ball_from_volume, m)?)?;
    m.add_function(wrap_pyfunction!(chord_t, m)?)?;
    m.add_function(wrap_pyfunction!(delta_weight, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(solve_consistency, m)?)?;
    m.add_function(wrap_pyfunction!(build_f, m)?)?;
    m.add_function(wrap_pyfunction!(verify_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(measure_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(isoperimetric_lp, m)?)?;
    m.add_function(wrap_pyfunction!(h, m)?)?;
    m.add_function(wrap_pyfunction!(verify_h_nonneg, m)?)?;
    m.add_function(wrap_pyfunction!(smallness, m)?)?;
    m.add_function(wrap_pyfunction!(question1_margin, m)?)?;
    m.add_function(wrap_pyfunction!(ch2_counterexample_search, m)?)?;
    m.add_function(wrap_pyfunction!(gravity, m)?)?;
    m.add_function(wrap_pyfunction!(relative_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify_relative_equality, m)?)?;
    Ok(())
}
