//! Python bindings: ring inspection, row factorization into idempotents,
//! certificate verification, and deterministic batch runs.

use idemfact_core::certify::Certificate;
use idemfact_core::cli::RunReport;
use idemfact_core::pipeline::{factor_singular_row, Budgets};
use idemfact_core::quadring::RingSpec;
use idemfact_core::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Parse(_)
        | Error::AlphaTooSmall
        | Error::AlphaNotSquareFree(_)
        | Error::AlphaDivisibleByFour => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn ring_of(alpha: i64) -> PyResult<RingSpec> {
    RingSpec::new(alpha).map_err(to_py_err)
}

fn budgets_of(budget: Option<u64>) -> Budgets {
    let b = Budgets::from_env();
    match budget {
        Some(n) => b.with_scan_cap(n),
        None => b,
    }
}

/// Ring data for a square-free radicand.
#[pyfunction]
fn ring_info(py: Python<'_>, alpha: i64) -> PyResult<Py<PyDict>> {
    let ring = ring_of(alpha)?;
    let d = PyDict::new(py);
    d.set_item("alpha", ring.alpha())?;
    d.set_item("omega", ring.omega_description())?;
    d.set_item("discriminant", ring.discriminant())?;
    d.set_item("fundamental_unit", ring.fundamental_unit().to_string())?;
    Ok(d.into())
}

/// Normalizes an element of the ring to its coordinate pair form.
#[pyfunction]
fn parse_element(alpha: i64, text: &str) -> PyResult<String> {
    let ring = ring_of(alpha)?;
    Ok(ring.parse_element(text).map_err(to_py_err)?.pair_string())
}

fn report_dict(py: Python<'_>, rep: &RunReport, cert: &Certificate) -> PyResult<Py<PyDict>> {
    let d = PyDict::new(py);
    d.set_item("alpha", rep.alpha)?;
    d.set_item("x", &rep.x)?;
    d.set_item("y", &rep.y)?;
    d.set_item("r", rep.r)?;
    d.set_item("s", rep.s)?;
    d.set_item("n0_max", rep.n0_max)?;
    d.set_item("flags", rep.flags.clone())?;
    d.set_item("conforming", rep.conforming())?;
    d.set_item("certificate", cert.to_json())?;
    Ok(d.into())
}

/// Factors the singular row `(x y; 0 0)` and returns the run report with
/// the certificate JSON embedded.
#[pyfunction]
#[pyo3(signature = (alpha, x, y, budget=None))]
fn factor(py: Python<'_>, alpha: i64, x: &str, y: &str, budget: Option<u64>) -> PyResult<Py<PyDict>> {
    let ring = ring_of(alpha)?;
    let x = ring.parse_element(x).map_err(to_py_err)?;
    let y = ring.parse_element(y).map_err(to_py_err)?;
    let budgets = budgets_of(budget);
    let (cert, stats) = factor_singular_row(&x, &y, &budgets).map_err(to_py_err)?;
    cert.verify().map_err(to_py_err)?;
    let rep = RunReport::new(&cert, &stats, 0);
    report_dict(py, &rep, &cert)
}

/// Re-verifies a certificate JSON document. Malformed input raises;
/// a well-formed but false witness returns False.
#[pyfunction]
fn verify(certificate_json: &str) -> PyResult<bool> {
    let cert = Certificate::from_json(certificate_json)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(cert.verify().is_ok())
}

/// Deterministic batch of seeded random rows; returns one report per
/// sample.
#[pyfunction]
#[pyo3(signature = (alpha, samples, height, seed, budget=None))]
fn batch(
    py: Python<'_>,
    alpha: i64,
    samples: u64,
    height: i64,
    seed: u64,
    budget: Option<u64>,
) -> PyResult<Vec<Py<PyDict>>> {
    let ring = ring_of(alpha)?;
    let budgets = budgets_of(budget);
    let rows = idemfact_core::cli::run_batch(ring, samples, height, seed, &budgets);
    let mut out = Vec::with_capacity(rows.len());
    for (x, y, outcome) in rows {
        match outcome {
            Ok((rep, cert)) => out.push(report_dict(py, &rep, &cert)?),
            Err(e) => {
                let d = PyDict::new(py);
                d.set_item("alpha", alpha)?;
                d.set_item("x", x)?;
                d.set_item("y", y)?;
                d.set_item("error", e)?;
                out.push(d.into());
            }
        }
    }
    Ok(out)
}

#[pymodule]
fn idemfact(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(ring_info, m)?)?;
    m.add_function(wrap_pyfunction!(parse_element, m)?)?;
    m.add_function(wrap_pyfunction!(factor, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(batch, m)?)?;
    Ok(())
}
