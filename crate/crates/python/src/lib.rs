//! Python module `tula`.
//!
//! Structured results come back as plain dicts and lists.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;
use tula_core as core;

fn err(e: core::TulaError) -> PyErr {
    match e {
        core::TulaError::InvalidArgument(_) | core::TulaError::MomentDoesNotExist { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py(py: Python<'_>, v: &impl Serialize) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

/// Zoo target paired with its radial transform.
#[pyclass(frozen, name = "Target")]
struct Target {
    tp: core::TransformedPotential,
}

#[pymethods]
impl Target {
    /// `Target(name, d=None, params=None, b=None, beta=None)`; `b` and `beta`
    /// replace the paired transform with `e^{b r^beta}`.
    #[new]
    #[pyo3(signature = (name, d=None, params=None, b=None, beta=None))]
    fn new(
        name: &str,
        d: Option<usize>,
        params: Option<BTreeMap<String, f64>>,
        b: Option<f64>,
        beta: Option<f64>,
    ) -> PyResult<Self> {
        let entry = core::zoo_by_name(name, d, &params.unwrap_or_default()).map_err(err)?;
        let dim = entry.potential.dimension();
        let transform = match (b, beta) {
            (None, None) => entry.transform,
            (Some(b), Some(beta)) => {
                core::RadialTransform::exponential(b, beta, dim).map_err(err)?
            }
            _ => return Err(PyValueError::new_err("b and beta must be given together")),
        };
        let tp = core::TransformedPotential::new(entry.potential, transform).map_err(err)?;
        Ok(Self { tp })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.tp.dimension()
    }

    #[getter]
    fn tail_index(&self) -> Option<f64> {
        self.tp.target.tail_index()
    }

    fn g(&self, r: f64) -> f64 {
        self.tp.transform.g(r)
    }

    fn g_inverse(&self, s: f64) -> f64 {
        self.tp.transform.g_inverse(s)
    }

    fn h_forward(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_len(&y)?;
        Ok(self.tp.transform.h_forward(&y))
    }

    fn h_inverse(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_len(&x)?;
        Ok(self.tp.transform.h_inverse(&x))
    }

    /// `f_h(y)`, the transformed potential.
    fn value(&self, y: Vec<f64>) -> PyResult<f64> {
        self.check_len(&y)?;
        Ok(self.tp.transformed_value(&y))
    }

    fn gradient(&self, y: Vec<f64>) -> PyResult<Vec<f64>> {
        self.check_len(&y)?;
        Ok(self.tp.transformed_gradient(&y))
    }

    /// `(lambda_radial, lambda_tangential)` of the Hessian of `f_h` at radius `r`.
    fn hessian_eigenvalues(&self, r: f64) -> PyResult<(f64, f64)> {
        let ev = self.tp.hessian_eigenvalues(r).map_err(err)?;
        Ok((ev.lambda_radial, ev.lambda_tangential))
    }

    /// Runs TULA; returns `{"x": [[...]], "y": [[...]], "steps": [...], "divergence_flag": bool}`
    /// with one entry per chain.
    #[pyo3(signature = (step_size, num_steps, seed=0, num_chains=1, thin=1))]
    fn sample(
        &self,
        py: Python<'_>,
        step_size: f64,
        num_steps: usize,
        seed: u64,
        num_chains: usize,
        thin: usize,
    ) -> PyResult<Py<PyAny>> {
        let mut cfg = core::SamplerConfig::new(step_size, num_steps, seed);
        cfg.num_chains = num_chains;
        cfg.thin = thin;
        let run = py.detach(|| core::run_tula(&self.tp, &cfg)).map_err(err)?;
        let out = serde_json::json!({
            "x": (0..run.chains.len()).map(|c| run.x_samples(c)).collect::<Vec<_>>(),
            "y": (0..run.chains.len()).map(|c| run.y_samples(c)).collect::<Vec<_>>(),
            "steps": run.chains.iter().map(|c| c.steps.clone()).collect::<Vec<_>>(),
            "diverged_at": run.chains.iter().map(|c| c.diverged_at).collect::<Vec<_>>(),
            "divergence_flag": run.divergence_flag,
        });
        to_py(py, &out)
    }

    #[pyo3(signature = (r_max=10.0, grid_size=2001))]
    fn lsi(&self, py: Python<'_>, r_max: f64, grid_size: usize) -> PyResult<Py<PyAny>> {
        let est = py
            .detach(|| core::estimate_lsi(&self.tp, r_max, grid_size))
            .map_err(err)?;
        to_py(py, &est)
    }

    /// One of A1..A5 (or a descriptive name); `constants` are candidate values.
    #[pyo3(signature = (assumption, constants=None))]
    fn check(
        &self,
        py: Python<'_>,
        assumption: &str,
        constants: Option<BTreeMap<String, f64>>,
    ) -> PyResult<Py<PyAny>> {
        let which: core::Assumption = assumption.parse().map_err(err)?;
        let rep = core::check_assumption(&self.tp, which, None, &constants.unwrap_or_default())
            .map_err(err)?;
        to_py(py, &rep)
    }

    #[pyo3(signature = (points=1000, r_min=0.01, r_max=None, seed=0))]
    fn gradcheck(
        &self,
        py: Python<'_>,
        points: usize,
        r_min: f64,
        r_max: Option<f64>,
        seed: u64,
    ) -> PyResult<Py<PyAny>> {
        let r_max = r_max.unwrap_or(3.0 * self.tp.transform.knot().max(1.0));
        let rep = core::gradient_check(&self.tp, points, r_min, r_max, seed).map_err(err)?;
        to_py(py, &rep)
    }
}

impl Target {
    fn check_len(&self, v: &[f64]) -> PyResult<()> {
        if v.len() == self.tp.dimension() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!(
                "expected {} coordinates, got {}",
                self.tp.dimension(),
                v.len()
            )))
        }
    }
}

/// Regime from assumption constants. `inputs` holds the tagged fields, e.g.
/// `{"assumption": "dissipativity", "alpha": 2, "beta": 2, "b": 1, "A": 6}`.
#[pyfunction]
fn classify(
    py: Python<'_>,
    inputs: &Bound<'_, PyAny>,
    vartheta: f64,
    d: usize,
) -> PyResult<Py<PyAny>> {
    let text: String = py
        .import("json")?
        .call_method1("dumps", (inputs,))?
        .extract()?;
    let input: core::RegimeInput =
        serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let verdict = core::classify_regime(&input, vartheta, d).map_err(err)?;
    to_py(py, &verdict)
}

/// `(gamma, n)` for target accuracy `eps` in KL.
#[pyfunction]
fn plan_step_size(l_h: f64, c_lsi: f64, d: usize, eps: f64, h0: f64) -> PyResult<(f64, u64)> {
    let plan = core::plan_step_size(l_h, c_lsi, d, eps, h0).map_err(err)?;
    Ok((plan.gamma, plan.num_steps))
}

#[pymodule]
fn tula(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Target>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(plan_step_size, m)?)?;
    Ok(())
}
