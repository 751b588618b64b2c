//! Python bindings. Build with `maturin develop --features extension-module`
//! from this directory; `python/smoke_test.py` exercises the result.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use gain_threshold::eval::evaluate;
use gain_threshold::io::{parse_mdp, serialize_mdp, ReportFile};
use gain_threshold::thresholds::{
    delta_g_algorithm1, ergodic_bound as ergodic_bound_impl, gain_gap_bruteforce, theorem1_bound as theorem1_impl,
    threshold_report, true_threshold_oracle, worst_diameter_algorithm2, OracleOptions,
};
use gain_threshold::{fixtures, generate, induce, Error, MdpInstance, Policy, Settings};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn settings(tie_tolerance: f64, cap: u128) -> Settings {
    Settings {
        tie_tolerance,
        policy_cap: cap,
    }
}

/// A validated finite MDP.
#[pyclass(name = "Mdp", module = "gain_threshold_py", frozen)]
struct PyMdp {
    inner: MdpInstance,
}

#[pymethods]
impl PyMdp {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_mdp(text.as_bytes()).map(|inner| Self { inner }).map_err(py_err)
    }

    /// The two-branch instance whose exhaustive bound is `1 - eg / eh`.
    #[staticmethod]
    #[pyo3(signature = (eg = 0.1, eh = 0.5))]
    fn figure1(eg: f64, eh: f64) -> PyResult<Self> {
        fixtures::figure1(eg, eh).map(|inner| Self { inner }).map_err(py_err)
    }

    #[staticmethod]
    fn two_state() -> Self {
        Self {
            inner: fixtures::two_state_ergodic(),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (states, actions, seed, mixing = 0.0))]
    fn random(states: usize, actions: usize, seed: u64, mixing: f64) -> PyResult<Self> {
        generate::generate_random_mdp(states, actions, seed, mixing)
            .map(|inner| Self { inner })
            .map_err(py_err)
    }

    fn to_json(&self) -> String {
        serialize_mdp(&self.inner)
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn states(&self) -> Vec<String> {
        self.inner.state_labels().to_vec()
    }

    fn actions(&self, state: &str) -> PyResult<Vec<String>> {
        let x = self
            .inner
            .state_index(state)
            .ok_or_else(|| PyValueError::new_err(format!("unknown state `{state}`")))?;
        Ok(self.inner.action_labels(x).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Mdp(states={}, policies={})", self.inner.n_states(), self.inner.policy_count())
    }
}

/// Maps one action label per state (in state order) to a policy.
fn policy_from_labels(mdp: &MdpInstance, labels: &[String]) -> PyResult<Policy> {
    if labels.len() != mdp.n_states() {
        return Err(PyValueError::new_err(format!(
            "policy names {} actions for {} states",
            labels.len(),
            mdp.n_states()
        )));
    }
    labels
        .iter()
        .enumerate()
        .map(|(x, a)| {
            mdp.action_index(x, a).ok_or_else(|| {
                PyValueError::new_err(format!("state `{}` has no action `{a}`", mdp.state_label(x)))
            })
        })
        .collect::<PyResult<Vec<_>>>()
        .map(Policy)
}

/// Gain and bias of a stationary policy, as `(gain, bias)` lists.
#[pyfunction]
fn evaluate_policy(mdp: &PyMdp, policy: Vec<String>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let policy = policy_from_labels(&mdp.inner, &policy)?;
    let chain = induce(&mdp.inner, &policy).map_err(py_err)?;
    let e = evaluate(&chain).map_err(py_err)?;
    Ok((e.gain.iter().copied().collect(), e.bias.iter().copied().collect()))
}

#[pyfunction]
#[pyo3(signature = (mdp, tie_tolerance = 1e-9, cap = 1_000_000))]
fn theorem1_bound(mdp: &PyMdp, tie_tolerance: f64, cap: u128) -> PyResult<f64> {
    theorem1_impl(&mdp.inner, &settings(tie_tolerance, cap))
        .map(|b| b.bound.value)
        .map_err(py_err)
}

/// Raises `ValueError` unless every policy is irreducible.
#[pyfunction]
#[pyo3(signature = (mdp, tie_tolerance = 1e-9, cap = 1_000_000))]
fn ergodic_bound(mdp: &PyMdp, tie_tolerance: f64, cap: u128) -> PyResult<f64> {
    ergodic_bound_impl(&mdp.inner, &settings(tie_tolerance, cap))
        .map(|b| b.bound.value)
        .map_err(py_err)
}

/// Smallest positive gain deficit. `method` is "restricted" or "brute".
#[pyfunction]
#[pyo3(signature = (mdp, method = "restricted", tie_tolerance = 1e-9, cap = 1_000_000))]
fn gain_gap(mdp: &PyMdp, method: &str, tie_tolerance: f64, cap: u128) -> PyResult<f64> {
    let s = settings(tie_tolerance, cap);
    match method {
        "restricted" => delta_g_algorithm1(&mdp.inner, &s),
        "brute" => gain_gap_bruteforce(&mdp.inner, &s),
        other => return Err(PyValueError::new_err(format!("unknown method `{other}`"))),
    }
    .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (mdp, tie_tolerance = 1e-9, cap = 1_000_000))]
fn worst_diameter(mdp: &PyMdp, tie_tolerance: f64, cap: u128) -> PyResult<f64> {
    worst_diameter_algorithm2(&mdp.inner, &settings(tie_tolerance, cap)).map_err(py_err)
}

/// Brute-force threshold as `(estimate, (low, high))`.
#[pyfunction]
#[pyo3(signature = (mdp, grid_points = 2000, refine_tol = 1e-7, tie_tolerance = 1e-9, cap = 1_000_000))]
fn oracle(
    mdp: &PyMdp,
    grid_points: usize,
    refine_tol: f64,
    tie_tolerance: f64,
    cap: u128,
) -> PyResult<(f64, (f64, f64))> {
    let options = OracleOptions {
        grid_points,
        refine_tol,
    };
    true_threshold_oracle(&mdp.inner, &settings(tie_tolerance, cap), options)
        .map(|o| (o.estimate, o.bracket))
        .map_err(py_err)
}

/// Full JSON report: both bounds (the ergodic one when defined) and,
/// with `with_oracle`, the brute-force threshold.
#[pyfunction]
#[pyo3(signature = (mdp, with_oracle = true, tie_tolerance = 1e-9, cap = 1_000_000))]
fn report(mdp: &PyMdp, with_oracle: bool, tie_tolerance: f64, cap: u128) -> PyResult<String> {
    let s = settings(tie_tolerance, cap);
    let options = with_oracle.then(OracleOptions::default);
    let r = threshold_report(&mdp.inner, &s, options).map_err(py_err)?;
    let mut file = ReportFile::new(&mdp.inner, &s);
    file.ergodic = Some(r.ergodic);
    file.set_exhaustive_bound(&mdp.inner, &r.exhaustive);
    if let Some(b) = &r.ergodic_bound {
        file.set_ergodic_bound(b);
    }
    if let (Some(options), Some(o)) = (options, &r.oracle) {
        file.set_oracle(&mdp.inner, options, o);
    }
    file.g_star = Some(r.profile.g_star.iter().copied().collect());
    file.h_star = Some(r.profile.h_star.iter().copied().collect());
    Ok(file.to_json())
}

#[pymodule]
fn gain_threshold_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMdp>()?;
    m.add_function(wrap_pyfunction!(evaluate_policy, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(ergodic_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gain_gap, m)?)?;
    m.add_function(wrap_pyfunction!(worst_diameter, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    Ok(())
}
