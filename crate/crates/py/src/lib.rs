//! Python bindings: trace checks, the constants of the decay ODE, and the
//! experiment entry points that return plain numbers.

use std::collections::BTreeMap;

use num_rational::Ratio;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use ::epilab as core;
use core::engine;

create_exception!(epilab, EpilabError, PyException);

fn err(e: core::Error) -> PyErr {
    EpilabError::new_err(e.to_string())
}

#[pyclass(name = "DecayParams", module = "epilab", from_py_object)]
#[derive(Clone)]
struct PyDecayParams {
    inner: engine::DecayParams,
}

#[pymethods]
impl PyDecayParams {
    #[new]
    #[pyo3(signature = (c_e=1.0, epsilon=1.0, gamma=0.0, alpha=1.0, r1=1e-3, r3=1.0, lambda_plus=0.0, lambda_minus=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(c_e: f64, epsilon: f64, gamma: f64, alpha: f64, r1: f64, r3: f64, lambda_plus: f64, lambda_minus: f64) -> PyResult<Self> {
        let inner = engine::DecayParams::new(c_e, epsilon, gamma, alpha)
            .with_range(r1, r3)
            .with_errors(lambda_plus, lambda_minus);
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    /// δ of the comparison ODE.
    fn delta(&self) -> PyResult<f64> {
        engine::derive_delta(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("DecayParams(c_e={}, epsilon={}, gamma={}, alpha={}, r1={}, r3={})", p.c_e, p.epsilon, p.gamma, p.alpha, p.r1, p.r3)
    }
}

#[pyclass(name = "EnergyTrace", module = "epilab", from_py_object)]
#[derive(Clone)]
struct PyEnergyTrace {
    inner: engine::EnergyTrace,
}

#[pymethods]
impl PyEnergyTrace {
    #[new]
    #[pyo3(signature = (radii, e, f=None, d=None))]
    fn new(radii: Vec<f64>, e: Vec<f64>, f: Option<Vec<f64>>, d: Option<Vec<f64>>) -> PyResult<Self> {
        Ok(Self { inner: engine::EnergyTrace::new(radii, e, f, d).map_err(err)? })
    }

    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        Ok(Self { inner: engine::EnergyTrace::read_csv_path(path).map_err(err)? })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        self.inner.write_csv_path(path).map_err(err)
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.radii.clone()
    }

    #[getter]
    fn e(&self) -> Vec<f64> {
        self.inner.e.clone()
    }

    #[getter]
    fn f(&self) -> Option<Vec<f64>> {
        self.inner.f.clone()
    }

    #[getter]
    fn d(&self) -> Option<Vec<f64>> {
        self.inner.d.clone()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Report", module = "epilab", skip_from_py_object)]
struct PyReport {
    inner: engine::VerificationReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn op(&self) -> String {
        self.inner.op.clone()
    }

    #[getter]
    fn passed(&self) -> bool {
        self.inner.pass
    }

    #[getter]
    fn worst_margin(&self) -> f64 {
        self.inner.worst_margin
    }

    #[getter]
    fn margins(&self) -> Vec<f64> {
        self.inner.margins.clone()
    }

    #[getter]
    fn details(&self) -> BTreeMap<String, f64> {
        self.inner.details.clone()
    }

    #[getter]
    fn notes(&self) -> Vec<String> {
        self.inner.notes.clone()
    }

    fn __bool__(&self) -> bool {
        self.inner.pass
    }

    fn __repr__(&self) -> String {
        format!("Report(op={:?}, passed={}, worst_margin={:e})", self.inner.op, self.inner.pass, self.inner.worst_margin)
    }
}

fn report(inner: engine::VerificationReport) -> PyReport {
    PyReport { inner }
}

#[pyfunction]
#[pyo3(signature = (c_e=1.0, epsilon=1.0, gamma=0.0, alpha=1.0))]
fn derive_delta(c_e: f64, epsilon: f64, gamma: f64, alpha: f64) -> PyResult<f64> {
    engine::derive_delta(&engine::DecayParams::new(c_e, epsilon, gamma, alpha)).map_err(err)
}

/// Exact δ for γ = 0 as `(numerator, denominator)`.
#[pyfunction]
fn derive_delta_exact(c_e: (i64, i64), epsilon: (i64, i64), alpha: (i64, i64)) -> PyResult<(i64, i64)> {
    use core::engine::derive_delta_rational;
    let q = |(n, d): (i64, i64)| {
        if d == 0 {
            Err(EpilabError::new_err("zero denominator"))
        } else {
            Ok(num_ratio(n, d))
        }
    };
    let r = derive_delta_rational(q(c_e)?, q(epsilon)?, q(alpha)?).map_err(err)?;
    Ok((*r.numer(), *r.denom()))
}

fn num_ratio(n: i64, d: i64) -> Ratio<i64> {
    Ratio::new(n, d)
}

#[pyfunction]
fn synth_saturating_trace(params: &PyDecayParams, g_end: f64, n_samples: usize) -> PyResult<PyEnergyTrace> {
    Ok(PyEnergyTrace { inner: engine::synth_saturating_trace(&params.inner, g_end, n_samples).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (trace, params, tol=1e-6))]
fn verify_ode(trace: &PyEnergyTrace, params: &PyDecayParams, tol: f64) -> PyResult<PyReport> {
    let g = engine::compute_g(&trace.inner, &params.inner).map_err(err)?;
    Ok(report(engine::verify_ode(&g, tol).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (trace, params, tol=1e-6))]
fn check_assumptions(trace: &PyEnergyTrace, params: &PyDecayParams, tol: f64) -> PyResult<PyReport> {
    Ok(report(engine::check_assumptions(&trace.inner, &params.inner, tol).map_err(err)?))
}

/// `(r, G)` samples of the G-function.
#[pyfunction]
fn compute_g(trace: &PyEnergyTrace, params: &PyDecayParams) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let g = engine::compute_g(&trace.inner, &params.inner).map_err(err)?;
    Ok((g.radii, g.g))
}

#[pyfunction]
fn comparison_bound(g_at_r: f64, r: f64, s: f64, delta: f64, gamma: f64) -> PyResult<f64> {
    engine::comparison_bound(g_at_r, r, s, delta, gamma).map_err(err)
}

#[pyfunction]
fn dini_bound(g_r1: f64, g_r3: f64, gamma: f64, c: f64) -> f64 {
    engine::dini_bound(g_r1, g_r3, gamma, c)
}

/// `(normalized constant, argmax)` of the dyadic sum.
#[pyfunction]
#[pyo3(signature = (beta, a, i_start=0))]
fn dyadic_lemma_check(beta: f64, a: f64, i_start: u32) -> PyResult<(f64, f64)> {
    engine::dyadic_lemma_check(beta, a, i_start).map_err(err)
}

/// `(W(u₀), energy gap)` of the half-plane cone on an `n × n` grid.
#[pyfunction]
fn cone_energy(n: usize) -> PyResult<(f64, f64)> {
    use core::polar::{ConeDescription, PolarGrid};
    let grid = PolarGrid::square(n).map_err(err)?;
    let cone = ConeDescription::half_plane(n, 0.0).map_err(err)?;
    let u = cone.field(&grid).map_err(err)?;
    Ok((core::weiss::weiss_w(&u).map_err(err)?, core::weiss::energy_gap(&u, &cone).map_err(err)?))
}

/// Gain ratio of the outer competitor for `c φ_k` on the half circle;
/// `rho=None` is the no-cutoff limit.
#[pyfunction]
#[pyo3(signature = (k, c, rho=None))]
fn outer_gain_ratio(k: usize, c: f64, rho: Option<f64>) -> PyResult<Option<f64>> {
    use core::arc::{ArcDomain, ModeExpansion};
    let z = ModeExpansion::single(ArcDomain::half_circle(0.0), k, c).map_err(err)?;
    Ok(core::epi::outer_gain(&z, rho).map_err(err)?.ratio())
}

/// Arc-length family: one dict per member with `t`, `normalization`,
/// `distance`, `e_rz` and `epsilon`.
#[pyfunction]
#[pyo3(signature = (ts, n_theta=256))]
fn arc_family(py: Python<'_>, ts: Vec<f64>, n_theta: usize) -> PyResult<Vec<Py<pyo3::types::PyDict>>> {
    use pyo3::types::PyDict;
    let fam = core::epi::arc_family(&ts, n_theta, core::epi::ArcInnerParams::default()).map_err(err)?;
    fam.iter()
        .map(|m| {
            let d = PyDict::new(py);
            d.set_item("t", m.t)?;
            d.set_item("normalization", format!("{:?}", m.normalization).to_lowercase())?;
            d.set_item("distance", m.distance)?;
            d.set_item("e_rz", m.measurement.e_rz)?;
            d.set_item("epsilon", m.measurement.epsilon)?;
            Ok(d.unbind())
        })
        .collect()
}

#[pyclass(name = "Minimizer", module = "epilab", skip_from_py_object)]
struct PyMinimizer {
    inner: core::minimizer::Minimizer,
    hausdorff: f64,
    non_graphical: usize,
}

#[pymethods]
impl PyMinimizer {
    #[getter]
    fn energy(&self) -> f64 {
        self.inner.energy
    }

    #[getter]
    fn restart_energies(&self) -> Vec<f64> {
        self.inner.restart_energies.clone()
    }

    /// Distance of the free boundary from the cone's rays, in local cells.
    #[getter]
    fn hausdorff_cells(&self) -> f64 {
        self.hausdorff
    }

    #[getter]
    fn non_graphical(&self) -> usize {
        self.non_graphical
    }

    /// Field values, one row per ring from the innermost outward.
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.field.values.outer_iter().map(|r| r.to_vec()).collect()
    }
}

/// Minimizes the one-phase functional with boundary values on an
/// `n_r × len(boundary)` log-polar grid; the free boundary is measured
/// against the half plane with axis `theta_e`.
#[pyfunction]
#[pyo3(signature = (boundary, n_r=None, restarts=3, seed=0, theta_e=0.0))]
fn minimize(py: Python<'_>, boundary: Vec<f64>, n_r: Option<usize>, restarts: usize, seed: u64, theta_e: f64) -> PyResult<PyMinimizer> {
    use core::minimizer::{extract_free_boundary, hausdorff_cells, minimize, MinimizeConfig};
    use core::polar::{ConeDescription, SphericalFunction};
    let n = boundary.len();
    let b = SphericalFunction::new(boundary).map_err(err)?;
    let cfg = MinimizeConfig { n_r: n_r.unwrap_or(n), n_theta: n, restarts, seed, ..MinimizeConfig::default() };
    let cone = ConeDescription::half_plane(n, theta_e).map_err(err)?;
    let (inner, curve) = py
        .detach(|| -> core::Result<_> {
            let m = minimize(&b, &cfg)?;
            let c = extract_free_boundary(&m.field, &cone)?;
            Ok((m, c))
        })
        .map_err(err)?;
    let hausdorff = hausdorff_cells(&curve, &cone, &inner.field.grid);
    Ok(PyMinimizer { inner, hausdorff, non_graphical: curve.non_graphical })
}

/// Runs the flow of `±μ^{2p}` (negative `p` flips the sign) from `mu0` and
/// returns `(case, fitted c, passed)`.
#[pyfunction]
fn flow_model(p: i64, mu0: f64, b: f64) -> PyResult<(String, f64, bool)> {
    use core::loja::{fit_decrease_constant, select_eta, verify_decrease, Objective, PowerModel};
    let k = u32::try_from(p.unsigned_abs()).map_err(|_| EpilabError::new_err("p out of range"))?;
    let obj = if p > 0 { PowerModel::new(k) } else { PowerModel::negative(k) };
    let beta = obj.beta().ok_or_else(|| EpilabError::new_err("p must be nonzero"))?;
    let (prof, traj) = select_eta(&obj, &[mu0], b, beta).map_err(err)?;
    let c = fit_decrease_constant(&[(prof, traj.clone())]);
    let c = if c > 0.0 { c } else { 1.0 };
    Ok((format!("{:?}", prof.case), c, verify_decrease(&prof, &traj, c).pass))
}

/// Łojasiewicz exponent fitted on `μ^{2p}` at the given sample points.
#[pyfunction]
fn fit_lojasiewicz_model(p: u32, mus: Vec<f64>) -> PyResult<f64> {
    use core::loja::{fit_lojasiewicz, PowerModel};
    let samples: Vec<Vec<f64>> = mus.into_iter().map(|m| vec![m]).collect();
    Ok(fit_lojasiewicz(&PowerModel::new(p), &samples).map_err(err)?.beta)
}

#[pyfunction]
fn spectral_gap(d: usize) -> PyResult<f64> {
    core::obstacle::spectral_gap(d).map_err(err)
}

/// Directional-derivative identity for `u = max(φ + Σ perturbation, 0)` with
/// `φ` the rank-one profile on `n` points; returns a dict of the pieces.
#[pyfunction]
#[pyo3(signature = (coeffs, n=256, angle=0.0))]
fn obstacle_identity(py: Python<'_>, coeffs: Vec<(usize, f64, f64)>, n: usize, angle: f64) -> PyResult<Py<pyo3::types::PyDict>> {
    use core::obstacle::{gradient_lower_bound, perturbed, QuadraticProfile};
    let phi = QuadraticProfile::rank_one(angle).sphere(n).map_err(err)?;
    let u = perturbed(&phi, &coeffs);
    let b = gradient_lower_bound(&u, &phi).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("directional", b.directional)?;
    d.set_item("rhs", b.identity_rhs())?;
    d.set_item("correction", b.correction)?;
    d.set_item("m", b.m)?;
    d.set_item("identity_residual", b.identity_residual())?;
    d.set_item("corrected_residual", b.corrected_residual())?;
    Ok(d.unbind())
}

#[pymodule]
#[pyo3(name = "epilab")]
fn epilab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    init(m)
}

/// Registers the module contents on `m`.
pub fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("EpilabError", m.py().get_type::<EpilabError>())?;
    m.add_class::<PyDecayParams>()?;
    m.add_class::<PyEnergyTrace>()?;
    m.add_class::<PyReport>()?;
    m.add_class::<PyMinimizer>()?;
    m.add_function(wrap_pyfunction!(derive_delta, m)?)?;
    m.add_function(wrap_pyfunction!(derive_delta_exact, m)?)?;
    m.add_function(wrap_pyfunction!(synth_saturating_trace, m)?)?;
    m.add_function(wrap_pyfunction!(verify_ode, m)?)?;
    m.add_function(wrap_pyfunction!(check_assumptions, m)?)?;
    m.add_function(wrap_pyfunction!(compute_g, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_bound, m)?)?;
    m.add_function(wrap_pyfunction!(dini_bound, m)?)?;
    m.add_function(wrap_pyfunction!(dyadic_lemma_check, m)?)?;
    m.add_function(wrap_pyfunction!(cone_energy, m)?)?;
    m.add_function(wrap_pyfunction!(outer_gain_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(arc_family, m)?)?;
    m.add_function(wrap_pyfunction!(minimize, m)?)?;
    m.add_function(wrap_pyfunction!(flow_model, m)?)?;
    m.add_function(wrap_pyfunction!(fit_lojasiewicz_model, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_gap, m)?)?;
    m.add_function(wrap_pyfunction!(obstacle_identity, m)?)?;
    Ok(())
}
