//! Python bindings: compile netlists to phase-space models, build their
//! canonical stochastic dilations, integrate ensembles and run the bracket
//! and quantum identity checks.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mrcircuit_core::circuit::PhaseSpaceModel;
use mrcircuit_core::dilation::{build_symplectic_dilation, build_wiener_dilation, circuit_drift_field};
use mrcircuit_core::error::CoreError;
use mrcircuit_core::quantum::{
    build_quantum_dilation, master_equation_evolve, verify_drift_identities, FockModel,
};
use mrcircuit_core::sde::{
    simulate_ensemble, EnsembleSpec, NoisePath, PhasePoint, Scheme, SdeSystem,
};
use mrcircuit_core::verify::propagate_tangent;

fn err(e: CoreError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_scheme(name: &str) -> PyResult<Scheme> {
    match name {
        "euler-maruyama" | "euler_maruyama" => Ok(Scheme::EulerMaruyama),
        "heun" => Ok(Scheme::HeunStratonovich),
        other => Err(PyValueError::new_err(format!("unknown scheme `{other}`"))),
    }
}

/// A single-loop circuit in phase-space form.
#[pyclass]
struct Model {
    inner: PhaseSpaceModel,
}

#[pymethods]
impl Model {
    /// Parse and compile a netlist.
    #[staticmethod]
    fn from_netlist(text: &str) -> PyResult<Model> {
        let ast = mrcircuit_core::netlist::parse(text)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let inner = mrcircuit_core::netlist::compile(&ast).map_err(err)?;
        Ok(Model { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Model> {
        Ok(Model {
            inner: PhaseSpaceModel::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    /// Deterministic circuit velocity field (q̇, ṗ).
    fn drift(&self, t: f64, q: f64, p: f64) -> PyResult<(f64, f64)> {
        self.inner.drift(t, q, p).map_err(err)
    }

    /// Dissipation γ(q, p) = ∂𝕍_D/∂p.
    fn dissipation(&self, q: f64, p: f64) -> PyResult<f64> {
        self.inner.dissipation(q, p).map_err(err)
    }

    /// Energy H(q, p, t).
    fn energy(&self, t: f64, q: f64, p: f64) -> PyResult<f64> {
        self.inner.energy(t, q, p).map_err(err)
    }

    fn is_series(&self) -> bool {
        self.inner.is_series()
    }

    fn constant_l0(&self) -> Option<f64> {
        self.inner.constant_l0()
    }

    /// Deterministic flow as a simulatable system.
    fn deterministic(&self) -> PyResult<Dilation> {
        let system = match circuit_drift_field(&self.inner) {
            Ok(drift) => SdeSystem::deterministic(std::sync::Arc::new(drift)),
            Err(_) => SdeSystem::deterministic(std::sync::Arc::new(
                mrcircuit_core::circuit::ModelDriftField::new(self.inner.clone()),
            )),
        };
        Ok(Dilation {
            system,
            kind: "circuit".into(),
        })
    }

    /// Canonical dilation with two plain Wiener channels.
    #[pyo3(signature = (c=1.0, ell=1.0))]
    fn wiener_dilation(&self, c: f64, ell: f64) -> PyResult<Dilation> {
        let (_, system) = build_wiener_dilation(&self.inner, c, ell).map_err(err)?;
        Ok(Dilation {
            system,
            kind: "wiener".into(),
        })
    }

    /// Canonical dilation with two symplectic channel pairs.
    #[pyo3(signature = (gamma=1.0))]
    fn symplectic_dilation(&self, gamma: f64) -> PyResult<Dilation> {
        let (_, system) = build_symplectic_dilation(&self.inner, gamma).map_err(err)?;
        Ok(Dilation {
            system,
            kind: "symplectic".into(),
        })
    }

    /// Interior-projected residuals of the quantum drift identities.
    #[pyo3(signature = (fock_dim=40, margin=None, hbar=1.0))]
    fn quantum_identity_report(
        &self,
        py: Python<'_>,
        fock_dim: usize,
        margin: Option<usize>,
        hbar: f64,
    ) -> PyResult<Py<PyDict>> {
        let dil = self.quantum_dilation(fock_dim, margin, hbar)?;
        let report = verify_drift_identities(&dil, 0.0).map_err(err)?;
        let out = PyDict::new(py);
        out.set_item("dim", report.dim)?;
        out.set_item("margin", report.margin)?;
        out.set_item("drift_q_relative", report.drift_q_relative)?;
        out.set_item("drift_p_relative", report.drift_p_relative)?;
        out.set_item("max_noise_deviation", report.max_noise_deviation())?;
        Ok(out.into())
    }

    /// Master-equation evolution from a coherent state; returns rows of
    /// (t, <q>, <p>, <n>, purity, min eigenvalue).
    #[pyo3(signature = (alpha=1.0, t_end=5.0, dt=5e-3, fock_dim=40, margin=None, hbar=1.0, save_stride=20))]
    #[allow(clippy::too_many_arguments)]
    fn quantum_evolve(
        &self,
        alpha: f64,
        t_end: f64,
        dt: f64,
        fock_dim: usize,
        margin: Option<usize>,
        hbar: f64,
        save_stride: usize,
    ) -> PyResult<Vec<(f64, f64, f64, f64, f64, f64)>> {
        let dil = self.quantum_dilation(fock_dim, margin, hbar)?;
        let psi = dil.fock.coherent_state(Complex64::new(alpha, 0.0));
        let rho0 = &psi * psi.adjoint();
        let series = master_equation_evolve(&dil, &rho0, t_end, dt, save_stride).map_err(err)?;
        Ok(series
            .samples
            .iter()
            .map(|s| (s.t, s.q_mean, s.p_mean, s.n_mean, s.purity, s.min_eigenvalue))
            .collect())
    }
}

impl Model {
    fn quantum_dilation(
        &self,
        fock_dim: usize,
        margin: Option<usize>,
        hbar: f64,
    ) -> PyResult<mrcircuit_core::quantum::QuantumDilation> {
        let l0 = self
            .inner
            .constant_l0()
            .ok_or_else(|| PyValueError::new_err("quantum lift requires constant inductance"))?;
        let c0 = self
            .inner
            .phi_c_prime()
            .poly_coeffs()
            .filter(|c| c.len() == 2 && c[0] == 0.0 && c[1] > 0.0)
            .map(|c| 1.0 / c[1])
            .ok_or_else(|| {
                PyValueError::new_err("quantum lift requires a constant, positive capacitance")
            })?;
        let fock = FockModel::new(fock_dim, margin.unwrap_or(fock_dim / 4), hbar, l0, c0)
            .map_err(err)?;
        build_quantum_dilation(&self.inner, fock).map_err(err)
    }
}

/// A stochastic (or deterministic) phase-space system ready to integrate.
#[pyclass]
struct Dilation {
    system: SdeSystem,
    kind: String,
}

#[pymethods]
impl Dilation {
    fn kind(&self) -> &str {
        &self.kind
    }

    fn channels(&self) -> Vec<String> {
        self.system.channels().labels.clone()
    }

    /// Itô drift (v^q, v^p) at (t, q, p).
    fn ito_drift(&self, t: f64, q: f64, p: f64) -> (f64, f64) {
        self.system.ito_drift().eval(t, q, p)
    }

    /// Per-channel diffusion columns at (q, p).
    fn diffusion(&self, q: f64, p: f64) -> Vec<(f64, f64)> {
        self.system
            .diffusions()
            .iter()
            .map(|s| s.eval(q, p))
            .collect()
    }

    /// Integrate an ensemble; returns (times, paths) with each path a list
    /// of (q, p) samples.
    #[pyo3(signature = (q0, p0, t_end, dt, n_paths=1, seed=0, scheme="heun", save_stride=1))]
    #[allow(clippy::too_many_arguments)]
    fn simulate(
        &self,
        q0: f64,
        p0: f64,
        t_end: f64,
        dt: f64,
        n_paths: u64,
        seed: u64,
        scheme: &str,
        save_stride: usize,
    ) -> PyResult<(Vec<f64>, Vec<Vec<(f64, f64)>>)> {
        let spec = EnsembleSpec {
            q0,
            p0,
            t_end,
            dt,
            n_paths,
            seed,
            scheme: parse_scheme(scheme)?,
            save_stride,
        };
        let store = simulate_ensemble(&self.system, &spec).map_err(err)?;
        let paths = store
            .paths
            .iter()
            .map(|path| path.iter().map(|x| (x.q, x.p)).collect())
            .collect();
        Ok((store.times, paths))
    }

    /// Poisson bracket {q_t, p_t} with respect to initial conditions along
    /// one simulated path.
    #[pyo3(signature = (q0, p0, t_end, dt, seed=0, path=0))]
    fn plain_bracket(
        &self,
        q0: f64,
        p0: f64,
        t_end: f64,
        dt: f64,
        seed: u64,
        path: u64,
    ) -> PyResult<f64> {
        Ok(self.tangent(q0, p0, t_end, dt, seed, path)?.plain_bracket())
    }

    /// Extended bracket over initial conditions and symplectic noise
    /// increments (requires a symplectic dilation).
    #[pyo3(signature = (q0, p0, t_end, dt, seed=0, path=0))]
    fn extended_bracket(
        &self,
        q0: f64,
        p0: f64,
        t_end: f64,
        dt: f64,
        seed: u64,
        path: u64,
    ) -> PyResult<f64> {
        self.tangent(q0, p0, t_end, dt, seed, path)?
            .extended_bracket()
            .map_err(err)
    }
}

impl Dilation {
    fn tangent(
        &self,
        q0: f64,
        p0: f64,
        t_end: f64,
        dt: f64,
        seed: u64,
        path: u64,
    ) -> PyResult<mrcircuit_core::verify::TangentFlowState> {
        let n_steps = ((t_end / dt).round() as usize).max(1);
        let noise = NoisePath::generate(seed, path, self.system.n_channels(), n_steps, dt);
        propagate_tangent(
            &self.system,
            &noise,
            PhasePoint::new(q0, p0),
            Scheme::HeunStratonovich,
            0,
        )
        .map_err(err)
    }
}

/// Render a parsed netlist back to canonical text.
#[pyfunction]
fn format_netlist(text: &str) -> PyResult<String> {
    let ast =
        mrcircuit_core::netlist::parse(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(mrcircuit_core::netlist::print(&ast))
}

#[pymodule]
fn mrcircuit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Model>()?;
    m.add_class::<Dilation>()?;
    m.add_function(wrap_pyfunction!(format_netlist, m)?)?;
    Ok(())
}
