//! Truncated-Fock-space realization of the quantized circuit models.
//!
//! The circuit oscillator quantizes to q̂ = √(ħω₀C₀/2)(â + â†) and
//! p̂ = i√(ħω₀L₀/2)(â† − â) with [q̂, p̂] = iħ. Dissipation enters through
//! two coupling operators
//!
//! ```text
//! L̂₁ = q̂ + (i/ħ) f(p̂),      f = ½ Ψ′_R
//! L̂₂ = (1/ħ) g(q̂) + i p̂,    g′ = M/(2L₀)
//! ```
//!
//! together with the Hamiltonian correction
//! K̂ = ½[f(p̂)q̂ + q̂f(p̂)] + ½[p̂g(q̂) + g(q̂)p̂]. The GKS–Lindblad generator
//! built from (Ĥ₀ + K̂, L̂₁, L̂₂) then reproduces the dissipative circuit
//! drift in the Heisenberg picture, with the memristive force symmetrically
//! ordered. Ladder truncation corrupts the top levels, so all operator
//! identities are asserted on an interior projection that discards the top
//! `margin` levels.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::PhaseSpaceModel;
use crate::error::{CoreError, Result};
use crate::scalar::ScalarFunction;

pub type CMat = DMatrix<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Annihilation operator with √n entries on the superdiagonal.
pub fn annihilation(dim: usize) -> CMat {
    let mut a = CMat::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = re((n as f64).sqrt());
    }
    a
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

/// tr(A·B) in O(dim²).
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Ladder matrices, quadratures and constants of the truncated oscillator.
#[derive(Clone, Debug)]
pub struct FockModel {
    pub dim: usize,
    pub margin: usize,
    pub hbar: f64,
    pub l0: f64,
    pub c0: f64,
    pub omega0: f64,
    a: CMat,
    a_dag: CMat,
    n_op: CMat,
    q_op: CMat,
    p_op: CMat,
}

impl FockModel {
    /// Truncation dimension `dim` (levels 0..dim−1) with `margin` top levels
    /// excluded from identity checks.
    pub fn new(dim: usize, margin: usize, hbar: f64, l0: f64, c0: f64) -> Result<FockModel> {
        if dim < 8 || margin < 1 || margin >= dim / 2 {
            return Err(CoreError::InvalidConfig(format!(
                "need dim >= 8 and 1 <= margin < dim/2, got dim={dim}, margin={margin}"
            )));
        }
        if !(hbar > 0.0 && l0 > 0.0 && c0 > 0.0) {
            return Err(CoreError::InvalidConfig(
                "hbar, L0 and C0 must be positive".into(),
            ));
        }
        let omega0 = 1.0 / (l0 * c0).sqrt();
        let a = annihilation(dim);
        let a_dag = a.adjoint();
        let n_op = &a_dag * &a;
        let q_op = (&a + &a_dag) * re((hbar * omega0 * c0 / 2.0).sqrt());
        let p_op = (&a_dag - &a) * (I * re((hbar * omega0 * l0 / 2.0).sqrt()));
        Ok(FockModel {
            dim,
            margin,
            hbar,
            l0,
            c0,
            omega0,
            a,
            a_dag,
            n_op,
            q_op,
            p_op,
        })
    }

    pub fn annihilation_op(&self) -> &CMat {
        &self.a
    }

    pub fn creation_op(&self) -> &CMat {
        &self.a_dag
    }

    pub fn number_op(&self) -> &CMat {
        &self.n_op
    }

    pub fn q_op(&self) -> &CMat {
        &self.q_op
    }

    pub fn p_op(&self) -> &CMat {
        &self.p_op
    }

    /// Oscillator Hamiltonian ħω₀(N̂ + ½) − e·q̂ at drive value `e`.
    pub fn h0(&self, drive_value: f64) -> CMat {
        let mut h = self.n_op.clone() * re(self.hbar * self.omega0);
        for i in 0..self.dim {
            h[(i, i)] += re(0.5 * self.hbar * self.omega0);
        }
        h - &self.q_op * re(drive_value)
    }

    /// Zero out rows and columns of the top `margin` levels.
    pub fn project_interior(&self, m: &CMat) -> CMat {
        let keep = self.dim - self.margin;
        let mut out = m.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i >= keep || j >= keep {
                    out[(i, j)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    /// Frobenius norm of the interior projection.
    pub fn interior_norm(&self, m: &CMat) -> f64 {
        self.project_interior(m).norm()
    }

    /// Normalized coherent state |α⟩ truncated to the model dimension.
    pub fn coherent_state(&self, alpha: Complex64) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.dim);
        let mut c = re((-0.5 * alpha.norm_sqr()).exp());
        v[0] = c;
        for n in 1..self.dim {
            c *= alpha / re((n as f64).sqrt());
            v[n] = c;
        }
        let norm = v.norm();
        v / re(norm)
    }
}

/// Spectral calculus for Hermitian operators: diagonalize, map the
/// eigenvalues through φ, reassemble. Polynomial φ agrees with direct
/// matrix-polynomial evaluation.
pub fn operator_function(a: &CMat, phi: &ScalarFunction) -> Result<CMat> {
    let dev = (a - a.adjoint()).norm();
    if dev > 1e-12 * a.norm().max(1.0) {
        return Err(CoreError::NotHermitian(dev));
    }
    let eig = a
        .clone()
        .symmetric_eigen();
    let mut diag = CMat::zeros(a.nrows(), a.ncols());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        diag[(i, i)] = re(phi.eval(lambda)?);
    }
    Ok(&eig.eigenvectors * diag * eig.eigenvectors.adjoint())
}

/// The quantized dilation: Hamiltonian Ĥ₀ + K̂ and coupling operators.
#[derive(Clone, Debug)]
pub struct QuantumDilation {
    pub fock: FockModel,
    /// f = ½Ψ′_R.
    pub f_fn: ScalarFunction,
    /// g with g′ = M/(2L₀).
    pub g_fn: ScalarFunction,
    /// Ĥ₀(e=0) + K̂; the drive term −e(t)q̂ is added per evaluation time.
    pub h_static: CMat,
    pub k_op: CMat,
    pub l1: CMat,
    pub l2: CMat,
    pub drive: ScalarFunction,
    phi_c_prime: ScalarFunction,
    psi_r_prime: ScalarFunction,
    memristance: ScalarFunction,
}

/// Lift a series constant-L₀ circuit model with polynomial characteristics
/// onto the truncated Fock space.
pub fn build_quantum_dilation(model: &PhaseSpaceModel, fock: FockModel) -> Result<QuantumDilation> {
    if !model.is_series() {
        return Err(CoreError::NonSeriesModel);
    }
    let l0 = model.constant_l0().ok_or(CoreError::NonConstantInductance)?;
    let psi_r_prime = model.psi_r_prime()?;
    let memristance = model.dissipator().memristance.clone();
    if !psi_r_prime.is_polynomial() || !memristance.is_polynomial() || !model.phi_c_prime().is_polynomial() {
        return Err(CoreError::NoClosedForm(
            "quantum lift requires polynomial characteristics".into(),
        ));
    }
    let f_fn = psi_r_prime.scale(0.5);
    let g_fn = memristance.scale(0.5 / l0).antiderivative();

    let f_of_p = operator_function(&fock.p_op, &widen(&f_fn))?;
    let g_of_q = operator_function(&fock.q_op, &widen(&g_fn))?;

    let k_op = (&f_of_p * &fock.q_op + &fock.q_op * &f_of_p) * re(0.5)
        + (&fock.p_op * &g_of_q + &g_of_q * &fock.p_op) * re(0.5);
    let h_static = fock.h0(0.0) + &k_op;
    let herm_dev = (&h_static - h_static.adjoint()).norm();
    if herm_dev > 1e-12 * h_static.norm().max(1.0) {
        return Err(CoreError::NotHermitian(herm_dev));
    }
    let l1 = &fock.q_op + &f_of_p * (I / re(fock.hbar));
    let l2 = &g_of_q * re(1.0 / fock.hbar) + &fock.p_op * I;

    Ok(QuantumDilation {
        f_fn,
        g_fn,
        h_static,
        k_op,
        l1,
        l2,
        drive: model.drive().clone(),
        phi_c_prime: model.phi_c_prime().clone(),
        psi_r_prime,
        memristance,
        fock,
    })
}

/// Operator spectra exceed the default scalar domain; identity checks apply
/// characteristics to eigenvalues directly.
fn widen(f: &ScalarFunction) -> ScalarFunction {
    f.clone().with_domain(crate::scalar::Interval::ALL)
}

impl QuantumDilation {
    pub fn hamiltonian(&self, t: f64) -> CMat {
        &self.h_static - &self.fock.q_op * re(self.drive.eval_raw(t))
    }

    pub fn couplings(&self) -> [&CMat; 2] {
        [&self.l1, &self.l2]
    }
}

/// Heisenberg-picture GKS–Lindblad generator:
/// 𝓛X̂ = ½Σ[L̂†,X̂]L̂ + ½ΣL̂†[X̂,L̂] + (1/iħ)[X̂,Ĥ].
pub fn lindblad_heisenberg(h: &CMat, ls: &[&CMat], x: &CMat, hbar: f64) -> Result<CMat> {
    if h.nrows() != x.nrows() || ls.iter().any(|l| l.nrows() != x.nrows()) {
        return Err(CoreError::DimensionMismatch(
            "operator dimensions disagree".into(),
        ));
    }
    let mut out = commutator(x, h) * (re(1.0) / (I * re(hbar)));
    for l in ls {
        let l_dag = l.adjoint();
        out += (commutator(&l_dag, x) * *l + l_dag * commutator(x, l)) * re(0.5);
    }
    Ok(out)
}

/// Schrödinger-picture adjoint:
/// `𝓛*ρ = −(i/ħ)[Ĥ,ρ] + Σ(L̂ρL̂† − ½{L̂†L̂, ρ})`.
pub fn lindblad_schrodinger(h: &CMat, ls: &[&CMat], rho: &CMat, hbar: f64) -> CMat {
    let mut out = commutator(h, rho) * (-I / re(hbar));
    for l in ls {
        let l_dag = l.adjoint();
        let ldl = &l_dag * *l;
        out += *l * rho * l_dag - anticommutator(&ldl, rho) * re(0.5);
    }
    out
}

/// One relative interior-norm check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorCheck {
    pub name: String,
    pub relative_deviation: f64,
}

/// Interior-projected residuals of the Heisenberg drift and the noise
/// coefficients of the quantum dilation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftIdentityReport {
    pub dim: usize,
    pub margin: usize,
    /// ‖P(𝓛q̂ − p̂/L₀)P‖ / ‖P p̂/L₀ P‖.
    pub drift_q_relative: f64,
    /// ‖P(𝓛p̂ − target)P‖ / ‖P target P‖ with the symmetrically ordered
    /// memristive force in the target.
    pub drift_p_relative: f64,
    pub noise_checks: Vec<OperatorCheck>,
}

impl DriftIdentityReport {
    pub fn max_noise_deviation(&self) -> f64 {
        self.noise_checks
            .iter()
            .map(|c| c.relative_deviation)
            .fold(0.0, f64::max)
    }
}

/// Verify the drift identities 𝓛q̂ = p̂/L₀ and
/// 𝓛p̂ = −Φ′_C(q̂) − Ψ′_R(p̂) − (1/2L₀)(M(q̂)p̂ + p̂M(q̂)) + e(t), plus the
/// quadrature noise coefficients of the coupled QSDE, all on the interior
/// projection at time `t`.
pub fn verify_drift_identities(dil: &QuantumDilation, t: f64) -> Result<DriftIdentityReport> {
    let fock = &dil.fock;
    let hbar = fock.hbar;
    let l0 = fock.l0;
    let h = dil.hamiltonian(t);
    let ls = dil.couplings();

    let lq = lindblad_heisenberg(&h, &ls, &fock.q_op, hbar)?;
    let target_q = &fock.p_op * re(1.0 / l0);
    let drift_q_relative =
        fock.interior_norm(&(&lq - &target_q)) / fock.interior_norm(&target_q);

    let lp = lindblad_heisenberg(&h, &ls, &fock.p_op, hbar)?;
    let phi_of_q = operator_function(&fock.q_op, &widen(&dil.phi_c_prime))?;
    let psi_of_p = operator_function(&fock.p_op, &widen(&dil.psi_r_prime))?;
    let m_of_q = operator_function(&fock.q_op, &widen(&dil.memristance))?;
    let sym = anticommutator(&m_of_q, &fock.p_op) * re(0.5 / l0);
    let mut target_p = -phi_of_q - psi_of_p - sym;
    let e_val = dil.drive.eval_raw(t);
    for i in 0..fock.dim {
        target_p[(i, i)] += re(e_val);
    }
    let drift_p_relative =
        fock.interior_norm(&(&lp - &target_p)) / fock.interior_norm(&target_p);

    // Quadrature noise coefficients. Writing dj(X̂) = c† dÂ† + c dÂ + … with
    // c† = [X̂, L̂], c = [L̂†, X̂], the dQ̂ coefficient is ½(c† + c) and the
    // dP̂ coefficient is (i/2)(c − c†). The dilation must give
    //   dj(q̂) = … − f′(p̂) dQ̂₁ − ħ dQ̂₂,   dj(p̂) = … − ħ dP̂₁ − g′(q̂) dP̂₂.
    let f_prime_p = operator_function(&fock.p_op, &widen(&dil.f_fn.derivative()))?;
    let g_prime_q = operator_function(&fock.q_op, &widen(&dil.g_fn.derivative()))?;
    let hbar_id = CMat::identity(fock.dim, fock.dim) * re(hbar);
    let zero = CMat::zeros(fock.dim, fock.dim);
    let observables = [("q", &fock.q_op), ("p", &fock.p_op)];
    let mut noise_checks = Vec::new();
    for (x_name, x) in observables {
        for (ch, l) in [("1", &dil.l1), ("2", &dil.l2)] {
            let c_dag = commutator(x, l);
            let c = commutator(&l.adjoint(), x);
            let q_coeff = (&c_dag + &c) * re(0.5);
            let p_coeff = (&c - &c_dag) * (I * re(0.5));
            let (q_target, p_target): (&CMat, &CMat) = match (x_name, ch) {
                ("q", "1") => (&f_prime_p, &zero),
                ("q", "2") => (&hbar_id, &zero),
                ("p", "1") => (&zero, &hbar_id),
                ("p", "2") => (&zero, &g_prime_q),
                _ => unreachable!(),
            };
            let scale = fock
                .interior_norm(x)
                .max(fock.interior_norm(q_target))
                .max(fock.interior_norm(p_target));
            noise_checks.push(OperatorCheck {
                name: format!("dQ{ch} coefficient of {x_name}"),
                relative_deviation: fock.interior_norm(&(q_coeff + q_target)) / scale,
            });
            noise_checks.push(OperatorCheck {
                name: format!("dP{ch} coefficient of {x_name}"),
                relative_deviation: fock.interior_norm(&(p_coeff + p_target)) / scale,
            });
        }
    }

    Ok(DriftIdentityReport {
        dim: fock.dim,
        margin: fock.margin,
        drift_q_relative,
        drift_p_relative,
        noise_checks,
    })
}

/// Expectation values along a master-equation evolution.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExpectationSample {
    pub t: f64,
    pub q_mean: f64,
    pub p_mean: f64,
    pub n_mean: f64,
    pub purity: f64,
    pub min_eigenvalue: f64,
    pub trace_deviation: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionSeries {
    pub samples: Vec<ExpectationSample>,
    pub final_state: CMat,
}

impl EvolutionSeries {
    /// CSV with header `t,q_mean,p_mean,n_mean,purity,min_eig`.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "t,q_mean,p_mean,n_mean,purity,min_eig")?;
        for s in &self.samples {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                s.t, s.q_mean, s.p_mean, s.n_mean, s.purity, s.min_eigenvalue
            )?;
        }
        Ok(())
    }
}

/// RK4 integration of ρ̇ = 𝓛*ρ with the drive frozen per stage, Hermitian
/// symmetrization each step, and positivity monitoring at save points.
pub fn master_equation_evolve(
    dil: &QuantumDilation,
    rho0: &CMat,
    t_end: f64,
    dt: f64,
    save_stride: usize,
) -> Result<EvolutionSeries> {
    let fock = &dil.fock;
    let dim = fock.dim;
    if rho0.nrows() != dim || rho0.ncols() != dim {
        return Err(CoreError::DimensionMismatch(format!(
            "state is {}x{}, model dimension is {dim}",
            rho0.nrows(),
            rho0.ncols()
        )));
    }
    let herm = (rho0 - rho0.adjoint()).norm();
    if herm > 1e-12 * rho0.norm().max(1.0) {
        return Err(CoreError::NotHermitian(herm));
    }
    let trace = rho0.trace();
    if (trace.re - 1.0).abs() > 1e-9 || trace.im.abs() > 1e-12 {
        return Err(CoreError::InvalidConfig(format!(
            "initial state trace {trace} is not 1"
        )));
    }
    let min0 = min_eigenvalue(rho0);
    if min0 < -1e-12 {
        return Err(CoreError::InvalidConfig(format!(
            "initial state not positive semidefinite (min eig {min0:.3e})"
        )));
    }

    let ls = dil.couplings();
    let n_steps = ((t_end / dt).round() as usize).max(1);
    let stride = save_stride.max(1);
    let mut rho = rho0.clone();
    let mut samples = Vec::new();
    let record = |t: f64, rho: &CMat, samples: &mut Vec<ExpectationSample>| -> Result<()> {
        let min_eig = min_eigenvalue(rho);
        if min_eig < -1e-6 {
            return Err(CoreError::TruncationTooSmall { min_eig });
        }
        samples.push(ExpectationSample {
            t,
            q_mean: trace_product(rho, &fock.q_op).re,
            p_mean: trace_product(rho, &fock.p_op).re,
            n_mean: trace_product(rho, &fock.n_op).re,
            purity: trace_product(rho, rho).re,
            min_eigenvalue: min_eig,
            trace_deviation: (rho.trace().re - 1.0).abs(),
        });
        Ok(())
    };
    record(0.0, &rho, &mut samples)?;

    for k in 0..n_steps {
        let t = k as f64 * dt;
        let rhs = |t: f64, r: &CMat| -> CMat {
            let h = dil.hamiltonian(t);
            lindblad_schrodinger(&h, &ls, r, fock.hbar)
        };
        let k1 = rhs(t, &rho);
        let k2 = rhs(t + 0.5 * dt, &(&rho + &k1 * re(0.5 * dt)));
        let k3 = rhs(t + 0.5 * dt, &(&rho + &k2 * re(0.5 * dt)));
        let k4 = rhs(t + dt, &(&rho + &k3 * re(dt)));
        rho += (k1 + k2 * re(2.0) + k3 * re(2.0) + k4) * re(dt / 6.0);
        rho = (&rho + rho.adjoint()) * re(0.5);
        if !rho.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            return Err(CoreError::Other(format!(
                "master equation diverged at step {k}"
            )));
        }
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            record((k + 1) as f64 * dt, &rho, &mut samples)?;
        }
    }
    Ok(EvolutionSeries {
        samples,
        final_state: rho,
    })
}

fn min_eigenvalue(m: &CMat) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}
