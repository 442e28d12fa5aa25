//! Canonical stochastic dilations of dissipative circuit models.
//!
//! A dissipative phase-space flow cannot preserve Poisson brackets on its
//! own; embedding it in a noisy Hamiltonian system can. Two constructions
//! are provided:
//!
//! * [`build_wiener_dilation`] — a pair of plain Wiener channels with
//!   Hamiltonian noise functions F₁ = q²/(2c) + cW(p), F₂ = p²/(2ℓ) + ℓG(q),
//!   where W′ = Ψ′_R and G″ = M/L₀. The Itô drift of the resulting canonical
//!   SDE reproduces the circuit velocity field exactly.
//! * [`build_symplectic_dilation`] — two canonically conjugate channel pairs
//!   (Q_α, P_α) with generators (F₁, G₁) = (ϱ(p), −q) and
//!   (F₂, G₂) = (p, −μ(q)), ϱ = Ψ′_R/Γ, μ′ = M/(ΓL₀), plus the divergence
//!   field u with ∇·u = −Γ Σ_α {F_α, G_α}.
//!
//! Noise coefficients are the Poisson brackets of the coordinates with the
//! generators: the dQ_α column is ({q,F_α}, {p,F_α}) and the dP_α column is
//! ({q,G_α}, {p,G_α}).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::PhaseSpaceModel;
use crate::error::{CoreError, Result};
use crate::field::{
    poisson_bracket, AnalyticDiffusion, AnalyticDrift, DiffusionField, PhaseField, PhaseFunction,
};
use crate::scalar::ScalarFunction;
use crate::sde::{ChannelSet, SdeSystem};

/// Uniform evaluation grid for residual and identity checks.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_lo: f64,
    pub q_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub nq: usize,
    pub np: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            q_lo: -2.0,
            q_hi: 2.0,
            p_lo: -2.0,
            p_hi: 2.0,
            nq: 41,
            np: 41,
        }
    }
}

impl GridSpec {
    pub fn q_points(&self) -> Vec<f64> {
        linspace(self.q_lo, self.q_hi, self.nq)
    }

    pub fn p_points(&self) -> Vec<f64> {
        linspace(self.p_lo, self.p_hi, self.np)
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let ps = self.p_points();
        self.q_points()
            .into_iter()
            .flat_map(|q| ps.iter().map(move |&p| (q, p)))
            .collect()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn require_series_constant_l0(model: &PhaseSpaceModel) -> Result<f64> {
    if !model.is_series() {
        return Err(CoreError::NonSeriesModel);
    }
    model.constant_l0().ok_or(CoreError::NonConstantInductance)
}

/// Circuit velocity field as exact phase-space functions
/// (series model, constant L₀).
pub fn circuit_drift_field(model: &PhaseSpaceModel) -> Result<AnalyticDrift> {
    let l0 = require_series_constant_l0(model)?;
    let psi_prime = model.psi_r_prime()?;
    let momentum = ScalarFunction::polynomial(vec![0.0, 1.0]);
    let vq = PhaseField::of_p(ScalarFunction::polynomial(vec![0.0, 1.0 / l0]));
    let vp = PhaseField::of_q(model.phi_c_prime().scale(-1.0))
        .add(&PhaseField::of_p(psi_prime.scale(-1.0)))
        .add(&PhaseField::product(
            model.dissipator().memristance.scale(-1.0 / l0),
            momentum,
        ));
    Ok(AnalyticDrift::new(vq, vp, model.drive().clone()))
}

/// A canonical dilation driven by a pair of plain Wiener channels, one for
/// the resistance and one for the memristance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WienerDilation {
    /// Hamiltonian without the −e(t)q drive term.
    pub hamiltonian: PhaseField,
    pub drive: ScalarFunction,
    pub noise_functions: [PhaseField; 2],
    pub c: f64,
    pub ell: f64,
    /// W(p), with W′ = Ψ′_R.
    pub w_fn: ScalarFunction,
    /// G(q), with G″ = M/L₀.
    pub g_fn: ScalarFunction,
}

/// Build the Wiener dilation of a series, constant-L₀ model. `c` and `ell`
/// carry units of capacitance and inductance; both default to 1 in natural
/// units.
pub fn build_wiener_dilation(
    model: &PhaseSpaceModel,
    c: f64,
    ell: f64,
) -> Result<(WienerDilation, SdeSystem)> {
    let l0 = require_series_constant_l0(model)?;
    if !(c > 0.0 && ell > 0.0) {
        return Err(CoreError::InvalidConfig(
            "dilation constants c and ell must be positive".into(),
        ));
    }
    let psi_prime = model.psi_r_prime()?;
    let w_fn = psi_prime.antiderivative();
    let g_fn = model
        .dissipator()
        .memristance
        .scale(1.0 / l0)
        .antiderivative()
        .antiderivative();
    let g_prime = g_fn.derivative();

    let momentum = ScalarFunction::polynomial(vec![0.0, 1.0]);
    let position = ScalarFunction::polynomial(vec![0.0, 1.0]);

    // H = 𝕂(p) + Φ_C(q) + ½W′(p)q + ½G′(q)p − e(t)q
    let hamiltonian = PhaseField::of_p(ScalarFunction::polynomial(vec![0.0, 0.0, 0.5 / l0]))
        .add(&PhaseField::of_q(model.phi_c().clone()))
        .add(&PhaseField::product(
            position.scale(0.5),
            psi_prime.clone(),
        ))
        .add(&PhaseField::product(g_prime.scale(0.5), momentum.clone()));

    // F₁ = q²/(2c) + cW(p), F₂ = p²/(2ℓ) + ℓG(q)
    let f1 = PhaseField::of_q(ScalarFunction::polynomial(vec![0.0, 0.0, 0.5 / c]))
        .add(&PhaseField::of_p(w_fn.scale(c)));
    let f2 = PhaseField::of_p(ScalarFunction::polynomial(vec![0.0, 0.0, 0.5 / ell]))
        .add(&PhaseField::of_q(g_fn.scale(ell)));

    let diffusions: Vec<Arc<dyn DiffusionField>> = vec![
        Arc::new(AnalyticDiffusion::hamiltonian(&f1)),
        Arc::new(AnalyticDiffusion::hamiltonian(&f2)),
    ];
    let strat = Arc::new(AnalyticDrift::hamiltonian(&hamiltonian, model.drive().clone()));
    let ito = Arc::new(circuit_drift_field(model)?);
    let system = SdeSystem::from_pair(
        ito,
        strat,
        diffusions,
        ChannelSet::plain(&["B_resistance", "B_memristance"]),
    );

    Ok((
        WienerDilation {
            hamiltonian,
            drive: model.drive().clone(),
            noise_functions: [f1, f2],
            c,
            ell,
            w_fn,
            g_fn,
        },
        system,
    ))
}

/// A canonical dilation driven by symplectic noise pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymplecticDilation {
    pub hamiltonian: PhaseField,
    pub drive: ScalarFunction,
    /// Generator pairs (F_α, G_α), one per conjugate channel pair.
    pub pairs: Vec<(PhaseField, PhaseField)>,
    /// Bracket weight Γ of the noise.
    pub gamma_noise: f64,
    /// Divergence field u = (u^q, u^p) with ∇·u = −Γ Σ {F_α, G_α}.
    pub u_q: PhaseField,
    pub u_p: PhaseField,
}

impl SymplecticDilation {
    /// Assemble a symplectic dilation from explicit generator pairs. The
    /// Stratonovich drift is J∇H + u exactly; the Itô drift adds the usual
    /// ½Σ(σ·∇)σ correction over all channels.
    pub fn from_pairs(
        hamiltonian: PhaseField,
        drive: ScalarFunction,
        pairs: Vec<(PhaseField, PhaseField)>,
        pair_names: &[&str],
        gamma: f64,
    ) -> Result<(SymplecticDilation, SdeSystem)> {
        if !(gamma > 0.0) {
            return Err(CoreError::InvalidConfig(
                "bracket weight gamma must be positive".into(),
            ));
        }
        let fs: Vec<PhaseField> = pairs.iter().map(|(f, _)| f.clone()).collect();
        let gs: Vec<PhaseField> = pairs.iter().map(|(_, g)| g.clone()).collect();
        let (u_q, u_p) = u_field(&fs, &gs, gamma, UForm::Corollary)?;

        let mut columns: Vec<AnalyticDiffusion> = Vec::new();
        for (f, g) in &pairs {
            columns.push(AnalyticDiffusion::hamiltonian(f));
            columns.push(AnalyticDiffusion::hamiltonian(g));
        }

        let strat_vq = hamiltonian.d_dp().add(&u_q);
        let strat_vp = hamiltonian.d_dq().scale(-1.0).add(&u_p);
        let strat = Arc::new(AnalyticDrift::new(strat_vq.clone(), strat_vp.clone(), drive.clone()));

        // Itô drift = Stratonovich drift + ½Σ(σ·∇)σ, computed in closed form.
        let mut ito_vq = strat_vq;
        let mut ito_vp = strat_vp;
        for sigma in &columns {
            let (cq, cp) = half_advection_fields(sigma)?;
            ito_vq = ito_vq.add(&cq);
            ito_vp = ito_vp.add(&cp);
        }
        let ito = Arc::new(AnalyticDrift::new(ito_vq, ito_vp, drive.clone()));

        let diffusions: Vec<Arc<dyn DiffusionField>> = columns
            .into_iter()
            .map(|c| Arc::new(c) as Arc<dyn DiffusionField>)
            .collect();
        let system = SdeSystem::from_pair(
            ito,
            strat,
            diffusions,
            ChannelSet::symplectic(pair_names, gamma),
        );
        Ok((
            SymplecticDilation {
                hamiltonian,
                drive,
                pairs,
                gamma_noise: gamma,
                u_q,
                u_p,
            },
            system,
        ))
    }

    /// Dissipation Γ Σ_α {F_α, G_α} at a phase point.
    pub fn gamma(&self, q: f64, p: f64) -> f64 {
        self.gamma_noise
            * self
                .pairs
                .iter()
                .map(|(f, g)| poisson_bracket(f, g, q, p))
                .sum::<f64>()
    }
}

/// ½(σ·∇)σ as exact fields.
fn half_advection_fields(sigma: &AnalyticDiffusion) -> Result<(PhaseField, PhaseField)> {
    let sq = &sigma.sq;
    let sp = &sigma.sp;
    let cq = sq
        .try_mul(&sq.d_dq())?
        .add(&sp.try_mul(&sq.d_dp())?)
        .scale(0.5);
    let cp = sq
        .try_mul(&sp.d_dq())?
        .add(&sp.try_mul(&sp.d_dp())?)
        .scale(0.5);
    Ok((cq, cp))
}

/// Build the symplectic dilation of a series, constant-L₀ model with two
/// conjugate pairs, one for the resistance and one for the memristance.
pub fn build_symplectic_dilation(
    model: &PhaseSpaceModel,
    gamma: f64,
) -> Result<(SymplecticDilation, SdeSystem)> {
    let l0 = require_series_constant_l0(model)?;
    if !(gamma > 0.0) {
        return Err(CoreError::InvalidConfig(
            "bracket weight gamma must be positive".into(),
        ));
    }
    let varrho = model.psi_r_prime()?.scale(1.0 / gamma);
    let mu = model
        .dissipator()
        .memristance
        .scale(1.0 / (gamma * l0))
        .antiderivative();
    let coordinate = ScalarFunction::polynomial(vec![0.0, 1.0]);

    // H = 𝕂(p) + Φ_C(q) − e(t)q
    let hamiltonian = PhaseField::of_p(ScalarFunction::polynomial(vec![0.0, 0.0, 0.5 / l0]))
        .add(&PhaseField::of_q(model.phi_c().clone()));

    let pairs = vec![
        (
            PhaseField::of_p(varrho),
            PhaseField::of_q(coordinate.scale(-1.0)),
        ),
        (
            PhaseField::of_p(coordinate.clone()),
            PhaseField::of_q(mu.scale(-1.0)),
        ),
    ];

    let (dilation, generic_system) = SymplecticDilation::from_pairs(
        hamiltonian,
        model.drive().clone(),
        pairs,
        &["resistance", "memristance"],
        gamma,
    )?;

    // The construction's Itô drift equals the circuit velocity field; store
    // the circuit form so the equality stays an independently testable
    // identity rather than a definition.
    let ito = Arc::new(circuit_drift_field(model)?);
    let system = SdeSystem::from_pair(
        ito,
        generic_system.strat_drift().clone(),
        generic_system.diffusions().to_vec(),
        generic_system.channels().clone(),
    );
    Ok((dilation, system))
}

/// Which particular solution of ∇·u = −Γ Σ {F_α, G_α} to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UForm {
    /// u₀ = ½Γ Σ (G ∂F/∂p − F ∂G/∂p, F ∂G/∂q − G ∂F/∂q).
    Particular,
    /// u = Γ Σ (−F ∂G/∂p, F ∂G/∂q); differs from u₀ by a Hamiltonian field.
    Corollary,
}

/// Divergence field for symplectic dilations.
pub fn u_field(
    fs: &[PhaseField],
    gs: &[PhaseField],
    gamma: f64,
    form: UForm,
) -> Result<(PhaseField, PhaseField)> {
    if fs.len() != gs.len() {
        return Err(CoreError::DimensionMismatch(format!(
            "{} F generators vs {} G generators",
            fs.len(),
            gs.len()
        )));
    }
    let mut uq = PhaseField::zero();
    let mut up = PhaseField::zero();
    for (f, g) in fs.iter().zip(gs) {
        match form {
            UForm::Particular => {
                uq = uq
                    .add(&g.try_mul(&f.d_dp())?.scale(0.5 * gamma))
                    .add(&f.try_mul(&g.d_dp())?.scale(-0.5 * gamma));
                up = up
                    .add(&f.try_mul(&g.d_dq())?.scale(0.5 * gamma))
                    .add(&g.try_mul(&f.d_dq())?.scale(-0.5 * gamma));
            }
            UForm::Corollary => {
                uq = uq.add(&f.try_mul(&g.d_dp())?.scale(-gamma));
                up = up.add(&f.try_mul(&g.d_dq())?.scale(gamma));
            }
        }
    }
    Ok((uq, up))
}

/// Max-abs residuals of the two structural identities a Hamiltonian noise
/// family must satisfy to reproduce a dissipator voltage *with the circuit
/// Hamiltonian left untouched*:
///
/// ```text
/// r_closure:  Σ ∂F/∂p ∂²F/∂q∂p − Σ ∂F/∂q ∂²F/∂p²          = 0
/// r_voltage:  Σ ∂F/∂p ∂²F/∂q² − Σ ∂F/∂q ∂²F/∂q∂p          = 2 𝕍_D
/// ```
///
/// Solving this system directly is hard in general; the explicit
/// constructions instead absorb the symmetrized cross term
/// ½ Σ_α ∂F_α/∂q ∂F_α/∂p into the Hamiltonian and satisfy the shifted
/// system measured by [`shifted_pde_residuals`].
pub fn pde_residuals<V>(fs: &[PhaseField], dissipator_voltage: V, grid: &GridSpec) -> (f64, f64)
where
    V: Fn(f64, f64) -> f64,
{
    let mut r_closure = 0.0f64;
    let mut r_voltage = 0.0f64;
    for (q, p) in grid.points() {
        let mut lhs0 = 0.0;
        let mut lhs_v = 0.0;
        for f in fs {
            let (fq, fp) = f.grad(q, p);
            let h = f.hessian(q, p);
            lhs0 += fp * h[0][1] - fq * h[1][1];
            lhs_v += fp * h[0][0] - fq * h[0][1];
        }
        r_closure = r_closure.max(lhs0.abs());
        r_voltage = r_voltage.max((lhs_v - 2.0 * dissipator_voltage(q, p)).abs());
    }
    (r_closure, r_voltage)
}

/// Residuals of the realization identities when the Hamiltonian absorbs the
/// symmetrized cross term K = ½ Σ_α ∂F_α/∂q ∂F_α/∂p:
///
/// ```text
/// r_closure:  Σ [∂F/∂p ∂²F/∂q∂p − ∂F/∂q ∂²F/∂p²] + 2 ∂K/∂p  = 0
/// r_voltage:  Σ [∂F/∂p ∂²F/∂q² − ∂F/∂q ∂²F/∂q∂p] + 2 ∂K/∂q  = 2 𝕍_D
/// ```
///
/// These are the identities the explicit Wiener construction satisfies
/// exactly: the induced Itô drift then reproduces the dissipative circuit
/// field. Expanding K collapses them to Σ ∂F/∂p ∂²F/∂q∂p = 0 and
/// Σ ∂F/∂p ∂²F/∂q² = 𝕍_D.
pub fn shifted_pde_residuals<V>(
    fs: &[PhaseField],
    dissipator_voltage: V,
    grid: &GridSpec,
) -> (f64, f64)
where
    V: Fn(f64, f64) -> f64,
{
    let mut r_closure = 0.0f64;
    let mut r_voltage = 0.0f64;
    for (q, p) in grid.points() {
        let mut lhs0 = 0.0;
        let mut lhs_v = 0.0;
        for f in fs {
            let (fq, fp) = f.grad(q, p);
            let h = f.hessian(q, p);
            // Σ[F_p F_qp − F_q F_pp] + ∂/∂p ΣF_qF_p = 2 Σ F_p F_qp
            lhs0 += fp * h[0][1] - fq * h[1][1] + (h[0][1] * fp + fq * h[1][1]);
            // Σ[F_p F_qq − F_q F_qp] + ∂/∂q ΣF_qF_p = 2 Σ F_p F_qq
            lhs_v += fp * h[0][0] - fq * h[0][1] + (h[0][0] * fp + fq * h[0][1]);
        }
        r_closure = r_closure.max(lhs0.abs());
        r_voltage = r_voltage.max((lhs_v - 2.0 * dissipator_voltage(q, p)).abs());
    }
    (r_closure, r_voltage)
}

/// ξ(q) sampled on the grid's q points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct XiRatio {
    pub qs: Vec<f64>,
    pub values: Vec<f64>,
}

impl XiRatio {
    /// Piecewise-linear evaluation.
    pub fn eval(&self, q: f64) -> f64 {
        match self.qs.iter().position(|&x| x >= q) {
            Some(0) => self.values[0],
            None => *self.values.last().unwrap(),
            Some(i) => {
                let w = (q - self.qs[i - 1]) / (self.qs[i] - self.qs[i - 1]);
                self.values[i - 1] * (1.0 - w) + self.values[i] * w
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum XiOutcome {
    /// The ratio (∂F/∂q)/(∂F/∂p) depends on q alone; ξ(q) is returned.
    Separable(XiRatio),
    /// The ratio varies with p; the single-noise reduction does not apply.
    NotSeparable { max_variation: f64 },
}

const XI_VARIATION_TOL: f64 = 1e-8;

/// Single-noise reduction test: a lone Hamiltonian noise function F can
/// reproduce a dissipator only if (∂F/∂q)/(∂F/∂p) = ξ(q) for some ξ.
pub fn xi_condition(f: &dyn PhaseFunction, grid: &GridSpec) -> Result<XiOutcome> {
    let qs = grid.q_points();
    let ps = grid.p_points();
    let mut values = Vec::with_capacity(qs.len());
    let mut max_variation = 0.0f64;
    for &q in &qs {
        let mut ratios = Vec::with_capacity(ps.len());
        for &p in &ps {
            let (fq, fp) = f.grad(q, p);
            if fp.abs() < 1e-12 {
                return Err(CoreError::Other(format!(
                    "vanishing ∂F/∂p at (q,p)=({q},{p})"
                )));
            }
            ratios.push(fq / fp);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = ratios
            .iter()
            .map(|r| (r - mean).abs())
            .fold(0.0f64, f64::max);
        max_variation = max_variation.max(spread);
        values.push(mean);
    }
    if max_variation < XI_VARIATION_TOL {
        Ok(XiOutcome::Separable(XiRatio { qs, values }))
    } else {
        Ok(XiOutcome::NotSeparable { max_variation })
    }
}

/// Σ_α det F″_α at a phase point: the dissipation generated by Hamiltonian
/// noise functions.
pub fn hessian_dissipation(fs: &[PhaseField], q: f64, p: f64) -> f64 {
    fs.iter()
        .map(|f| {
            let h = f.hessian(q, p);
            h[0][0] * h[1][1] - h[0][1] * h[0][1]
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constants_model() -> PhaseSpaceModel {
        PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.2, 0.3).unwrap()
    }

    #[test]
    fn wiener_dilation_constants_case() {
        let (dil, system) = build_wiener_dilation(&constants_model(), 1.0, 1.0).unwrap();
        // W = 0.1 p², G = 0.15 q²
        assert_relative_eq!(dil.w_fn.eval_raw(2.0), 0.4, epsilon = 1e-14);
        assert_relative_eq!(dil.g_fn.eval_raw(2.0), 0.6, epsilon = 1e-14);
        // H = p²/2 + q²/2 + 0.1pq + 0.15qp
        let h = |q: f64, p: f64| 0.5 * p * p + 0.5 * q * q + 0.1 * p * q + 0.15 * q * p;
        for (q, p) in [(1.0, 1.0), (-0.5, 2.0), (0.3, -0.4)] {
            assert_relative_eq!(dil.hamiltonian.value(q, p), h(q, p), epsilon = 1e-13);
        }
        // Itô drift at (1,1) with e = 0 is the circuit field (1, -1.5)
        let (vq, vp) = system.ito_drift().eval(0.0, 1.0, 1.0);
        assert_relative_eq!(vq, 1.0, epsilon = 1e-14);
        assert_relative_eq!(vp, -1.5, epsilon = 1e-14);
        // diffusion column 1 at (q,p) = (2,3): (cW′(p), −q/c) = (0.6, −2)
        let (sq, sp) = system.diffusions()[0].eval(2.0, 3.0);
        assert_relative_eq!(sq, 0.6, epsilon = 1e-14);
        assert_relative_eq!(sp, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn wiener_dilation_without_dissipation_is_purely_hamiltonian() {
        let model = PhaseSpaceModel::constant_series(2.0, Some(1.0), 0.0, 0.0).unwrap();
        let (dil, system) = build_wiener_dilation(&model, 1.0, 1.0).unwrap();
        assert!(dil.w_fn.is_zero());
        assert!(dil.g_fn.is_zero());
        // F₁ = q²/2c, F₂ = p²/2ℓ
        assert_relative_eq!(dil.noise_functions[0].value(2.0, 5.0), 2.0, epsilon = 1e-14);
        assert_relative_eq!(dil.noise_functions[1].value(5.0, 2.0), 2.0, epsilon = 1e-14);
        let (vq, vp) = system.ito_drift().eval(0.0, 1.0, 1.0);
        assert_relative_eq!(vq, 0.5, epsilon = 1e-14); // p/L₀
        assert_relative_eq!(vp, -1.0, epsilon = 1e-14); // −Φ′_C
    }

    #[test]
    fn wiener_rejects_parallel_and_nonconstant_inductance() {
        let kin = crate::circuit::KineticData::from_constant_inductance(1.0).unwrap();
        let parallel = PhaseSpaceModel::new(
            kin,
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::zero(),
            crate::circuit::Dissipator::parallel(
                ScalarFunction::constant(0.2),
                ScalarFunction::constant(0.3),
            )
            .unwrap(),
        );
        assert!(matches!(
            build_wiener_dilation(&parallel, 1.0, 1.0),
            Err(CoreError::NonSeriesModel)
        ));

        let nonlinear = PhaseSpaceModel::new(
            crate::circuit::KineticData::from_inductance(ScalarFunction::polynomial(vec![
                1.0, 0.0, 1.0,
            ]))
            .unwrap(),
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::zero(),
            crate::circuit::Dissipator::series(
                ScalarFunction::constant(0.2),
                ScalarFunction::zero(),
            )
            .unwrap(),
        );
        assert!(matches!(
            build_wiener_dilation(&nonlinear, 1.0, 1.0),
            Err(CoreError::NonConstantInductance)
        ));
    }

    #[test]
    fn stratonovich_form_converts_to_the_circuit_ito_drift() {
        // The defining cancellation: strat_to_ito(J∇H, σ) equals the circuit
        // velocity field, checked on a grid to 1e-10.
        let (_, system) = build_wiener_dilation(&constants_model(), 1.0, 1.0).unwrap();
        let derived = crate::sde::strat_to_ito(
            system.strat_drift().clone(),
            system.diffusions(),
        );
        let grid = GridSpec::default();
        for (q, p) in grid.points() {
            let (aq, ap) = derived.eval(0.0, q, p);
            let (bq, bp) = system.ito_drift().eval(0.0, q, p);
            assert!((aq - bq).abs() < 1e-10, "vq mismatch at ({q},{p})");
            assert!((ap - bp).abs() < 1e-10, "vp mismatch at ({q},{p})");
        }
    }

    #[test]
    fn compact_and_componentwise_ito_drifts_agree() {
        // v = J∇H + ½Σ J F″ J ∇F must match the double-bracket component
        // form to 1e-12 (and both equal the stored drift).
        let (dil, system) = build_wiener_dilation(&constants_model(), 1.0, 1.0).unwrap();
        let grid = GridSpec::default();
        for (q, p) in grid.points() {
            let (hq, hp) = dil.hamiltonian.grad(q, p);
            let mut v = [hp, -hq]; // J∇H
            let mut v_comp = [hp, -hq];
            for f in &dil.noise_functions {
                let (fq, fp) = f.grad(q, p);
                let h = f.hessian(q, p);
                // J F″ J ∇F with J = [[0,1],[-1,0]]:
                // J F″ = [[h10, h11], [-h00, -h01]], then (J F″)(J∇F) with
                // J∇F = (fp, -fq)
                v[0] += 0.5 * (h[1][0] * fp + h[1][1] * -fq);
                v[1] += 0.5 * (-h[0][0] * fp - h[0][1] * -fq);
                // componentwise double-bracket form
                v_comp[0] += 0.5 * (fp * h[0][1] - fq * h[1][1]);
                v_comp[1] += 0.5 * (fq * h[0][1] - fp * h[0][0]);
            }
            assert!((v[0] - v_comp[0]).abs() < 1e-12);
            assert!((v[1] - v_comp[1]).abs() < 1e-12);
            let (sq, sp) = system.ito_drift().eval(0.0, q, p);
            assert!((v[0] - sq).abs() < 1e-10);
            assert!((v[1] - sp).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_covariation_identity() {
        // Σ σ^q σ^p = −(qW′(p) + pG′(q)) pointwise
        let (dil, system) = build_wiener_dilation(&constants_model(), 1.0, 1.0).unwrap();
        let wp = dil.w_fn.derivative();
        let gq = dil.g_fn.derivative();
        for (q, p) in GridSpec::default().points() {
            let cov: f64 = system
                .diffusions()
                .iter()
                .map(|s| {
                    let (a, b) = s.eval(q, p);
                    a * b
                })
                .sum();
            let target = -(q * wp.eval_raw(p) + p * gq.eval_raw(q));
            assert!((cov - target).abs() < 1e-12);
        }
    }

    #[test]
    fn symplectic_dilation_constants_case() {
        let (dil, system) = build_symplectic_dilation(&constants_model(), 1.0).unwrap();
        // ϱ(p) = 0.2p as F₁, μ(q) = 0.3q inside G₂ = −μ(q)
        assert_relative_eq!(dil.pairs[0].0.value(0.0, 2.0), 0.4, epsilon = 1e-14);
        assert_relative_eq!(dil.pairs[1].1.value(2.0, 0.0), -0.6, epsilon = 1e-14);
        // u = (0, −Ψ′_R(p) − pM(q)/L₀) = (0, −0.5p)
        for (q, p) in [(1.0, 1.0), (-0.7, 2.0)] {
            assert_relative_eq!(dil.u_q.value(q, p), 0.0, epsilon = 1e-14);
            assert_relative_eq!(dil.u_p.value(q, p), -0.5 * p, epsilon = 1e-14);
        }
        // noise columns follow the brackets: dq gets (𝕉/(ΓL₀)) dQ₁ + dQ₂,
        // dp gets {p,G₁} dP₁ + {p,G₂} dP₂ = dP₁ + μ′(q) dP₂
        let (q, p) = (1.3, -0.8);
        let cols: Vec<(f64, f64)> = system.diffusions().iter().map(|s| s.eval(q, p)).collect();
        assert_relative_eq!(cols[0].0, 0.2, epsilon = 1e-14); // Q₁ on q
        assert_relative_eq!(cols[0].1, 0.0, epsilon = 1e-14);
        assert_relative_eq!(cols[1].0, 0.0, epsilon = 1e-14); // P₁ on p
        assert_relative_eq!(cols[1].1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(cols[2].0, 1.0, epsilon = 1e-14); // Q₂ on q
        assert_relative_eq!(cols[2].1, 0.0, epsilon = 1e-14);
        assert_relative_eq!(cols[3].0, 0.0, epsilon = 1e-14); // P₂ on p
        assert_relative_eq!(cols[3].1, 0.3, epsilon = 1e-14);
        // Itô drift is the circuit field
        let (vq, vp) = system.ito_drift().eval(0.0, 1.0, 1.0);
        assert_relative_eq!(vq, 1.0, epsilon = 1e-14);
        assert_relative_eq!(vp, -1.5, epsilon = 1e-14);
        // pairings carry Γ
        assert_eq!(system.channels().pairings.len(), 2);
        assert_relative_eq!(system.channels().pairings[0].gamma, 1.0);
    }

    #[test]
    fn symplectic_generic_ito_drift_matches_circuit_field() {
        // from_pairs derives its Itô drift from the generator; for the
        // standard construction it must coincide with the circuit field.
        let model = constants_model();
        let (_, system) = build_symplectic_dilation(&model, 2.0).unwrap();
        let varrho = model.psi_r_prime().unwrap().scale(0.5);
        let mu = model
            .dissipator()
            .memristance
            .scale(0.5)
            .antiderivative();
        let coordinate = ScalarFunction::polynomial(vec![0.0, 1.0]);
        let h = PhaseField::of_p(ScalarFunction::polynomial(vec![0.0, 0.0, 0.5]))
            .add(&PhaseField::of_q(model.phi_c().clone()));
        let (_, generic) = SymplecticDilation::from_pairs(
            h,
            ScalarFunction::zero(),
            vec![
                (
                    PhaseField::of_p(varrho),
                    PhaseField::of_q(coordinate.scale(-1.0)),
                ),
                (
                    PhaseField::of_p(coordinate.clone()),
                    PhaseField::of_q(mu.scale(-1.0)),
                ),
            ],
            &["r", "m"],
            2.0,
        )
        .unwrap();
        for (q, p) in GridSpec::default().points() {
            let (aq, ap) = generic.ito_drift().eval(0.0, q, p);
            let (bq, bp) = system.ito_drift().eval(0.0, q, p);
            assert!((aq - bq).abs() < 1e-12);
            assert!((ap - bp).abs() < 1e-12);
        }
    }

    #[test]
    fn lc_example_single_pair() {
        // F = p, G = −q on the LC Hamiltonian: u = (0, −Γp), unit noise on
        // both coordinates, drift (p/L₀, −q/C₀ − Γp + e).
        let coordinate = ScalarFunction::polynomial(vec![0.0, 1.0]);
        let h = PhaseField::of_p(ScalarFunction::polynomial(vec![0.0, 0.0, 0.5]))
            .add(&PhaseField::of_q(ScalarFunction::polynomial(vec![
                0.0, 0.0, 0.5,
            ])));
        let gamma = 0.7;
        let (dil, system) = SymplecticDilation::from_pairs(
            h,
            ScalarFunction::zero(),
            vec![(
                PhaseField::of_p(coordinate.clone()),
                PhaseField::of_q(coordinate.scale(-1.0)),
            )],
            &["lc"],
            gamma,
        )
        .unwrap();
        let (q, p) = (0.4, -1.1);
        assert_relative_eq!(dil.u_q.value(q, p), 0.0, epsilon = 1e-14);
        assert_relative_eq!(dil.u_p.value(q, p), -gamma * p, epsilon = 1e-14);
        let (vq, vp) = system.ito_drift().eval(0.0, q, p);
        assert_relative_eq!(vq, p, epsilon = 1e-14);
        assert_relative_eq!(vp, -q - gamma * p, epsilon = 1e-14);
        let cols: Vec<(f64, f64)> = system.diffusions().iter().map(|s| s.eval(q, p)).collect();
        assert_eq!(cols, vec![(1.0, 0.0), (0.0, 1.0)]);
        // dq dp covariation vanishes channelwise
        let cov: f64 = cols.iter().map(|(a, b)| a * b).sum();
        assert_relative_eq!(cov, 0.0, epsilon = 1e-15);
        // γ = Γ{F,G} = Γ
        assert_relative_eq!(dil.gamma(q, p), gamma, epsilon = 1e-14);
    }

    #[test]
    fn symplectic_gamma_matches_circuit_dissipation() {
        // Γ Σ{F_α,G_α} = (𝕉(p) + M(q))/L₀ on a grid to 1e-12, and the full
        // dissipation formula {F_q,F_p} + {G_q,G_p} + Γ{F,G} reduces to the
        // same value for these generator choices.
        let kin = crate::circuit::KineticData::from_constant_inductance(1.0).unwrap();
        let model = PhaseSpaceModel::new(
            kin,
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::zero(),
            crate::circuit::Dissipator::series(
                ScalarFunction::polynomial(vec![0.2, 0.0, 0.6]),
                ScalarFunction::polynomial(vec![0.3, 0.1])
                    .with_domain(crate::scalar::Interval::new(-3.0, 3.0)),
            )
            .unwrap(),
        );
        let gamma = 1.4;
        let (dil, _) = build_symplectic_dilation(&model, gamma).unwrap();
        for (q, p) in GridSpec::default().points() {
            let target = model.dissipation(q, p).unwrap();
            assert!((dil.gamma(q, p) - target).abs() < 1e-12);
            let mut full = 0.0;
            for (f, g) in &dil.pairs {
                let fq = f.d_dq();
                let fp = f.d_dp();
                let gq = g.d_dq();
                let gp = g.d_dp();
                full += poisson_bracket(&fq, &fp, q, p)
                    + poisson_bracket(&gq, &gp, q, p)
                    + gamma * poisson_bracket(f, g, q, p);
            }
            assert!((full - target).abs() < 1e-12);
        }
    }

    #[test]
    fn u_field_examples() {
        let coordinate = ScalarFunction::polynomial(vec![0.0, 1.0]);
        let f = vec![PhaseField::of_p(coordinate.clone())];
        let g = vec![PhaseField::of_q(coordinate.scale(-1.0))];
        // corollary: u = (0, −p)
        let (uq, up) = u_field(&f, &g, 1.0, UForm::Corollary).unwrap();
        assert_relative_eq!(uq.value(1.3, 0.8), 0.0, epsilon = 1e-14);
        assert_relative_eq!(up.value(1.3, 0.8), -0.8, epsilon = 1e-14);
        // particular: u₀ = (−q/2, −p/2), divergence −1 = −Γ{F,G}
        let (u0q, u0p) = u_field(&f, &g, 1.0, UForm::Particular).unwrap();
        assert_relative_eq!(u0q.value(1.3, 0.8), -0.65, epsilon = 1e-14);
        assert_relative_eq!(u0p.value(1.3, 0.8), -0.4, epsilon = 1e-14);
        // both satisfy the divergence equation on a grid
        for (uq, up) in [(&uq, &up), (&u0q, &u0p)] {
            let div_q = uq.d_dq();
            let div_p = up.d_dp();
            for (q, p) in GridSpec::default().points() {
                let div = div_q.value(q, p) + div_p.value(q, p);
                let target = -poisson_bracket(&f[0], &g[0], q, p);
                assert!((div - target).abs() < 1e-12);
            }
        }
        // F = G = 0 gives u = 0
        let (zq, zp) = u_field(
            &[PhaseField::zero()],
            &[PhaseField::zero()],
            1.0,
            UForm::Corollary,
        )
        .unwrap();
        assert!(zq.is_zero() && zp.is_zero());
    }

    #[test]
    fn pde_residuals_examples() {
        let model = constants_model();
        let (dil, _) = build_wiener_dilation(&model, 1.0, 1.0).unwrap();
        let grid = GridSpec::default();
        let vd = |q: f64, p: f64| model.dissipator_voltage(q, p).unwrap();

        // The explicit construction satisfies the Hamiltonian-shifted
        // identities exactly...
        let (r0, rv) = shifted_pde_residuals(&dil.noise_functions, vd, &grid);
        assert!(r0 < 1e-10, "closure residual {r0}");
        assert!(rv < 1e-10, "voltage residual {rv}");

        // ...and misses the bare ones by exactly the Hamiltonian shift:
        // the bare closure defect is qW″(p) + G′(q) = 0.5 q and the bare
        // voltage defect is 𝕍_D itself.
        let (r0, rv) = pde_residuals(&dil.noise_functions, vd, &grid);
        assert_relative_eq!(r0, 1.0, epsilon = 1e-12); // max |0.5 q| = 1
        let max_vd = grid
            .points()
            .iter()
            .map(|&(q, p)| vd(q, p).abs())
            .fold(0.0f64, f64::max);
        assert_relative_eq!(rv, max_vd, epsilon = 1e-12);

        // F = qp alone: the bare closure identity fails with max|q| = 2 on
        // the default grid.
        let f_qp = PhaseField::product(
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::polynomial(vec![0.0, 1.0]),
        );
        let (r0, _) = pde_residuals(&[f_qp], |_, _| 0.0, &grid);
        assert_relative_eq!(r0, 2.0, epsilon = 1e-12);

        // F = 0 with 𝕍_D = 0: everything vanishes
        let (r0, rv) = pde_residuals(&[PhaseField::zero()], |_, _| 0.0, &grid);
        assert_eq!((r0, rv), (0.0, 0.0));
        let (r0, rv) = shifted_pde_residuals(&[PhaseField::zero()], |_, _| 0.0, &grid);
        assert_eq!((r0, rv), (0.0, 0.0));
    }

    #[test]
    fn xi_condition_examples() {
        struct Closure {
            value: fn(f64, f64) -> f64,
            grad: fn(f64, f64) -> (f64, f64),
        }
        impl PhaseFunction for Closure {
            fn value(&self, q: f64, p: f64) -> f64 {
                (self.value)(q, p)
            }
            fn grad(&self, q: f64, p: f64) -> (f64, f64) {
                (self.grad)(q, p)
            }
            fn hessian(&self, _: f64, _: f64) -> [[f64; 2]; 2] {
                unimplemented!()
            }
        }

        let grid = GridSpec {
            q_lo: -1.0,
            q_hi: 1.0,
            p_lo: -1.0,
            p_hi: 1.0,
            nq: 11,
            np: 11,
        };

        // F = q²/2 + W(p) with W = 0.1p²: ratio q/W′(p) depends on p
        let (dil, _) = build_wiener_dilation(&constants_model(), 1.0, 1.0).unwrap();
        let shifted = GridSpec {
            p_lo: 0.5,
            p_hi: 2.0,
            q_lo: 0.5,
            q_hi: 2.0,
            ..grid
        };
        match xi_condition(&dil.noise_functions[0], &shifted).unwrap() {
            XiOutcome::NotSeparable { max_variation } => assert!(max_variation > 1e-3),
            other => panic!("expected p-dependence, got {other:?}"),
        }

        // F = e^{λq + μp}: ratio λ/μ is constant
        let exp_field = Closure {
            value: |q, p| (0.5 * q + 0.7 * p).exp(),
            grad: |q, p| {
                let e = (0.5 * q + 0.7 * p).exp();
                (0.5 * e, 0.7 * e)
            },
        };
        match xi_condition(&exp_field, &grid).unwrap() {
            XiOutcome::Separable(xi) => {
                assert_relative_eq!(xi.eval(0.3), 0.5 / 0.7, epsilon = 1e-10)
            }
            other => panic!("expected separable ratio, got {other:?}"),
        }

        // F = f(q) only: ∂F/∂p vanishes
        let q_only = Closure {
            value: |q, _| q * q,
            grad: |q, _| (2.0 * q, 0.0),
        };
        assert!(xi_condition(&q_only, &grid).is_err());
    }

    #[test]
    fn hessian_dissipation_examples() {
        let (dil, _) = build_wiener_dilation(&constants_model(), 1.0, 1.0).unwrap();
        // det F₁″ + det F₂″ = W″ + G″ = 0.2 + 0.3 = γ
        assert_relative_eq!(
            hessian_dissipation(&dil.noise_functions, 0.8, -1.1),
            0.5,
            epsilon = 1e-13
        );
        let half = ScalarFunction::polynomial(vec![0.0, 0.0, 0.5]);
        let circle = PhaseField::of_q(half.clone()).add(&PhaseField::of_p(half));
        assert_relative_eq!(hessian_dissipation(&[circle], 3.0, -2.0), 1.0, epsilon = 1e-14);
        let saddle = PhaseField::product(
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::polynomial(vec![0.0, 1.0]),
        );
        assert_relative_eq!(
            hessian_dissipation(&[saddle], 3.0, -2.0),
            -1.0,
            epsilon = 1e-14
        );
    }
}
