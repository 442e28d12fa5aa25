//! Idealized circuit elements and the deterministic phase-space equations.
//!
//! A single-loop circuit splits into an energy-storing part described by a
//! Hamiltonian H(q,p,t) = 𝕂(p) + Φ_C(q) − e(t)q and a dissipative part
//! described by a voltage 𝕍_D(q,p). The circuit equations are
//!
//! ```text
//! q̇ = 𝕀(p),   ṗ = −Φ′_C(q) − 𝕍_D(q,p) + e(t)
//! ```
//!
//! with dissipation γ(q,p) = ∂𝕍_D/∂p ≥ 0 for passive elements.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::{Interval, ScalarFunction};

const PASSIVITY_SAMPLES: usize = 2048;
// Characteristics touching zero at a domain endpoint may evaluate a few ulps
// negative; that is not a passivity violation.
const PASSIVITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Inductor,
    Capacitor,
    Resistor,
    Memristor,
}

/// An idealized element together with its characteristic: L(I), C(q), R(I)
/// or M(q).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub characteristic: ScalarFunction,
}

impl Element {
    /// Validates passivity on the characteristic's domain: R ≥ 0, M ≥ 0,
    /// L > 0, C > 0 (checked on a dense sample grid).
    pub fn new(kind: ElementKind, characteristic: ScalarFunction) -> Result<Self> {
        let min = characteristic.sampled_min(PASSIVITY_SAMPLES);
        match kind {
            ElementKind::Inductor if min <= 0.0 => {
                return Err(CoreError::PassivityViolation(format!(
                    "inductance must be strictly positive, found min {min}"
                )));
            }
            ElementKind::Capacitor if min <= 0.0 => {
                return Err(CoreError::PassivityViolation(format!(
                    "capacitance must be strictly positive, found min {min}"
                )));
            }
            ElementKind::Resistor if min < -PASSIVITY_TOL => {
                return Err(CoreError::PassivityViolation(format!(
                    "resistance must be nonnegative, found min {min}"
                )));
            }
            ElementKind::Memristor if min < -PASSIVITY_TOL => {
                return Err(CoreError::PassivityViolation(format!(
                    "memristance must be nonnegative, found min {min}"
                )));
            }
            _ => {}
        }
        Ok(Element {
            kind,
            characteristic,
        })
    }
}

/// Kinetic (inductive) data: K(I) with K″ = L, its Legendre transform
/// 𝕂(p) = p·𝕀(p) − K(𝕀(p)) and the current map 𝕀 = (K′)⁻¹.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KineticData {
    k: ScalarFunction,
    k_prime: ScalarFunction,
    inductance: ScalarFunction,
    constant_l0: Option<f64>,
}

const INVERSION_TOL: f64 = 1e-12;

/// Legendre transform of the kinetic function: 𝕂(p) = sup_I { pI − K(I) }.
///
/// Requires K twice differentiable with K″ = L > 0 on the domain; the
/// current map 𝕀 is closed form for quadratic K and a monotone root-find
/// (tolerance 1e−12) otherwise.
pub fn legendre(k: ScalarFunction, inductance: ScalarFunction) -> Result<KineticData> {
    let k_prime = k.derivative();
    let k_second = k_prime.derivative();
    // K″ must coincide with L and stay positive: sampled check.
    let dom = k.domain().clamped();
    for i in 0..=256 {
        let x = dom.lo + (dom.hi - dom.lo) * i as f64 / 256.0;
        let ks = k_second.eval_raw(x);
        let lv = inductance.eval_raw(x);
        if (ks - lv).abs() > 1e-9 * (1.0 + lv.abs()) {
            return Err(CoreError::InvalidConfig(format!(
                "K'' and L disagree at I={x}: {ks} vs {lv}"
            )));
        }
        if lv <= 0.0 {
            return Err(CoreError::PassivityViolation(format!(
                "K' is non-monotone: K''({x}) = {lv} <= 0"
            )));
        }
    }
    let constant_l0 = inductance.as_constant();
    Ok(KineticData {
        k,
        k_prime,
        inductance,
        constant_l0,
    })
}

impl KineticData {
    /// Constant-L₀ kinetic data with K(I) = ½L₀I².
    pub fn from_constant_inductance(l0: f64) -> Result<KineticData> {
        if !(l0 > 0.0) {
            return Err(CoreError::PassivityViolation(format!(
                "inductance must be strictly positive, found {l0}"
            )));
        }
        legendre(
            ScalarFunction::polynomial(vec![0.0, 0.0, 0.5 * l0]),
            ScalarFunction::constant(l0),
        )
    }

    /// K(I) = ∬ L with K(0) = K′(0) = 0.
    pub fn from_inductance(inductance: ScalarFunction) -> Result<KineticData> {
        let k = inductance.antiderivative().antiderivative();
        legendre(k, inductance)
    }

    pub fn constant_l0(&self) -> Option<f64> {
        self.constant_l0
    }

    pub fn k(&self) -> &ScalarFunction {
        &self.k
    }

    pub fn inductance(&self) -> &ScalarFunction {
        &self.inductance
    }

    /// The current map 𝕀(p), inverting K′.
    pub fn current(&self, p: f64) -> Result<f64> {
        if let Some(l0) = self.constant_l0 {
            return Ok(p / l0);
        }
        // K′ is strictly increasing; bracket then bisect with a Newton polish.
        let dom = self.k.domain().clamped();
        let (mut lo, mut hi) = (dom.lo, dom.hi);
        let flo = self.k_prime.eval_raw(lo) - p;
        let fhi = self.k_prime.eval_raw(hi) - p;
        if flo > 0.0 || fhi < 0.0 {
            return Err(CoreError::DomainViolation {
                value: p,
                lo: self.k_prime.eval_raw(lo),
                hi: self.k_prime.eval_raw(hi),
            });
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let f = self.k_prime.eval_raw(mid) - p;
            if f.abs() < INVERSION_TOL || (hi - lo) < INVERSION_TOL * mid.abs().max(1.0) {
                break;
            }
            if f < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Newton polish sharpens the root to full precision.
        for _ in 0..4 {
            let f = self.k_prime.eval_raw(mid) - p;
            let df = self.inductance.eval_raw(mid);
            if df > 0.0 {
                let next = mid - f / df;
                if next.is_finite() && next >= lo - 1.0 && next <= hi + 1.0 {
                    mid = next;
                }
            }
        }
        Ok(mid)
    }

    /// Legendre transform 𝕂(p) = p·𝕀(p) − K(𝕀(p)).
    pub fn kinetic_energy(&self, p: f64) -> Result<f64> {
        if let Some(l0) = self.constant_l0 {
            return Ok(p * p / (2.0 * l0));
        }
        let i = self.current(p)?;
        Ok(p * i - self.k.eval_raw(i))
    }

    /// 𝕃(p) = L(𝕀(p)).
    pub fn inductance_at(&self, p: f64) -> Result<f64> {
        let i = self.current(p)?;
        Ok(self.inductance.eval_raw(i))
    }

    /// 𝕀(p) as a closed-form function, available when L is constant.
    pub fn current_map(&self) -> Option<ScalarFunction> {
        self.constant_l0
            .map(|l0| ScalarFunction::polynomial(vec![0.0, 1.0 / l0]))
    }
}

/// Capacitor potential Φ_C with Φ′_C(q) = ∫ dq / C(q), Φ_C(0) = 0.
///
/// Only constant capacitance has a representable reciprocal; for general
/// C(q) supply Φ′_C directly via [`capacitor_potential_from_voltage`].
pub fn capacitor_potential(c: &ScalarFunction) -> Result<ScalarFunction> {
    match c.as_constant() {
        Some(c0) if c0 > 0.0 => {
            Ok(ScalarFunction::polynomial(vec![0.0, 0.0, 0.5 / c0]).with_domain(c.domain()))
        }
        Some(c0) => Err(CoreError::PassivityViolation(format!(
            "capacitance must be strictly positive, found {c0}"
        ))),
        None => Err(CoreError::NoClosedForm(
            "reciprocal of a non-constant capacitance is not representable; \
             supply the capacitor voltage Φ'_C(q) directly"
                .into(),
        )),
    }
}

/// Φ_C from a user-supplied capacitor voltage Φ′_C(q).
pub fn capacitor_potential_from_voltage(phi_prime: &ScalarFunction) -> ScalarFunction {
    phi_prime.antiderivative()
}

/// Resistor potential Ψ′_R(p) = 𝒟′_R(𝕀(p)) with 𝒟′_R(I) = ∫ R(I) dI,
/// in closed form. Requires a constant inductance so that 𝕀 is linear.
pub fn resistor_potential(r: &ScalarFunction, kinetic: &KineticData) -> Result<ScalarFunction> {
    let l0 = kinetic.constant_l0().ok_or_else(|| {
        CoreError::NoClosedForm(
            "closed-form resistor potential requires constant inductance".into(),
        )
    })?;
    Ok(r.antiderivative().compose_linear(1.0 / l0))
}

/// The dissipative component: resistor and memristor in series (voltages
/// add) or in parallel (reciprocal voltages add).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dissipator {
    pub resistance: ScalarFunction,
    pub memristance: ScalarFunction,
    /// 𝒟′_R(I) = ∫ R dI, cached.
    d_r_prime: ScalarFunction,
    pub parallel: bool,
}

impl Dissipator {
    pub fn series(resistance: ScalarFunction, memristance: ScalarFunction) -> Result<Self> {
        Self::build(resistance, memristance, false)
    }

    pub fn parallel(resistance: ScalarFunction, memristance: ScalarFunction) -> Result<Self> {
        Self::build(resistance, memristance, true)
    }

    fn build(resistance: ScalarFunction, memristance: ScalarFunction, parallel: bool) -> Result<Self> {
        let r = Element::new(ElementKind::Resistor, resistance)?;
        let m = Element::new(ElementKind::Memristor, memristance)?;
        let d_r_prime = r.characteristic.antiderivative();
        Ok(Dissipator {
            resistance: r.characteristic,
            memristance: m.characteristic,
            d_r_prime,
            parallel,
        })
    }
}

/// The phase-space model of a single-loop circuit: kinetic data, capacitor
/// potential, drive and dissipator.
#[derive(Clone, Debug)]
pub struct PhaseSpaceModel {
    kinetic: KineticData,
    phi_c: ScalarFunction,
    phi_c_prime: ScalarFunction,
    drive: ScalarFunction,
    dissipator: Dissipator,
}

impl PhaseSpaceModel {
    /// Assemble a model from a capacitor voltage Φ′_C(q) (may be zero for a
    /// capacitor-free loop).
    pub fn new(
        kinetic: KineticData,
        phi_c_prime: ScalarFunction,
        drive: ScalarFunction,
        dissipator: Dissipator,
    ) -> Self {
        let phi_c = phi_c_prime.antiderivative();
        PhaseSpaceModel {
            kinetic,
            phi_c,
            phi_c_prime,
            drive,
            dissipator,
        }
    }

    /// Constant-coefficient series circuit, the workhorse test model.
    pub fn constant_series(l0: f64, c0: Option<f64>, r0: f64, m0: f64) -> Result<Self> {
        let kinetic = KineticData::from_constant_inductance(l0)?;
        let phi_prime = match c0 {
            Some(c) if c > 0.0 => ScalarFunction::polynomial(vec![0.0, 1.0 / c]),
            Some(c) => {
                return Err(CoreError::PassivityViolation(format!(
                    "capacitance must be strictly positive, found {c}"
                )))
            }
            None => ScalarFunction::zero(),
        };
        let dissipator = Dissipator::series(
            ScalarFunction::constant(r0),
            ScalarFunction::constant(m0),
        )?;
        Ok(PhaseSpaceModel::new(
            kinetic,
            phi_prime,
            ScalarFunction::zero(),
            dissipator,
        ))
    }

    pub fn with_drive(mut self, drive: ScalarFunction) -> Self {
        self.drive = drive;
        self
    }

    pub fn kinetic(&self) -> &KineticData {
        &self.kinetic
    }

    pub fn phi_c(&self) -> &ScalarFunction {
        &self.phi_c
    }

    pub fn phi_c_prime(&self) -> &ScalarFunction {
        &self.phi_c_prime
    }

    pub fn drive(&self) -> &ScalarFunction {
        &self.drive
    }

    pub fn dissipator(&self) -> &Dissipator {
        &self.dissipator
    }

    pub fn is_series(&self) -> bool {
        !self.dissipator.parallel
    }

    pub fn constant_l0(&self) -> Option<f64> {
        self.kinetic.constant_l0()
    }

    /// Closed-form resistor potential Ψ′_R(p) (constant inductance only).
    pub fn psi_r_prime(&self) -> Result<ScalarFunction> {
        resistor_potential(&self.dissipator.resistance, &self.kinetic)
    }

    /// Resistive branch voltage 𝕍_R(p) = 𝒟′_R(𝕀(p)).
    pub fn resistive_voltage(&self, p: f64) -> Result<f64> {
        let i = self.kinetic.current(p)?;
        Ok(self.dissipator.d_r_prime.eval_raw(i))
    }

    /// Memristive branch voltage 𝕍_M(q,p) = M(q)·𝕀(p).
    pub fn memristive_voltage(&self, q: f64, p: f64) -> Result<f64> {
        let i = self.kinetic.current(p)?;
        Ok(self.dissipator.memristance.eval_raw(q) * i)
    }

    /// Total dissipator voltage 𝕍_D(q,p). A parallel combination where
    /// either branch voltage vanishes is zero (the continuous limit).
    pub fn dissipator_voltage(&self, q: f64, p: f64) -> Result<f64> {
        let vr = self.resistive_voltage(p)?;
        let vm = self.memristive_voltage(q, p)?;
        if self.dissipator.parallel {
            if vr == 0.0 || vm == 0.0 {
                Ok(0.0)
            } else {
                Ok(vr * vm / (vr + vm))
            }
        } else {
            Ok(vr + vm)
        }
    }

    /// The deterministic circuit velocity field
    /// (q̇, ṗ) = (𝕀(p), −Φ′_C(q) − 𝕍_D(q,p) + e(t)).
    pub fn drift(&self, t: f64, q: f64, p: f64) -> Result<(f64, f64)> {
        self.phi_c_prime.eval(q)?;
        let i = self.kinetic.current(p)?;
        let vd = self.dissipator_voltage(q, p)?;
        Ok((
            i,
            -self.phi_c_prime.eval_raw(q) - vd + self.drive.eval_raw(t),
        ))
    }

    /// Dissipation γ(q,p) = ∂𝕍_D/∂p: closed form
    /// (𝕉(p) + M(q))/𝕃(p) for series models, a central finite difference
    /// otherwise. Negative values are reported as passivity violations.
    pub fn dissipation(&self, q: f64, p: f64) -> Result<f64> {
        let gamma = if self.dissipator.parallel {
            let h = 1e-6 * p.abs().max(1.0);
            (self.dissipator_voltage(q, p + h)? - self.dissipator_voltage(q, p - h)?) / (2.0 * h)
        } else {
            self.gamma_resistive(p)? + self.gamma_memristive(q, p)?
        };
        if gamma < -1e-12 {
            return Err(CoreError::PassivityViolation(format!(
                "negative dissipation {gamma} at (q,p)=({q},{p})"
            )));
        }
        Ok(gamma)
    }

    /// γ_R(p) = 𝕉(p)/𝕃(p) for series models.
    pub fn gamma_resistive(&self, p: f64) -> Result<f64> {
        let i = self.kinetic.current(p)?;
        let r = self.dissipator.resistance.eval_raw(i);
        let l = self.kinetic.inductance.eval_raw(i);
        Ok(r / l)
    }

    /// γ_M(q,p) = M(q)/𝕃(p) for series models.
    pub fn gamma_memristive(&self, q: f64, p: f64) -> Result<f64> {
        let i = self.kinetic.current(p)?;
        let l = self.kinetic.inductance.eval_raw(i);
        Ok(self.dissipator.memristance.eval_raw(q) / l)
    }

    /// Energy H(q,p,t) = 𝕂(p) + Φ_C(q) − e(t)·q.
    pub fn energy(&self, t: f64, q: f64, p: f64) -> Result<f64> {
        self.phi_c.eval(q)?;
        Ok(self.kinetic.kinetic_energy(p)? + self.phi_c.eval_raw(q) - self.drive.eval_raw(t) * q)
    }

    /// Resonant frequency ω₀ = (L₀C₀)^{−1/2} for constant-coefficient loops.
    pub fn resonant_frequency(&self) -> Option<f64> {
        let l0 = self.kinetic.constant_l0()?;
        let dphi = self.phi_c_prime.poly_coeffs()?;
        // Φ′_C = q/C₀ means coefficients [0, 1/C₀]
        if dphi.len() == 2 && dphi[0] == 0.0 && dphi[1] > 0.0 {
            Some((dphi[1] / l0).sqrt())
        } else {
            None
        }
    }
}

/// The deterministic circuit flow as a drift field, valid for any model
/// (nonlinear inductance and parallel dissipators included). Evaluation
/// outside the kinetic domain yields non-finite values, which the
/// integrators report as step failures.
#[derive(Clone, Debug)]
pub struct ModelDriftField {
    model: PhaseSpaceModel,
}

impl ModelDriftField {
    pub fn new(model: PhaseSpaceModel) -> Self {
        ModelDriftField { model }
    }
}

impl crate::field::DriftField for ModelDriftField {
    fn eval(&self, t: f64, q: f64, p: f64) -> (f64, f64) {
        self.model
            .drift(t, q, p)
            .unwrap_or((f64::NAN, f64::NAN))
    }

    fn jacobian(&self, t: f64, q: f64, p: f64) -> [[f64; 2]; 2] {
        let hq = 1e-6 * q.abs().max(1.0);
        let hp = 1e-6 * p.abs().max(1.0);
        let (aq, ap) = self.eval(t, q + hq, p);
        let (bq, bp) = self.eval(t, q - hq, p);
        let (cq, cp) = self.eval(t, q, p + hp);
        let (dq, dp) = self.eval(t, q, p - hp);
        [
            [(aq - bq) / (2.0 * hq), (cq - dq) / (2.0 * hp)],
            [(ap - bp) / (2.0 * hq), (cp - dp) / (2.0 * hp)],
        ]
    }
}

/// Serializable mirror of [`PhaseSpaceModel`]; the exact field names of the
/// JSON document are fixed in `docs/formats.md`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelSpec {
    pub inductance: ScalarFunction,
    /// Capacitor voltage Φ′_C(q).
    pub capacitor_voltage: ScalarFunction,
    pub resistance: ScalarFunction,
    pub memristance: ScalarFunction,
    pub drive: ScalarFunction,
    pub parallel_dissipator: bool,
    pub constant_l0: Option<f64>,
    pub domain: Interval,
}

impl PhaseSpaceModel {
    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            inductance: self.kinetic.inductance.clone(),
            capacitor_voltage: self.phi_c_prime.clone(),
            resistance: self.dissipator.resistance.clone(),
            memristance: self.dissipator.memristance.clone(),
            drive: self.drive.clone(),
            parallel_dissipator: self.dissipator.parallel,
            constant_l0: self.kinetic.constant_l0(),
            domain: self.kinetic.inductance.domain(),
        }
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<PhaseSpaceModel> {
        let kinetic = KineticData::from_inductance(spec.inductance.clone())?;
        let dissipator = if spec.parallel_dissipator {
            Dissipator::parallel(spec.resistance.clone(), spec.memristance.clone())?
        } else {
            Dissipator::series(spec.resistance.clone(), spec.memristance.clone())?
        };
        Ok(PhaseSpaceModel::new(
            kinetic,
            spec.capacitor_voltage.clone(),
            spec.drive.clone(),
            dissipator,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_spec())?)
    }

    pub fn from_json(text: &str) -> Result<PhaseSpaceModel> {
        let spec: ModelSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Independent oracle for the current map: bisection on K'(I) - p = 0,
    // run to 1e-12 before the expected value below was frozen.
    fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn legendre_quadratic_is_closed_form() {
        // K = ½L₀I², L₀ = 1: 𝕀(p) = p, 𝕂(p) = p²/2
        let kin = KineticData::from_constant_inductance(1.0).unwrap();
        assert_relative_eq!(kin.current(0.7).unwrap(), 0.7, epsilon = 1e-15);
        assert_relative_eq!(kin.kinetic_energy(0.7).unwrap(), 0.245, epsilon = 1e-15);

        // L₀ = 2, p = 3: 𝕀 = 1.5, 𝕂 = 2.25
        let kin2 = KineticData::from_constant_inductance(2.0).unwrap();
        assert_relative_eq!(kin2.current(3.0).unwrap(), 1.5, epsilon = 1e-15);
        assert_relative_eq!(kin2.kinetic_energy(3.0).unwrap(), 2.25, epsilon = 1e-15);
    }

    #[test]
    fn legendre_nonlinear_inverts_k_prime() {
        // K = ½I² + I⁴/12 so L(I) = 1 + I²; at p = 1 the current solves
        // I + I³/3 = 1. Frozen from the bisection oracle:
        let expected = 0.817_731_673_886_823_5;
        let oracle = bisect_root(|i| i + i * i * i / 3.0 - 1.0, 0.0, 1.0);
        assert_relative_eq!(oracle, expected, epsilon = 1e-12);

        let k = ScalarFunction::polynomial(vec![0.0, 0.0, 0.5, 0.0, 1.0 / 12.0])
            .with_domain(Interval::new(-10.0, 10.0));
        let l = ScalarFunction::polynomial(vec![1.0, 0.0, 1.0]).with_domain(Interval::new(-10.0, 10.0));
        let kin = legendre(k, l).unwrap();
        assert_relative_eq!(kin.current(1.0).unwrap(), expected, epsilon = 1e-11);
    }

    #[test]
    fn legendre_identity_holds_on_a_grid() {
        // 𝕂(K′(I)) + K(I) = I·K′(I)
        let k = ScalarFunction::polynomial(vec![0.0, 0.0, 0.5, 0.0, 1.0 / 12.0])
            .with_domain(Interval::new(-10.0, 10.0));
        let l = ScalarFunction::polynomial(vec![1.0, 0.0, 1.0]).with_domain(Interval::new(-10.0, 10.0));
        let kp = k.derivative();
        let kin = legendre(k.clone(), l).unwrap();
        for i in 0..=40 {
            let cur = -2.0 + 0.1 * i as f64;
            let p = kp.eval_raw(cur);
            let lhs = kin.kinetic_energy(p).unwrap() + k.eval_raw(cur);
            assert_relative_eq!(lhs, cur * p, epsilon = 1e-10, max_relative = 1e-10);
        }
    }

    #[test]
    fn non_monotone_kinetic_is_rejected() {
        // L(I) = 1 - I² goes negative on the domain
        let l = ScalarFunction::polynomial(vec![1.0, 0.0, -1.0]).with_domain(Interval::new(-2.0, 2.0));
        let k = l.antiderivative().antiderivative();
        assert!(matches!(
            legendre(k, l),
            Err(CoreError::PassivityViolation(_))
        ));
    }

    #[test]
    fn capacitor_potential_examples() {
        // C₀ = 1 → Φ_C = q²/2
        let phi = capacitor_potential(&ScalarFunction::constant(1.0)).unwrap();
        assert_relative_eq!(phi.eval_raw(2.0), 2.0, epsilon = 1e-15);
        // C₀ = 0.5, q = 2 → Φ_C = 4
        let phi = capacitor_potential(&ScalarFunction::constant(0.5)).unwrap();
        assert_relative_eq!(phi.eval_raw(2.0), 4.0, epsilon = 1e-15);
        // user-supplied Φ′_C = q + 0.1 q³ → Φ_C = q²/2 + 0.025 q⁴
        let phi = capacitor_potential_from_voltage(&ScalarFunction::polynomial(vec![
            0.0, 1.0, 0.0, 0.1,
        ]));
        assert_eq!(phi.poly_coeffs().unwrap(), vec![0.0, 0.0, 0.5, 0.0, 0.025]);
        // non-constant C is not representable
        assert!(matches!(
            capacitor_potential(&ScalarFunction::polynomial(vec![1.0, 1.0])),
            Err(CoreError::NoClosedForm(_))
        ));
    }

    #[test]
    fn resistor_potential_examples() {
        // R₀ = 0.2, L₀ = 1 → Ψ′_R(p) = 0.2 p
        let kin = KineticData::from_constant_inductance(1.0).unwrap();
        let psi = resistor_potential(&ScalarFunction::constant(0.2), &kin).unwrap();
        assert_relative_eq!(psi.eval_raw(1.0), 0.2, epsilon = 1e-15);
        // R = 0.2 + 0.6 I², L₀ = 1, p = 1 → ∫R dI = 0.2I + 0.2I³ → 0.4
        let psi = resistor_potential(
            &ScalarFunction::polynomial(vec![0.2, 0.0, 0.6]),
            &kin,
        )
        .unwrap();
        assert_relative_eq!(psi.eval_raw(1.0), 0.4, epsilon = 1e-15);
        // R₀ = 0.2, L₀ = 2, p = 1 → R₀ p / L₀ = 0.1
        let kin2 = KineticData::from_constant_inductance(2.0).unwrap();
        let psi = resistor_potential(&ScalarFunction::constant(0.2), &kin2).unwrap();
        assert_relative_eq!(psi.eval_raw(1.0), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn drift_field_examples() {
        // constants (1, 1, 0.2, 0.3), e = 0, at (1,1): (1, -1.5)
        let model = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.2, 0.3).unwrap();
        let (vq, vp) = model.drift(0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(vq, 1.0, epsilon = 1e-15);
        assert_relative_eq!(vp, -1.5, epsilon = 1e-15);

        // conservative LC: R = M = 0 at (0, p₀): (p₀/L₀, 0)
        let lc = PhaseSpaceModel::constant_series(2.0, Some(1.0), 0.0, 0.0).unwrap();
        let (vq, vp) = lc.drift(0.0, 0.0, 0.8).unwrap();
        assert_relative_eq!(vq, 0.4, epsilon = 1e-15);
        assert_relative_eq!(vp, 0.0, epsilon = 1e-15);

        // drive only: e(t) = sin t at t = π/2, (q,p) = (0,0): (0, 1)
        let driven = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.0, 0.0)
            .unwrap()
            .with_drive(ScalarFunction::sinusoid(1.0, 1.0, 0.0));
        let (vq, vp) = driven.drift(std::f64::consts::FRAC_PI_2, 0.0, 0.0).unwrap();
        assert_relative_eq!(vq, 0.0, epsilon = 1e-15);
        assert_relative_eq!(vp, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dissipation_examples() {
        // (R₀ + M₀)/L₀ = 0.5 everywhere
        let model = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.2, 0.3).unwrap();
        assert_relative_eq!(model.dissipation(0.3, -1.2).unwrap(), 0.5, epsilon = 1e-15);
        // conservative case
        let lc = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.0, 0.0).unwrap();
        assert_relative_eq!(lc.dissipation(1.0, 1.0).unwrap(), 0.0, epsilon = 1e-15);
        // R(I) = 0.2 + 0.6 I², p = 2, M = 0: γ = 𝕉(p) = 0.2 + 2.4 = 2.6
        let kin = KineticData::from_constant_inductance(1.0).unwrap();
        let model = PhaseSpaceModel::new(
            kin,
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::zero(),
            Dissipator::series(
                ScalarFunction::polynomial(vec![0.2, 0.0, 0.6]),
                ScalarFunction::zero(),
            )
            .unwrap(),
        );
        assert_relative_eq!(model.dissipation(0.0, 2.0).unwrap(), 2.6, epsilon = 1e-12);
    }

    #[test]
    fn energy_examples() {
        let model = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.2, 0.3).unwrap();
        assert_relative_eq!(model.energy(0.0, 1.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);

        let driven = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.0, 0.0)
            .unwrap()
            .with_drive(ScalarFunction::constant(2.0));
        assert_relative_eq!(
            driven.energy(0.0, 1.0, 0.0).unwrap(),
            -1.5,
            epsilon = 1e-15
        );

        // ω₀ = (L₀C₀)^{-1/2}: L₀ = 0.25, C₀ = 1 → 2
        let osc = PhaseSpaceModel::constant_series(0.25, Some(1.0), 0.0, 0.0).unwrap();
        assert_relative_eq!(osc.resonant_frequency().unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn parallel_dissipator_voltage() {
        // R₀ = 0.2, M₀ = 0.3, L₀ = 1 at (1,1): (1/0.2 + 1/0.3)⁻¹ = 0.12
        let kin = KineticData::from_constant_inductance(1.0).unwrap();
        let model = PhaseSpaceModel::new(
            kin,
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::zero(),
            Dissipator::parallel(
                ScalarFunction::constant(0.2),
                ScalarFunction::constant(0.3),
            )
            .unwrap(),
        );
        assert_relative_eq!(
            model.dissipator_voltage(1.0, 1.0).unwrap(),
            0.12,
            epsilon = 1e-12
        );
        // vanishing branch voltage pins the combination to zero
        assert_relative_eq!(
            model.dissipator_voltage(1.0, 0.0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn passivity_energy_decay_and_divergence_identity() {
        // dH/dt = -𝕀(p)·𝕍_D ≤ 0 with e ≡ 0, and γ = -div(drift), both on
        // 10³ pseudo-random phase points.
        let models = [
            PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.2, 0.3).unwrap(),
            PhaseSpaceModel::new(
                KineticData::from_constant_inductance(1.0).unwrap(),
                ScalarFunction::polynomial(vec![0.0, 1.0, 0.0, 0.1]),
                ScalarFunction::zero(),
                Dissipator::series(
                    ScalarFunction::polynomial(vec![0.2, 0.0, 0.6]),
                    ScalarFunction::polynomial(vec![0.3, 0.0, 0.05]),
                )
                .unwrap(),
            ),
        ];
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut unit = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for model in &models {
            for _ in 0..1000 {
                let q = 4.0 * unit() - 2.0;
                let p = 4.0 * unit() - 2.0;
                // energy decay along the flow
                let (dq, dp) = model.drift(0.0, q, p).unwrap();
                let h = 1e-6;
                let dh = (model.energy(0.0, q + h * dq, p + h * dp).unwrap()
                    - model.energy(0.0, q - h * dq, p - h * dp).unwrap())
                    / (2.0 * h);
                let i = model.kinetic().current(p).unwrap();
                let expected = -i * model.dissipator_voltage(q, p).unwrap();
                assert_relative_eq!(dh, expected, epsilon = 1e-6, max_relative = 1e-4);
                assert!(dh <= 1e-10);

                // dissipation equals negative drift divergence
                let fd = {
                    let hq = 1e-6 * q.abs().max(1.0);
                    let hp = 1e-6 * p.abs().max(1.0);
                    let dvq = (model.drift(0.0, q + hq, p).unwrap().0
                        - model.drift(0.0, q - hq, p).unwrap().0)
                        / (2.0 * hq);
                    let dvp = (model.drift(0.0, q, p + hp).unwrap().1
                        - model.drift(0.0, q, p - hp).unwrap().1)
                        / (2.0 * hp);
                    -(dvq + dvp)
                };
                let gamma = model.dissipation(q, p).unwrap();
                assert_relative_eq!(gamma, fd, max_relative = 1e-6, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn series_gamma_decomposes_into_branch_rates() {
        let model = PhaseSpaceModel::new(
            KineticData::from_constant_inductance(2.0).unwrap(),
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::zero(),
            Dissipator::series(
                ScalarFunction::polynomial(vec![0.2, 0.0, 0.6]),
                ScalarFunction::polynomial(vec![0.3, 0.1]).with_domain(Interval::new(-3.0, 3.0)),
            )
            .unwrap(),
        );
        for (q, p) in [(0.0, 0.0), (1.0, -1.0), (0.5, 2.0)] {
            let total = model.dissipation(q, p).unwrap();
            let split =
                model.gamma_resistive(p).unwrap() + model.gamma_memristive(q, p).unwrap();
            assert_relative_eq!(total, split, epsilon = 1e-14);
        }
    }

    #[test]
    fn model_drift_field_adapter_matches_model() {
        use crate::field::DriftField;
        // nonlinear inductance exercises the numeric current map
        let model = PhaseSpaceModel::new(
            KineticData::from_inductance(ScalarFunction::polynomial(vec![1.0, 0.0, 1.0]))
                .unwrap(),
            ScalarFunction::polynomial(vec![0.0, 1.0]),
            ScalarFunction::zero(),
            Dissipator::series(ScalarFunction::constant(0.2), ScalarFunction::zero()).unwrap(),
        );
        let field = ModelDriftField::new(model.clone());
        for (q, p) in [(0.5, 0.8), (-1.0, 2.0)] {
            let (vq, vp) = field.eval(0.0, q, p);
            let (mq, mp) = model.drift(0.0, q, p).unwrap();
            assert_relative_eq!(vq, mq, epsilon = 1e-14);
            assert_relative_eq!(vp, mp, epsilon = 1e-14);
        }
        // finite-difference Jacobian trace reproduces -gamma
        let jac = field.jacobian(0.0, 0.3, 1.1);
        let gamma = model.dissipation(0.3, 1.1).unwrap();
        assert_relative_eq!(jac[0][0] + jac[1][1], -gamma, max_relative = 1e-5);
    }

    #[test]
    fn model_json_roundtrip_preserves_drift() {
        let model = PhaseSpaceModel::constant_series(1.0, Some(1.0), 0.2, 0.3)
            .unwrap()
            .with_drive(ScalarFunction::sinusoid(0.5, 2.0, 0.1));
        let text = model.to_json().unwrap();
        let back = PhaseSpaceModel::from_json(&text).unwrap();
        for (t, q, p) in [(0.0, 1.0, 1.0), (0.7, -0.4, 0.9)] {
            let a = model.drift(t, q, p).unwrap();
            let b = back.drift(t, q, p).unwrap();
            assert_relative_eq!(a.0, b.0, epsilon = 1e-15);
            assert_relative_eq!(a.1, b.1, epsilon = 1e-15);
        }
    }
}
