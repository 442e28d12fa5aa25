//! Two-variable phase-space functions and vector fields.
//!
//! A [`PhaseField`] is a finite sum Σ_k a_k(q)·b_k(p) of separable terms.
//! That algebra is closed under partial differentiation, covers every
//! Hamiltonian and noise function built by the dilation constructions, and
//! keeps all partial derivatives exact.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::ScalarFunction;

/// Anything that can be evaluated and differentiated on phase space.
pub trait PhaseFunction {
    fn value(&self, q: f64, p: f64) -> f64;
    /// (∂/∂q, ∂/∂p).
    fn grad(&self, q: f64, p: f64) -> (f64, f64);
    /// [[∂²/∂q², ∂²/∂q∂p], [∂²/∂q∂p, ∂²/∂p²]].
    fn hessian(&self, q: f64, p: f64) -> [[f64; 2]; 2];
}

/// Σ_k a_k(q)·b_k(p) with exact calculus.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PhaseField {
    terms: Vec<(ScalarFunction, ScalarFunction)>,
}

impl PhaseField {
    pub fn zero() -> Self {
        PhaseField { terms: vec![] }
    }

    pub fn constant(v: f64) -> Self {
        Self::of_q(ScalarFunction::constant(v))
    }

    /// A function of `q` alone.
    pub fn of_q(f: ScalarFunction) -> Self {
        if f.is_zero() {
            return Self::zero();
        }
        PhaseField {
            terms: vec![(f, ScalarFunction::constant(1.0))],
        }
    }

    /// A function of `p` alone.
    pub fn of_p(f: ScalarFunction) -> Self {
        if f.is_zero() {
            return Self::zero();
        }
        PhaseField {
            terms: vec![(ScalarFunction::constant(1.0), f)],
        }
    }

    /// A single separable product a(q)·b(p).
    pub fn product(a: ScalarFunction, b: ScalarFunction) -> Self {
        if a.is_zero() || b.is_zero() {
            return Self::zero();
        }
        PhaseField {
            terms: vec![(a, b)],
        }
    }

    pub fn add(mut self, other: &PhaseField) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        PhaseField {
            terms: self
                .terms
                .iter()
                .map(|(a, b)| (a.scale(k), b.clone()))
                .collect(),
        }
    }

    /// Exact product of two fields (term-by-term scalar products).
    pub fn try_mul(&self, other: &PhaseField) -> Result<PhaseField> {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a1, b1) in &self.terms {
            for (a2, b2) in &other.terms {
                terms.push((a1.try_mul(a2)?, b1.try_mul(b2)?));
            }
        }
        Ok(PhaseField { terms })
    }

    pub fn d_dq(&self) -> PhaseField {
        PhaseField {
            terms: self
                .terms
                .iter()
                .map(|(a, b)| (a.derivative(), b.clone()))
                .filter(|(a, _)| !a.is_zero())
                .collect(),
        }
    }

    pub fn d_dp(&self) -> PhaseField {
        PhaseField {
            terms: self
                .terms
                .iter()
                .map(|(a, b)| (a.clone(), b.derivative()))
                .filter(|(_, b)| !b.is_zero())
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(ScalarFunction, ScalarFunction)] {
        &self.terms
    }
}

impl PhaseFunction for PhaseField {
    fn value(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|(a, b)| a.eval_raw(q) * b.eval_raw(p))
            .sum()
    }

    fn grad(&self, q: f64, p: f64) -> (f64, f64) {
        let mut gq = 0.0;
        let mut gp = 0.0;
        for (a, b) in &self.terms {
            gq += a.derivative().eval_raw(q) * b.eval_raw(p);
            gp += a.eval_raw(q) * b.derivative().eval_raw(p);
        }
        (gq, gp)
    }

    fn hessian(&self, q: f64, p: f64) -> [[f64; 2]; 2] {
        let mut h = [[0.0; 2]; 2];
        for (a, b) in &self.terms {
            let (av, ad, add) = (
                a.eval_raw(q),
                a.derivative().eval_raw(q),
                a.derivative().derivative().eval_raw(q),
            );
            let (bv, bd, bdd) = (
                b.eval_raw(p),
                b.derivative().eval_raw(p),
                b.derivative().derivative().eval_raw(p),
            );
            h[0][0] += add * bv;
            h[0][1] += ad * bd;
            h[1][1] += av * bdd;
        }
        h[1][0] = h[0][1];
        h
    }
}

/// Poisson bracket {f, g} = f_q g_p − g_q f_p at a point.
pub fn poisson_bracket(f: &dyn PhaseFunction, g: &dyn PhaseFunction, q: f64, p: f64) -> f64 {
    let (fq, fp) = f.grad(q, p);
    let (gq, gp) = g.grad(q, p);
    fq * gp - gq * fp
}

/// Drift vector field on phase space, possibly time dependent.
pub trait DriftField: Send + Sync {
    fn eval(&self, t: f64, q: f64, p: f64) -> (f64, f64);
    /// Jacobian [[∂v^q/∂q, ∂v^q/∂p], [∂v^p/∂q, ∂v^p/∂p]].
    fn jacobian(&self, t: f64, q: f64, p: f64) -> [[f64; 2]; 2];
}

/// Diffusion vector field (time independent).
pub trait DiffusionField: Send + Sync {
    fn eval(&self, q: f64, p: f64) -> (f64, f64);
    fn jacobian(&self, q: f64, p: f64) -> [[f64; 2]; 2];
}

/// Drift with exact components plus an additive time-dependent drive on the
/// momentum equation. Partial-derivative fields are precomputed so Jacobian
/// evaluation allocates nothing.
#[derive(Clone, Debug)]
pub struct AnalyticDrift {
    pub vq: PhaseField,
    pub vp: PhaseField,
    /// Added to the `p` component; contributes nothing to the Jacobian.
    pub drive: ScalarFunction,
    partials: [PhaseField; 4],
}

impl AnalyticDrift {
    pub fn new(vq: PhaseField, vp: PhaseField, drive: ScalarFunction) -> Self {
        let partials = [vq.d_dq(), vq.d_dp(), vp.d_dq(), vp.d_dp()];
        AnalyticDrift {
            vq,
            vp,
            drive,
            partials,
        }
    }

    /// The Hamiltonian field (∂H/∂p, −∂H/∂q) plus a drive `e(t)` on `p`
    /// (the drive term −e(t)·q of the Hamiltonian differentiates to +e(t)).
    pub fn hamiltonian(h: &PhaseField, drive: ScalarFunction) -> Self {
        Self::new(h.d_dp(), h.d_dq().scale(-1.0), drive)
    }
}

impl DriftField for AnalyticDrift {
    fn eval(&self, t: f64, q: f64, p: f64) -> (f64, f64) {
        (
            self.vq.value(q, p),
            self.vp.value(q, p) + self.drive.eval_raw(t),
        )
    }

    fn jacobian(&self, _t: f64, q: f64, p: f64) -> [[f64; 2]; 2] {
        [
            [self.partials[0].value(q, p), self.partials[1].value(q, p)],
            [self.partials[2].value(q, p), self.partials[3].value(q, p)],
        ]
    }
}

/// Diffusion with exact components and precomputed partials.
#[derive(Clone, Debug)]
pub struct AnalyticDiffusion {
    pub sq: PhaseField,
    pub sp: PhaseField,
    partials: [PhaseField; 4],
}

impl AnalyticDiffusion {
    pub fn new(sq: PhaseField, sp: PhaseField) -> Self {
        let partials = [sq.d_dq(), sq.d_dp(), sp.d_dq(), sp.d_dp()];
        AnalyticDiffusion { sq, sp, partials }
    }

    /// Hamiltonian noise field of a generator F: ({q,F}, {p,F}) = (∂F/∂p, −∂F/∂q).
    pub fn hamiltonian(f: &PhaseField) -> Self {
        Self::new(f.d_dp(), f.d_dq().scale(-1.0))
    }

    pub fn constant(sq: f64, sp: f64) -> Self {
        Self::new(PhaseField::constant(sq), PhaseField::constant(sp))
    }
}

impl DiffusionField for AnalyticDiffusion {
    fn eval(&self, q: f64, p: f64) -> (f64, f64) {
        (self.sq.value(q, p), self.sp.value(q, p))
    }

    fn jacobian(&self, q: f64, p: f64) -> [[f64; 2]; 2] {
        [
            [self.partials[0].value(q, p), self.partials[1].value(q, p)],
            [self.partials[2].value(q, p), self.partials[3].value(q, p)],
        ]
    }
}
