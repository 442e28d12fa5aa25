//! Closed-form one-variable real functions with exact calculus.
//!
//! Every circuit characteristic (inductance, capacitance, resistance,
//! memristance, drives, potentials) is represented here. The representation
//! is closed under differentiation and antidifferentiation, which keeps all
//! later bracket and residual checks free of avoidable truncation error.
//! Antiderivative constants are fixed so that the antiderivative vanishes at
//! the origin.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Closed interval of validity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const DEFAULT: Interval = Interval { lo: -1e3, hi: 1e3 };
    pub const ALL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval bounds out of order");
        Interval { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Finite sub-interval used for sampled checks on unbounded domains.
    pub fn clamped(&self) -> Interval {
        Interval {
            lo: self.lo.max(Interval::DEFAULT.lo),
            hi: self.hi.min(Interval::DEFAULT.hi),
        }
    }
}

/// The closed representation: a polynomial part plus at most one sinusoid.
///
/// `zero`, `constant`, `polynomial` and `sinusoid` are the four public
/// construction forms; `poly_sinusoid` arises from calculus on sinusoids
/// (e.g. the antiderivative of `A sin(ωx + φ)` carries a constant offset).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Form {
    Zero,
    Constant {
        value: f64,
    },
    /// Coefficients in ascending powers.
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// `amplitude * sin(omega * x + phase)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// Polynomial plus sinusoid.
    PolySinusoid {
        coeffs: Vec<f64>,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarFunction {
    #[serde(flatten)]
    form: Form,
    #[serde(default = "default_domain")]
    domain: Interval,
}

fn default_domain() -> Interval {
    Interval::DEFAULT
}

fn trim(coeffs: &mut Vec<f64>) {
    while coeffs.last() == Some(&0.0) {
        coeffs.pop();
    }
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| i as f64 * c)
        .collect()
}

fn poly_antiderivative(coeffs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(coeffs.len() + 1);
    out.push(0.0);
    out.extend(coeffs.iter().enumerate().map(|(i, &c)| c / (i + 1) as f64));
    out
}

impl ScalarFunction {
    pub fn zero() -> Self {
        Form::Zero.into_fn(Interval::DEFAULT)
    }

    pub fn constant(value: f64) -> Self {
        Form::Constant { value }.into_fn(Interval::DEFAULT)
    }

    /// Polynomial with coefficients in ascending powers.
    pub fn polynomial(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        trim(&mut coeffs);
        let form = match coeffs.len() {
            0 => Form::Zero,
            1 => Form::Constant { value: coeffs[0] },
            _ => Form::Polynomial { coeffs },
        };
        form.into_fn(Interval::DEFAULT)
    }

    /// `amplitude * sin(omega * x + phase)`; a zero frequency degenerates to
    /// the constant `amplitude * sin(phase)`.
    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Self {
        if amplitude == 0.0 {
            return Self::zero();
        }
        if omega == 0.0 {
            return Self::constant(amplitude * phase.sin());
        }
        Form::Sinusoid {
            amplitude,
            omega,
            phase,
        }
        .into_fn(Interval::DEFAULT)
    }

    pub fn with_domain(mut self, domain: Interval) -> Self {
        self.domain = domain;
        self
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn form(&self) -> &Form {
        &self.form
    }

    /// Evaluate; arguments outside the declared domain are an error.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !self.domain.contains(x) {
            return Err(CoreError::DomainViolation {
                value: x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        Ok(self.eval_raw(x))
    }

    /// Evaluate the closed form without the domain guard. Integrators rely on
    /// non-finite detection instead of per-call checks.
    pub fn eval_raw(&self, x: f64) -> f64 {
        match &self.form {
            Form::Zero => 0.0,
            Form::Constant { value } => *value,
            Form::Polynomial { coeffs } => poly_eval(coeffs, x),
            Form::Sinusoid {
                amplitude,
                omega,
                phase,
            } => amplitude * (omega * x + phase).sin(),
            Form::PolySinusoid {
                coeffs,
                amplitude,
                omega,
                phase,
            } => poly_eval(coeffs, x) + amplitude * (omega * x + phase).sin(),
        }
    }

    /// Exact derivative (same domain).
    pub fn derivative(&self) -> ScalarFunction {
        use std::f64::consts::FRAC_PI_2;
        let form = match &self.form {
            Form::Zero | Form::Constant { .. } => Form::Zero,
            Form::Polynomial { coeffs } => normalize_poly(poly_derivative(coeffs)),
            Form::Sinusoid {
                amplitude,
                omega,
                phase,
            } => Form::Sinusoid {
                amplitude: amplitude * omega,
                omega: *omega,
                phase: phase + FRAC_PI_2,
            },
            Form::PolySinusoid {
                coeffs,
                amplitude,
                omega,
                phase,
            } => normalize_mixed(
                poly_derivative(coeffs),
                amplitude * omega,
                *omega,
                phase + FRAC_PI_2,
            ),
        };
        form.into_fn(self.domain)
    }

    /// Exact antiderivative, fixed to vanish at the origin.
    pub fn antiderivative(&self) -> ScalarFunction {
        use std::f64::consts::FRAC_PI_2;
        let form = match &self.form {
            Form::Zero => Form::Zero,
            Form::Constant { value } => normalize_poly(vec![0.0, *value]),
            Form::Polynomial { coeffs } => normalize_poly(poly_antiderivative(coeffs)),
            Form::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                // ∫ A sin(ωx+φ) = -(A/ω) cos(ωx+φ) + (A/ω) cos φ
                let a = amplitude / omega;
                normalize_mixed(vec![a * phase.cos()], a, *omega, phase - FRAC_PI_2)
            }
            Form::PolySinusoid {
                coeffs,
                amplitude,
                omega,
                phase,
            } => {
                let a = amplitude / omega;
                let mut poly = poly_antiderivative(coeffs);
                poly[0] += a * phase.cos();
                normalize_mixed(poly, a, *omega, phase - FRAC_PI_2)
            }
        };
        form.into_fn(self.domain)
    }

    /// `x ↦ f(scale · x)`, exactly.
    pub fn compose_linear(&self, scale: f64) -> ScalarFunction {
        if scale == 0.0 {
            return ScalarFunction::constant(self.eval_raw(0.0)).with_domain(Interval::ALL);
        }
        let domain = if scale > 0.0 {
            Interval::new(self.domain.lo / scale, self.domain.hi / scale)
        } else {
            Interval::new(self.domain.hi / scale, self.domain.lo / scale)
        };
        let form = match &self.form {
            Form::Zero => Form::Zero,
            Form::Constant { value } => Form::Constant { value: *value },
            Form::Polynomial { coeffs } => normalize_poly(scale_poly_arg(coeffs, scale)),
            Form::Sinusoid {
                amplitude,
                omega,
                phase,
            } => Form::Sinusoid {
                amplitude: *amplitude,
                omega: omega * scale,
                phase: *phase,
            },
            Form::PolySinusoid {
                coeffs,
                amplitude,
                omega,
                phase,
            } => normalize_mixed(
                scale_poly_arg(coeffs, scale),
                *amplitude,
                omega * scale,
                *phase,
            ),
        };
        form.into_fn(domain)
    }

    /// Multiply by a constant.
    pub fn scale(&self, k: f64) -> ScalarFunction {
        if k == 0.0 {
            return ScalarFunction::zero().with_domain(self.domain);
        }
        let form = match &self.form {
            Form::Zero => Form::Zero,
            Form::Constant { value } => Form::Constant { value: value * k },
            Form::Polynomial { coeffs } => normalize_poly(coeffs.iter().map(|c| c * k).collect()),
            Form::Sinusoid {
                amplitude,
                omega,
                phase,
            } => Form::Sinusoid {
                amplitude: amplitude * k,
                omega: *omega,
                phase: *phase,
            },
            Form::PolySinusoid {
                coeffs,
                amplitude,
                omega,
                phase,
            } => normalize_mixed(
                coeffs.iter().map(|c| c * k).collect(),
                amplitude * k,
                *omega,
                *phase,
            ),
        };
        form.into_fn(self.domain)
    }

    fn parts(&self) -> (Vec<f64>, Option<(f64, f64, f64)>) {
        match &self.form {
            Form::Zero => (vec![], None),
            Form::Constant { value } => (vec![*value], None),
            Form::Polynomial { coeffs } => (coeffs.clone(), None),
            Form::Sinusoid {
                amplitude,
                omega,
                phase,
            } => (vec![], Some((*amplitude, *omega, *phase))),
            Form::PolySinusoid {
                coeffs,
                amplitude,
                omega,
                phase,
            } => (coeffs.clone(), Some((*amplitude, *omega, *phase))),
        }
    }

    /// Exact sum; fails when two sinusoids of different frequency or phase
    /// would be required.
    pub fn try_add(&self, other: &ScalarFunction) -> Result<ScalarFunction> {
        let domain = self
            .domain
            .intersect(&other.domain)
            .ok_or_else(|| CoreError::InvalidConfig("disjoint domains in sum".into()))?;
        let (pa, sa) = self.parts();
        let (pb, sb) = other.parts();
        let mut poly = vec![0.0; pa.len().max(pb.len())];
        for (i, c) in pa.iter().enumerate() {
            poly[i] += c;
        }
        for (i, c) in pb.iter().enumerate() {
            poly[i] += c;
        }
        let sin = match (sa, sb) {
            (None, s) | (s, None) => s,
            (Some((a1, w1, f1)), Some((a2, w2, f2))) => {
                if w1 == w2 && f1 == f2 {
                    Some((a1 + a2, w1, f1))
                } else {
                    return Err(CoreError::NoClosedForm(
                        "sum of sinusoids with different frequency or phase".into(),
                    ));
                }
            }
        };
        let form = match sin {
            None => normalize_poly(poly),
            Some((a, w, f)) => normalize_mixed(poly, a, w, f),
        };
        Ok(form.into_fn(domain))
    }

    /// Exact product; only polynomial × polynomial (and constant × anything)
    /// stays in the representation.
    pub fn try_mul(&self, other: &ScalarFunction) -> Result<ScalarFunction> {
        let domain = self
            .domain
            .intersect(&other.domain)
            .ok_or_else(|| CoreError::InvalidConfig("disjoint domains in product".into()))?;
        if let Some(k) = self.as_constant() {
            return Ok(other.scale(k).with_domain(domain));
        }
        if let Some(k) = other.as_constant() {
            return Ok(self.scale(k).with_domain(domain));
        }
        match (&self.form, &other.form) {
            (Form::Polynomial { coeffs: a }, Form::Polynomial { coeffs: b }) => {
                let mut out = vec![0.0; a.len() + b.len() - 1];
                for (i, ca) in a.iter().enumerate() {
                    for (j, cb) in b.iter().enumerate() {
                        out[i + j] += ca * cb;
                    }
                }
                Ok(normalize_poly(out).into_fn(domain))
            }
            _ => Err(CoreError::NoClosedForm(
                "product involving a sinusoid is not representable".into(),
            )),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.form, Form::Zero)
    }

    pub fn as_constant(&self) -> Option<f64> {
        match &self.form {
            Form::Zero => Some(0.0),
            Form::Constant { value } => Some(*value),
            _ => None,
        }
    }

    /// True when the form carries no sinusoid part.
    pub fn is_polynomial(&self) -> bool {
        matches!(
            self.form,
            Form::Zero | Form::Constant { .. } | Form::Polynomial { .. }
        )
    }

    /// Ascending coefficients for polynomial forms.
    pub fn poly_coeffs(&self) -> Option<Vec<f64>> {
        match &self.form {
            Form::Zero => Some(vec![]),
            Form::Constant { value } => Some(vec![*value]),
            Form::Polynomial { coeffs } => Some(coeffs.clone()),
            _ => None,
        }
    }

    /// Minimum over `n+1` uniform samples of the (clamped) domain.
    pub fn sampled_min(&self, n: usize) -> f64 {
        let dom = self.domain.clamped();
        (0..=n)
            .map(|i| {
                let x = dom.lo + (dom.hi - dom.lo) * i as f64 / n as f64;
                self.eval_raw(x)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn normalize_poly(mut coeffs: Vec<f64>) -> Form {
    trim(&mut coeffs);
    match coeffs.len() {
        0 => Form::Zero,
        1 => Form::Constant { value: coeffs[0] },
        _ => Form::Polynomial { coeffs },
    }
}

fn normalize_mixed(mut coeffs: Vec<f64>, amplitude: f64, omega: f64, phase: f64) -> Form {
    trim(&mut coeffs);
    if amplitude == 0.0 {
        return normalize_poly(coeffs);
    }
    if coeffs.is_empty() {
        return Form::Sinusoid {
            amplitude,
            omega,
            phase,
        };
    }
    Form::PolySinusoid {
        coeffs,
        amplitude,
        omega,
        phase,
    }
}

fn scale_poly_arg(coeffs: &[f64], scale: f64) -> Vec<f64> {
    let mut s = 1.0;
    coeffs
        .iter()
        .map(|c| {
            let v = c * s;
            s *= scale;
            v
        })
        .collect()
}

impl Form {
    fn into_fn(self, domain: Interval) -> ScalarFunction {
        ScalarFunction { form: self, domain }
    }
}
