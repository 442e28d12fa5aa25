use std::sync::Arc;

use super::noise::ChannelSet;
use crate::field::{DiffusionField, DriftField};

/// An SDE on phase space carrying both calculi: the Itô drift v, the
/// equivalent Stratonovich drift w, and per-channel diffusion fields σ_α.
/// The two drifts are related by v = w + ½ Σ_α (σ_α·∇)σ_α.
#[derive(Clone)]
pub struct SdeSystem {
    ito: Arc<dyn DriftField>,
    strat: Arc<dyn DriftField>,
    diffusions: Vec<Arc<dyn DiffusionField>>,
    channels: ChannelSet,
}

impl SdeSystem {
    /// Build from the Itô drift; the Stratonovich drift is derived.
    pub fn from_ito(
        ito: Arc<dyn DriftField>,
        diffusions: Vec<Arc<dyn DiffusionField>>,
        channels: ChannelSet,
    ) -> Self {
        let strat = ito_to_strat(ito.clone(), &diffusions);
        SdeSystem {
            ito,
            strat,
            diffusions,
            channels,
        }
    }

    /// Build from the Stratonovich drift; the Itô drift is derived.
    pub fn from_stratonovich(
        strat: Arc<dyn DriftField>,
        diffusions: Vec<Arc<dyn DiffusionField>>,
        channels: ChannelSet,
    ) -> Self {
        let ito = strat_to_ito(strat.clone(), &diffusions);
        SdeSystem {
            ito,
            strat,
            diffusions,
            channels,
        }
    }

    /// Build from both drifts when they are known in closed form. Their
    /// mutual consistency is a property of the construction and is covered
    /// by tests rather than re-derived here.
    pub fn from_pair(
        ito: Arc<dyn DriftField>,
        strat: Arc<dyn DriftField>,
        diffusions: Vec<Arc<dyn DiffusionField>>,
        channels: ChannelSet,
    ) -> Self {
        SdeSystem {
            ito,
            strat,
            diffusions,
            channels,
        }
    }

    /// Deterministic system (no noise channels).
    pub fn deterministic(drift: Arc<dyn DriftField>) -> Self {
        SdeSystem {
            ito: drift.clone(),
            strat: drift,
            diffusions: vec![],
            channels: ChannelSet::default(),
        }
    }

    pub fn ito_drift(&self) -> &Arc<dyn DriftField> {
        &self.ito
    }

    pub fn strat_drift(&self) -> &Arc<dyn DriftField> {
        &self.strat
    }

    pub fn diffusions(&self) -> &[Arc<dyn DiffusionField>] {
        &self.diffusions
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn n_channels(&self) -> usize {
        self.diffusions.len()
    }
}

/// Drift shifted by ±½ Σ_α (σ_α·∇)σ_α.
struct CorrectedDrift {
    base: Arc<dyn DriftField>,
    diffusions: Vec<Arc<dyn DiffusionField>>,
    sign: f64,
}

impl CorrectedDrift {
    fn correction(&self, q: f64, p: f64) -> (f64, f64) {
        let mut cq = 0.0;
        let mut cp = 0.0;
        for sigma in &self.diffusions {
            let (sq, sp) = sigma.eval(q, p);
            let jac = sigma.jacobian(q, p);
            cq += jac[0][0] * sq + jac[0][1] * sp;
            cp += jac[1][0] * sq + jac[1][1] * sp;
        }
        (0.5 * cq, 0.5 * cp)
    }
}

impl DriftField for CorrectedDrift {
    fn eval(&self, t: f64, q: f64, p: f64) -> (f64, f64) {
        let (bq, bp) = self.base.eval(t, q, p);
        let (cq, cp) = self.correction(q, p);
        (bq + self.sign * cq, bp + self.sign * cp)
    }

    fn jacobian(&self, t: f64, q: f64, p: f64) -> [[f64; 2]; 2] {
        // central difference, step 1e-6 · scale
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

/// Itô drift of the Stratonovich SDE (w, σ): v = w + ½Σ(σ·∇)σ.
pub fn strat_to_ito(
    strat: Arc<dyn DriftField>,
    diffusions: &[Arc<dyn DiffusionField>],
) -> Arc<dyn DriftField> {
    Arc::new(CorrectedDrift {
        base: strat,
        diffusions: diffusions.to_vec(),
        sign: 1.0,
    })
}

/// Stratonovich drift of the Itô SDE (v, σ): w = v − ½Σ(σ·∇)σ.
pub fn ito_to_strat(
    ito: Arc<dyn DriftField>,
    diffusions: &[Arc<dyn DiffusionField>],
) -> Arc<dyn DriftField> {
    Arc::new(CorrectedDrift {
        base: ito,
        diffusions: diffusions.to_vec(),
        sign: -1.0,
    })
}
