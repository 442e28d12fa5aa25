//! Noise sources and fixed-step SDE integration on 2-dimensional phase
//! space with multiple noise channels.
//!
//! Increments are generated by a counter-based stream keyed on
//! (seed, path, channel, step), so every increment is addressable and
//! ensembles are reproducible independently of thread count.

mod integrate;
mod noise;
mod system;

pub use integrate::{
    euler_maruyama_step, heun_stratonovich_step, integrate_path, integrate_path_observed,
    simulate_ensemble, EnsembleSpec, Scheme, TrajectoryStore,
};
pub use noise::{standard_normal, standard_uniform, ChannelSet, NoisePath, SymplecticPair};
pub use system::{ito_to_strat, strat_to_ito, SdeSystem};

/// A point of the (q, p) phase plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        PhasePoint { q, p }
    }

    pub fn is_finite(&self) -> bool {
        self.q.is_finite() && self.p.is_finite()
    }
}
