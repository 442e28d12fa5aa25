use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::NoisePath;
use super::system::SdeSystem;
use super::PhasePoint;
use crate::error::{CoreError, Result};

/// Fixed-step integration schemes. Euler–Maruyama consumes the Itô drift;
/// the Heun predictor–corrector consumes the Stratonovich drift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    HeunStratonovich,
}

/// One Itô step: x' = x + v·Δt + Σ_α σ_α(x)·ΔW^α.
pub fn euler_maruyama_step(
    system: &SdeSystem,
    state: PhasePoint,
    t: f64,
    dt: f64,
    increments: &[f64],
) -> Option<PhasePoint> {
    let (vq, vp) = system.ito_drift().eval(t, state.q, state.p);
    let mut q = state.q + vq * dt;
    let mut p = state.p + vp * dt;
    for (sigma, dw) in system.diffusions().iter().zip(increments) {
        let (sq, sp) = sigma.eval(state.q, state.p);
        q += sq * dw;
        p += sp * dw;
    }
    let next = PhasePoint::new(q, p);
    next.is_finite().then_some(next)
}

/// One Stratonovich Heun step: an Euler predictor followed by a trapezoidal
/// corrector in both the drift and the diffusion.
pub fn heun_stratonovich_step(
    system: &SdeSystem,
    state: PhasePoint,
    t: f64,
    dt: f64,
    increments: &[f64],
) -> Option<PhasePoint> {
    let (wq, wp) = system.strat_drift().eval(t, state.q, state.p);
    let mut qb = state.q + wq * dt;
    let mut pb = state.p + wp * dt;
    let sigmas: Vec<(f64, f64)> = system
        .diffusions()
        .iter()
        .map(|s| s.eval(state.q, state.p))
        .collect();
    for ((sq, sp), dw) in sigmas.iter().zip(increments) {
        qb += sq * dw;
        pb += sp * dw;
    }
    if !(qb.is_finite() && pb.is_finite()) {
        return None;
    }
    let (wq2, wp2) = system.strat_drift().eval(t + dt, qb, pb);
    let mut q = state.q + 0.5 * (wq + wq2) * dt;
    let mut p = state.p + 0.5 * (wp + wp2) * dt;
    for ((sigma, (sq, sp)), dw) in system.diffusions().iter().zip(&sigmas).zip(increments) {
        let (sq2, sp2) = sigma.eval(qb, pb);
        q += 0.5 * (sq + sq2) * dw;
        p += 0.5 * (sp + sp2) * dw;
    }
    let next = PhasePoint::new(q, p);
    next.is_finite().then_some(next)
}

fn step(
    system: &SdeSystem,
    scheme: Scheme,
    state: PhasePoint,
    t: f64,
    dt: f64,
    increments: &[f64],
) -> Option<PhasePoint> {
    match scheme {
        Scheme::EulerMaruyama => euler_maruyama_step(system, state, t, dt, increments),
        Scheme::HeunStratonovich => heun_stratonovich_step(system, state, t, dt, increments),
    }
}

/// Integrate one path to its end, calling the observer with
/// (step index, t_k, x_k, x_{k+1}, increments at k) after every step.
pub fn integrate_path_observed<O>(
    system: &SdeSystem,
    scheme: Scheme,
    x0: PhasePoint,
    path: &NoisePath,
    mut observer: O,
) -> Result<PhasePoint>
where
    O: FnMut(usize, f64, PhasePoint, PhasePoint, &[f64]),
{
    let mut state = x0;
    let mut incs = vec![0.0; path.n_channels()];
    for k in 0..path.n_steps {
        let t = k as f64 * path.dt;
        for (c, slot) in incs.iter_mut().enumerate() {
            *slot = path.increments[c][k];
        }
        let next =
            step(system, scheme, state, t, path.dt, &incs).ok_or(CoreError::StepFailed {
                path: path.path_index,
                step: k,
                reason: "non-finite state".into(),
            })?;
        observer(k, t, state, next, &incs);
        state = next;
    }
    Ok(state)
}

/// Integrate one path, returning states at every step (length n_steps + 1).
pub fn integrate_path(
    system: &SdeSystem,
    scheme: Scheme,
    x0: PhasePoint,
    path: &NoisePath,
) -> Result<Vec<PhasePoint>> {
    let mut out = Vec::with_capacity(path.n_steps + 1);
    out.push(x0);
    integrate_path_observed(system, scheme, x0, path, |_, _, _, next, _| {
        out.push(next);
    })?;
    Ok(out)
}

/// Ensemble configuration shared by the simulator and the estimators.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub q0: f64,
    pub p0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub n_paths: u64,
    pub seed: u64,
    pub scheme: Scheme,
    pub save_stride: usize,
}

impl EnsembleSpec {
    pub fn x0(&self) -> PhasePoint {
        PhasePoint::new(self.q0, self.p0)
    }

    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Saved trajectories of an ensemble run.
#[derive(Clone, Debug)]
pub struct TrajectoryStore {
    pub spec: EnsembleSpec,
    /// Save times, common to all paths.
    pub times: Vec<f64>,
    /// `paths[i][j]` is path i at `times[j]`.
    pub paths: Vec<Vec<PhasePoint>>,
}

impl TrajectoryStore {
    /// CSV with header `t,q,p,path` (or `t,q,p` for a single path).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        if self.paths.len() == 1 {
            writeln!(w, "t,q,p")?;
            for (t, x) in self.times.iter().zip(&self.paths[0]) {
                writeln!(w, "{t},{},{}", x.q, x.p)?;
            }
        } else {
            writeln!(w, "t,q,p,path")?;
            for (i, path) in self.paths.iter().enumerate() {
                for (t, x) in self.times.iter().zip(path) {
                    writeln!(w, "{t},{},{},{i}", x.q, x.p)?;
                }
            }
        }
        Ok(())
    }
}

/// Simulate an ensemble of independent paths. Deterministic given the seed:
/// per-path streams are derived from (seed, path index) and the result does
/// not depend on the number of worker threads.
pub fn simulate_ensemble(system: &SdeSystem, spec: &EnsembleSpec) -> Result<TrajectoryStore> {
    if spec.n_paths == 0 {
        return Err(CoreError::InvalidConfig("n_paths must be >= 1".into()));
    }
    if !(spec.dt > 0.0) {
        return Err(CoreError::InvalidConfig("dt must be positive".into()));
    }
    let n_steps = spec.n_steps();
    let stride = spec.save_stride.max(1);
    let n_channels = system.n_channels();

    let mut save_steps: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if *save_steps.last().unwrap() != n_steps {
        save_steps.push(n_steps);
    }
    let times: Vec<f64> = save_steps.iter().map(|&k| k as f64 * spec.dt).collect();

    let paths: Result<Vec<Vec<PhasePoint>>> = (0..spec.n_paths)
        .into_par_iter()
        .map(|i| {
            let noise = NoisePath::generate(spec.seed, i, n_channels, n_steps, spec.dt);
            let mut saved = Vec::with_capacity(save_steps.len());
            saved.push(spec.x0());
            let mut next_save = 1usize;
            integrate_path_observed(system, spec.scheme, spec.x0(), &noise, |k, _, _, x, _| {
                if next_save < save_steps.len() && k + 1 == save_steps[next_save] {
                    saved.push(x);
                    next_save += 1;
                }
            })?;
            Ok(saved)
        })
        .collect();

    Ok(TrajectoryStore {
        spec: *spec,
        times,
        paths: paths?,
    })
}
