//! Numerical certificates of canonicity and of the drift, dissipation and
//! fluctuation identities along simulated paths.
//!
//! The plain bracket {q_t, p_t} with respect to initial conditions is the
//! determinant of the state Jacobian J_t; dissipative flows contract it at
//! the rate γ. Canonical Wiener dilations restore det J_t → 1 pathwise.
//! Symplectic-noise dilations restore the *extended* bracket, which adds the
//! noise sensitivities weighted by the pair bracket {ΔQ_k, ΔP_k} = Γ·Δt:
//!
//! ```text
//! ext = det J_t + Σ_pairs Γ Δt Σ_k [S^Q_k ∧ S^P_k]
//! ```
//!
//! Sensitivities are propagated by the exact linearization of the step map
//! of the integration scheme in use. Internally each sensitivity is stored
//! as S^α_k = J_t · u^α_k with u^α_k frozen at creation, which turns the
//! naive O(steps²) propagation into O(channels · steps).

use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::sde::{
    integrate_path_observed, EnsembleSpec, NoisePath, PhasePoint, Scheme, SdeSystem,
    SymplecticPair,
};

type Mat2 = [[f64; 2]; 2];
type Vec2 = [f64; 2];

const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

fn mat_mul(a: Mat2, b: Mat2) -> Mat2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat_vec(a: Mat2, v: Vec2) -> Vec2 {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

fn det(a: Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn inverse(a: Mat2) -> Option<Mat2> {
    let d = det(a);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    Some([
        [a[1][1] / d, -a[0][1] / d],
        [-a[1][0] / d, a[0][0] / d],
    ])
}

fn wedge(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Bracket estimates along a path.
#[derive(Clone, Copy, Debug)]
pub struct BracketSample {
    pub t: f64,
    pub plain: f64,
    pub extended: Option<f64>,
}

/// State Jacobian and per-step noise sensitivities of one simulated path.
pub struct TangentFlowState {
    jacobian: Mat2,
    dt: f64,
    /// u-coefficients per channel and step; the sensitivity to increment
    /// (α, k) is J_t · coeffs[α][k]. Steps at or beyond the current time
    /// have no entry (their sensitivity is zero).
    coeffs: Vec<Vec<Vec2>>,
    pairings: Vec<SymplecticPair>,
    series: Vec<BracketSample>,
}

impl TangentFlowState {
    /// det J_t: the Poisson bracket {q_t, p_t} with respect to the initial
    /// conditions.
    pub fn plain_bracket(&self) -> f64 {
        det(self.jacobian)
    }

    /// Sensitivity ∂(q_t, p_t)/∂ΔW^α_k.
    pub fn sensitivity(&self, channel: usize, step: usize) -> Vec2 {
        mat_vec(self.jacobian, self.coeffs[channel][step])
    }

    /// Extended bracket over initial conditions and noise increments.
    pub fn extended_bracket(&self) -> Result<f64> {
        if self.pairings.is_empty() {
            return Err(CoreError::InvalidConfig(
                "extended bracket requires symplectic pairing metadata".into(),
            ));
        }
        let d = det(self.jacobian);
        let mut noise_term = 0.0;
        for pair in &self.pairings {
            let qs = &self.coeffs[pair.q_channel];
            let ps = &self.coeffs[pair.p_channel];
            let sum: f64 = qs.iter().zip(ps).map(|(&a, &b)| wedge(a, b)).sum();
            // S^Q ∧ S^P = det(J) · (u^Q ∧ u^P)
            noise_term += pair.gamma * self.dt * d * sum;
        }
        Ok(d + noise_term)
    }

    /// Bracket estimates recorded along the path (when requested).
    pub fn series(&self) -> &[BracketSample] {
        &self.series
    }

    pub fn jacobian(&self) -> Mat2 {
        self.jacobian
    }
}

/// Propagate the tangent flow (Jacobian plus noise sensitivities) along one
/// noise path, using the exact linearization of the chosen scheme's step
/// map. `series_stride` > 0 additionally records bracket samples every that
/// many steps.
pub fn propagate_tangent(
    system: &SdeSystem,
    path: &NoisePath,
    x0: PhasePoint,
    scheme: Scheme,
    series_stride: usize,
) -> Result<TangentFlowState> {
    let n_channels = system.n_channels();
    let pairings = system.channels().pairings.clone();
    let mut jac = IDENTITY;
    let mut coeffs: Vec<Vec<Vec2>> = vec![Vec::with_capacity(path.n_steps); n_channels];
    let mut series = Vec::new();
    // running Σ_k u^Q_k ∧ u^P_k per pair, for the recorded series
    let mut pair_acc = vec![0.0f64; pairings.len()];

    let record = |k: usize,
                      jac: &Mat2,
                      pair_acc: &[f64],
                      series: &mut Vec<BracketSample>| {
        if series_stride > 0 && (k + 1) % series_stride == 0 {
            let d = det(*jac);
            let extended = if pairings.is_empty() {
                None
            } else {
                let noise: f64 = pairings
                    .iter()
                    .zip(pair_acc)
                    .map(|(pair, acc)| pair.gamma * path.dt * d * acc)
                    .sum();
                Some(d + noise)
            };
            series.push(BracketSample {
                t: (k + 1) as f64 * path.dt,
                plain: d,
                extended,
            });
        }
    };

    let result = integrate_path_observed(system, scheme, x0, path, |k, t, x, _next, incs| {
        let a_step;
        let mut sens: Vec<Vec2> = Vec::with_capacity(n_channels);
        match scheme {
            Scheme::EulerMaruyama => {
                // A = I + Dv Δt + Σ Dσ_α ΔW^α ; s_α = σ_α(x)
                let dv = system.ito_drift().jacobian(t, x.q, x.p);
                let mut a = IDENTITY;
                for i in 0..2 {
                    for j in 0..2 {
                        a[i][j] += dv[i][j] * path.dt;
                    }
                }
                for (sigma, dw) in system.diffusions().iter().zip(incs) {
                    let ds = sigma.jacobian(x.q, x.p);
                    for i in 0..2 {
                        for j in 0..2 {
                            a[i][j] += ds[i][j] * dw;
                        }
                    }
                    let (sq, sp) = sigma.eval(x.q, x.p);
                    sens.push([sq, sp]);
                }
                a_step = a;
            }
            Scheme::HeunStratonovich => {
                // exact derivative of the Heun update
                let dt = path.dt;
                let drift = system.strat_drift();
                let (wq, wp) = drift.eval(t, x.q, x.p);
                let dw0 = drift.jacobian(t, x.q, x.p);
                let sig0: Vec<(f64, f64)> = system
                    .diffusions()
                    .iter()
                    .map(|s| s.eval(x.q, x.p))
                    .collect();
                // predictor and its derivative M = ∂x̄/∂x
                let mut qb = x.q + wq * dt;
                let mut pb = x.p + wp * dt;
                let mut m = IDENTITY;
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += dw0[i][j] * dt;
                    }
                }
                for ((sigma, (sq, sp)), dw) in
                    system.diffusions().iter().zip(&sig0).zip(incs)
                {
                    qb += sq * dw;
                    pb += sp * dw;
                    let ds = sigma.jacobian(x.q, x.p);
                    for i in 0..2 {
                        for j in 0..2 {
                            m[i][j] += ds[i][j] * dw;
                        }
                    }
                }
                let dw1 = drift.jacobian(t + dt, qb, pb);
                let dw1m = mat_mul(dw1, m);
                let mut a = IDENTITY;
                for i in 0..2 {
                    for j in 0..2 {
                        a[i][j] += 0.5 * (dw0[i][j] + dw1m[i][j]) * dt;
                    }
                }
                // K = Dw(x̄)Δt + Σ_β Dσ_β(x̄)ΔW^β, shared by A and the new
                // sensitivities
                let mut k_mat = [[0.0f64; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        k_mat[i][j] = dw1[i][j] * dt;
                    }
                }
                for (sigma, dw) in system.diffusions().iter().zip(incs) {
                    let ds0 = sigma.jacobian(x.q, x.p);
                    let ds1 = sigma.jacobian(qb, pb);
                    let ds1m = mat_mul(ds1, m);
                    for i in 0..2 {
                        for j in 0..2 {
                            a[i][j] += 0.5 * (ds0[i][j] + ds1m[i][j]) * dw;
                            k_mat[i][j] += ds1[i][j] * dw;
                        }
                    }
                }
                for (sigma, (sq, sp)) in system.diffusions().iter().zip(&sig0) {
                    let (sq1, sp1) = sigma.eval(qb, pb);
                    let kv = mat_vec(k_mat, [*sq, *sp]);
                    sens.push([
                        0.5 * (sq + sq1) + 0.5 * kv[0],
                        0.5 * (sp + sp1) + 0.5 * kv[1],
                    ]);
                }
                a_step = a;
            }
        }

        jac = mat_mul(a_step, jac);
        if let Some(jinv) = inverse(jac) {
            for (c, s) in sens.into_iter().enumerate() {
                let u = mat_vec(jinv, s);
                if !pairings.is_empty() {
                    for (pi, pair) in pairings.iter().enumerate() {
                        // accumulate wedge once the partner exists
                        if pair.p_channel == c {
                            let k_idx = coeffs[pair.q_channel].len() - 1;
                            pair_acc[pi] += wedge(coeffs[pair.q_channel][k_idx], u);
                        }
                    }
                }
                coeffs[c].push(u);
            }
        } else {
            // degenerate Jacobian: poison the state so the error surfaces
            jac = [[f64::NAN; 2]; 2];
        }
        record(k, &jac, &pair_acc, &mut series);
    });
    result?;

    if !jac.iter().flatten().all(|x| x.is_finite()) {
        return Err(CoreError::Other("non-finite tangent Jacobian".into()));
    }
    Ok(TangentFlowState {
        jacobian: jac,
        dt: path.dt,
        coeffs,
        pairings,
        series,
    })
}

/// ∫ γ(q_s, p_s) ds along a saved trajectory, by the trapezoid rule.
pub fn gamma_path_integral<G>(states: &[PhasePoint], dt: f64, gamma: G) -> Result<f64>
where
    G: Fn(f64, f64) -> Result<f64>,
{
    let mut acc = 0.0;
    for pair in states.windows(2) {
        acc += 0.5 * (gamma(pair[0].q, pair[0].p)? + gamma(pair[1].q, pair[1].p)?) * dt;
    }
    Ok(acc)
}

/// Rectangular phase-space binning.
#[derive(Clone, Copy, Debug)]
pub struct BinGrid {
    pub q_lo: f64,
    pub q_hi: f64,
    pub p_lo: f64,
    pub p_hi: f64,
    pub nq: usize,
    pub np: usize,
}

impl BinGrid {
    fn index(&self, q: f64, p: f64) -> Option<usize> {
        if !(q >= self.q_lo && q < self.q_hi && p >= self.p_lo && p < self.p_hi) {
            return None;
        }
        let i = ((q - self.q_lo) / (self.q_hi - self.q_lo) * self.nq as f64) as usize;
        let j = ((p - self.p_lo) / (self.p_hi - self.p_lo) * self.np as f64) as usize;
        Some(i.min(self.nq - 1) * self.np + j.min(self.np - 1))
    }

    pub fn n_bins(&self) -> usize {
        self.nq * self.np
    }
}

/// Accumulated statistics of one bin: sample means and variances of up to
/// two response components, plus the mean sample position.
#[derive(Clone, Copy, Debug, Default)]
pub struct BinStat {
    pub count: u64,
    pub mean_q: f64,
    pub mean_p: f64,
    pub mean: [f64; 2],
    m2: [f64; 2],
}

impl BinStat {
    fn push(&mut self, q: f64, p: f64, v: [f64; 2]) {
        self.count += 1;
        let n = self.count as f64;
        self.mean_q += (q - self.mean_q) / n;
        self.mean_p += (p - self.mean_p) / n;
        for i in 0..2 {
            let d = v[i] - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (v[i] - self.mean[i]);
        }
    }

    fn merge(mut self, other: &BinStat) -> BinStat {
        if other.count == 0 {
            return self;
        }
        if self.count == 0 {
            return *other;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        self.mean_q = (na * self.mean_q + nb * other.mean_q) / n;
        self.mean_p = (na * self.mean_p + nb * other.mean_p) / n;
        for i in 0..2 {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * nb / n;
            self.m2[i] += other.m2[i] + delta * delta * na * nb / n;
        }
        self.count += other.count;
        self
    }

    /// Standard error of the mean of component `i`.
    pub fn se(&self, i: usize) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        (self.m2[i] / (self.count - 1) as f64 / self.count as f64).sqrt()
    }
}

/// Threshold below which a bin is marked invalid.
pub const MIN_BIN_COUNT: u64 = 30;

/// Binned regression estimate of a conditional-increment field.
#[derive(Clone, Debug)]
pub struct FieldEstimate {
    pub grid: BinGrid,
    pub bins: Vec<BinStat>,
    /// Number of response components in use (2 for drift, 1 for covariation).
    pub components: usize,
}

impl FieldEstimate {
    pub fn valid_bins(&self) -> impl Iterator<Item = &BinStat> {
        self.bins.iter().filter(|b| b.count >= MIN_BIN_COUNT)
    }

    /// Fraction of valid bins whose estimate agrees with `target` (evaluated
    /// at the bin's mean sample point) within `k` standard errors in every
    /// component.
    pub fn fraction_within<T>(&self, k: f64, target: T) -> f64
    where
        T: Fn(f64, f64) -> [f64; 2],
    {
        let mut valid = 0usize;
        let mut pass = 0usize;
        for bin in self.valid_bins() {
            valid += 1;
            let t = target(bin.mean_q, bin.mean_p);
            let ok = (0..self.components).all(|i| {
                (bin.mean[i] - t[i]).abs() <= k * bin.se(i) + 1e-12
            });
            if ok {
                pass += 1;
            }
        }
        if valid == 0 {
            0.0
        } else {
            pass as f64 / valid as f64
        }
    }

    pub fn n_valid(&self) -> usize {
        self.valid_bins().count()
    }
}

/// 1%–99% percentile box of the early ensemble, used as the binning region.
fn percentile_box(system: &SdeSystem, spec: &EnsembleSpec) -> Result<BinGrid> {
    let pilot_paths = spec.n_paths.min(1024);
    let n_steps = spec.n_steps();
    let samples: Result<Vec<Vec<(f64, f64)>>> = (0..pilot_paths)
        .into_par_iter()
        .map(|i| {
            let noise =
                NoisePath::generate(spec.seed, i, system.n_channels(), n_steps, spec.dt);
            let mut states = Vec::with_capacity(n_steps);
            integrate_path_observed(system, spec.scheme, spec.x0(), &noise, |_, _, x, _, _| {
                states.push((x.q, x.p));
            })?;
            Ok(states)
        })
        .collect();
    let mut qs = Vec::new();
    let mut ps = Vec::new();
    for path in samples? {
        for (q, p) in path {
            qs.push(q);
            ps.push(p);
        }
    }
    let pct = |v: &mut Vec<f64>, frac: f64| -> f64 {
        let idx = ((v.len() - 1) as f64 * frac) as usize;
        *v.select_nth_unstable_by(idx, |a, b| a.partial_cmp(b).unwrap())
            .1
    };
    let (q_lo, q_hi) = (pct(&mut qs, 0.01), pct(&mut qs, 0.99));
    let (p_lo, p_hi) = (pct(&mut ps, 0.01), pct(&mut ps, 0.99));
    if !(q_hi > q_lo && p_hi > p_lo) {
        return Err(CoreError::InvalidConfig(
            "degenerate ensemble support; cannot bin".into(),
        ));
    }
    Ok(BinGrid {
        q_lo,
        q_hi,
        p_lo,
        p_hi,
        nq: 20,
        np: 20,
    })
}

fn estimate_field<F>(
    system: &SdeSystem,
    spec: &EnsembleSpec,
    components: usize,
    response: F,
) -> Result<FieldEstimate>
where
    F: Fn(PhasePoint, PhasePoint, f64) -> [f64; 2] + Sync,
{
    let grid = percentile_box(system, spec)?;
    let n_steps = spec.n_steps();
    let empty = || vec![BinStat::default(); grid.n_bins()];
    let bins = (0..spec.n_paths)
        .into_par_iter()
        .try_fold(empty, |mut local, i| {
            let noise =
                NoisePath::generate(spec.seed, i, system.n_channels(), n_steps, spec.dt);
            integrate_path_observed(system, spec.scheme, spec.x0(), &noise, |_, _, x, next, _| {
                if let Some(idx) = grid.index(x.q, x.p) {
                    local[idx].push(x.q, x.p, response(x, next, spec.dt));
                }
            })?;
            Ok::<_, CoreError>(local)
        })
        .try_reduce(empty, |a, b| {
            Ok(a.into_iter().zip(&b).map(|(x, y)| x.merge(y)).collect())
        })?;
    Ok(FieldEstimate {
        grid,
        bins,
        components,
    })
}

/// Binned estimate of the drift field E[Δx | x]/Δt.
pub fn empirical_drift(system: &SdeSystem, spec: &EnsembleSpec) -> Result<FieldEstimate> {
    estimate_field(system, spec, 2, |x, next, dt| {
        [(next.q - x.q) / dt, (next.p - x.p) / dt]
    })
}

/// Binned estimate of the quadratic covariation density E[Δq Δp | x]/Δt.
pub fn empirical_covariation(system: &SdeSystem, spec: &EnsembleSpec) -> Result<FieldEstimate> {
    estimate_field(system, spec, 1, |x, next, dt| {
        [(next.q - x.q) * (next.p - x.p) / dt, 0.0]
    })
}
