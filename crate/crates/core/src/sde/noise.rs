use serde::{Deserialize, Serialize};

/// splitmix64 finalizer; the core of the counter-based generator.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[inline]
fn unit_open(x: u64) -> f64 {
    // (0, 1]: avoids ln(0) in the Box-Muller transform.
    ((x >> 11) + 1) as f64 * (1.0 / 9007199254740992.0)
}

/// Standard normal draw addressed by (seed, path, channel, step).
pub fn standard_normal(seed: u64, path: u64, channel: u64, step: u64) -> f64 {
    let mut key = mix(seed);
    key = mix(key ^ path);
    key = mix(key ^ channel.wrapping_mul(0xd1342543de82ef95));
    key = mix(key ^ step.wrapping_mul(0xaf251af3b0f025b5));
    let u1 = unit_open(mix(key ^ 0x243f6a8885a308d3));
    let u2 = unit_open(mix(key ^ 0x13198a2e03707344));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Uniform draw on [0, 1) addressed the same way.
pub fn standard_uniform(seed: u64, path: u64, channel: u64, step: u64) -> f64 {
    let mut key = mix(seed ^ 0x5851f42d4c957f2d);
    key = mix(key ^ path);
    key = mix(key ^ channel.wrapping_mul(0xd1342543de82ef95));
    key = mix(key ^ step.wrapping_mul(0xaf251af3b0f025b5));
    (key >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// A canonically conjugate channel pair (Q, P) with its structural bracket
/// weight Γ. The weight never changes sampling: both members are sampled as
/// independent Wiener channels; Γ is consumed only by the extended-bracket
/// verification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticPair {
    pub q_channel: usize,
    pub p_channel: usize,
    pub gamma: f64,
}

/// Channel labels plus symplectic pairing metadata.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ChannelSet {
    pub labels: Vec<String>,
    pub pairings: Vec<SymplecticPair>,
}

impl ChannelSet {
    pub fn plain(labels: &[&str]) -> Self {
        ChannelSet {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            pairings: vec![],
        }
    }

    /// One (Q_j, P_j) pair per name, all sharing the bracket weight Γ.
    pub fn symplectic(pair_names: &[&str], gamma: f64) -> Self {
        let mut labels = Vec::new();
        let mut pairings = Vec::new();
        for name in pair_names {
            let q_channel = labels.len();
            labels.push(format!("Q_{name}"));
            labels.push(format!("P_{name}"));
            pairings.push(SymplecticPair {
                q_channel,
                p_channel: q_channel + 1,
                gamma,
            });
        }
        ChannelSet { labels, pairings }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-path Wiener increments for every channel.
#[derive(Clone, Debug)]
pub struct NoisePath {
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    pub path_index: u64,
    /// `increments[channel][step]`, each ~ N(0, dt).
    pub increments: Vec<Vec<f64>>,
}

impl NoisePath {
    pub fn generate(seed: u64, path_index: u64, n_channels: usize, n_steps: usize, dt: f64) -> Self {
        let sqrt_dt = dt.sqrt();
        let increments = (0..n_channels)
            .map(|c| {
                (0..n_steps)
                    .map(|k| sqrt_dt * standard_normal(seed, path_index, c as u64, k as u64))
                    .collect()
            })
            .collect();
        NoisePath {
            dt,
            n_steps,
            seed,
            path_index,
            increments,
        }
    }

    pub fn n_channels(&self) -> usize {
        self.increments.len()
    }

    /// Increments of all channels at one step.
    pub fn at_step(&self, step: usize) -> Vec<f64> {
        self.increments.iter().map(|ch| ch[step]).collect()
    }

    /// Cumulative path value of one channel at step boundaries
    /// (length n_steps + 1, starting at 0).
    pub fn cumulative(&self, channel: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_steps + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for dw in &self.increments[channel] {
            acc += dw;
            out.push(acc);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_keys_reproduce_identical_paths() {
        let a = NoisePath::generate(42, 7, 3, 100, 1e-3);
        let b = NoisePath::generate(42, 7, 3, 100, 1e-3);
        assert_eq!(a.increments, b.increments);
        let c = NoisePath::generate(42, 8, 3, 100, 1e-3);
        assert_ne!(a.increments, c.increments);
    }

    #[test]
    fn increments_have_wiener_statistics() {
        let dt = 0.01;
        let n = 200_000usize;
        let path = NoisePath::generate(1234, 0, 2, n, dt);
        for ch in 0..2 {
            let xs = &path.increments[ch];
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64 - mean * mean;
            // mean ~ N(0, dt/n): allow 5 sigma
            assert!(mean.abs() < 5.0 * (dt / n as f64).sqrt(), "mean {mean}");
            assert!((var / dt - 1.0).abs() < 0.02, "variance ratio {}", var / dt);
        }
        // distinct channels (including a symplectic pair's Q and P members)
        // are independent
        let corr: f64 = path.increments[0]
            .iter()
            .zip(&path.increments[1])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / (n as f64 * dt);
        assert!(corr.abs() < 0.02, "cross correlation {corr}");
    }

    #[test]
    fn any_increment_is_addressable() {
        let path = NoisePath::generate(9, 3, 2, 50, 0.25);
        let direct = 0.5 * standard_normal(9, 3, 1, 17);
        assert_eq!(path.increments[1][17], direct);
    }
}
