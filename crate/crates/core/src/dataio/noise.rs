use std::path::Path;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelNoise {
    pub std: f64,
    #[serde(default)]
    pub bias: f64,
}

/// Measurement corruption per channel, keyed by dataset column name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub seed: u64,
    #[serde(default)]
    pub channels: IndexMap<String, ChannelNoise>,
}

impl NoiseSpec {
    /// No corruption at all.
    pub fn none() -> Self {
        NoiseSpec {
            seed: 0,
            channels: IndexMap::new(),
        }
    }

    /// Automotive-grade defaults: 0.05 m/s^2 on accelerations, 0.005 rad/s on
    /// yaw rate, 0.05 rad/s on wheel speeds.
    pub fn automotive(seed: u64) -> Self {
        let mut channels = IndexMap::new();
        let mut put = |name: &str, std: f64| {
            channels.insert(name.to_string(), ChannelNoise { std, bias: 0.0 });
        };
        put("meas_a_x", 0.05);
        put("meas_a_y", 0.05);
        put("meas_yaw_rate", 0.005);
        for c in ["fl", "fr", "rl", "rr"] {
            put(&format!("meas_omega_{c}"), 0.05);
        }
        NoiseSpec { seed, channels }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, n) in &self.channels {
            if !(n.std >= 0.0) || !n.std.is_finite() || !n.bias.is_finite() {
                return Err(ConfigError::Invalid(format!("noise on `{name}`: std must be >= 0")));
            }
        }
        Ok(())
    }

    /// Seed for the channel at `index`; streams never collide for one spec.
    pub fn channel_seed(&self, index: usize) -> u64 {
        self.seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let spec: NoiseSpec = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }
}

/// `channel + bias + N(0, std^2)`, reproducible for a given seed.
pub fn add_noise(channel: &[f64], std: f64, bias: f64, seed: u64) -> Vec<f64> {
    assert!(std >= 0.0, "noise std must be >= 0");
    if std == 0.0 {
        return channel.iter().map(|v| v + bias).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, std).expect("valid std");
    channel.iter().map(|v| v + bias + normal.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_is_identity() {
        let x = vec![1.0, -2.5, 3.25];
        assert_eq!(add_noise(&x, 0.0, 0.0, 1), x);
    }

    #[test]
    fn seeded_noise_repeats() {
        let x = vec![0.0; 100];
        assert_eq!(add_noise(&x, 0.3, 0.1, 42), add_noise(&x, 0.3, 0.1, 42));
        assert_ne!(add_noise(&x, 0.3, 0.1, 42), add_noise(&x, 0.3, 0.1, 43));
    }

    #[test]
    fn empirical_std_matches() {
        let n = 100_000;
        let y = add_noise(&vec![0.0; n], 0.1, 0.0, 7);
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let std = var.sqrt();
        assert!((0.099..=0.101).contains(&std), "std = {std}");
    }
}
