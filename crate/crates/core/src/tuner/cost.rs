use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{ConfigError, ObserverError, PredictorError, TuneError};
use crate::observer::{side_slip, EstimateTrace, ObserverConfig};

/// Weighted channels entering the tuning cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSpec {
    /// Simulator-state channels (`v_x`, `omega_fl`, ..., or `beta`).
    pub state_channels: Vec<String>,
    /// Extended channels (`f_x_fl`, ...).
    pub extended_channels: Vec<String>,
    /// One weight per channel, states first.
    pub weights: Vec<f64>,
}

/// Ground-truth series of a channel, `beta` derived from `v_x` and `v_y`.
pub fn truth_channel(dataset: &Dataset, name: &str) -> Result<Vec<f64>, TuneError> {
    if name == "beta" && dataset.channel("beta").is_err() {
        let vx = dataset.channel("v_x")?;
        let vy = dataset.channel("v_y")?;
        return Ok(vx.iter().zip(vy).map(|(a, b)| side_slip(*a, *b)).collect());
    }
    Ok(dataset.channel(name)?.to_vec())
}

/// `w_i = 1 / ||zeta_i||_2` over the full ground-truth series.
pub fn default_weights(dataset: &Dataset, channels: &[String]) -> Result<Vec<f64>, TuneError> {
    channels
        .iter()
        .map(|c| {
            let norm = truth_channel(dataset, c)?.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                Ok(1.0 / norm)
            } else {
                Err(TuneError::ZeroNormChannel(c.clone()))
            }
        })
        .collect()
}

impl CostSpec {
    /// Channels with weights from [`default_weights`].
    pub fn with_default_weights(
        dataset: &Dataset,
        state_channels: Vec<String>,
        extended_channels: Vec<String>,
    ) -> Result<Self, TuneError> {
        let all: Vec<String> = state_channels.iter().chain(&extended_channels).cloned().collect();
        let weights = default_weights(dataset, &all)?;
        Ok(CostSpec {
            state_channels,
            extended_channels,
            weights,
        })
    }

    /// The seven benchmark states and eight tire forces, default weights.
    pub fn benchmark(dataset: &Dataset) -> Result<Self, TuneError> {
        Self::with_default_weights(
            dataset,
            crate::dataio::state_truth_channels(),
            crate::dataio::force_truth_channels(),
        )
    }

    pub fn channels(&self) -> Vec<String> {
        self.state_channels.iter().chain(&self.extended_channels).cloned().collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let n = self.state_channels.len() + self.extended_channels.len();
        if n == 0 {
            return Err(ConfigError::Invalid("cost needs at least one channel".into()));
        }
        if self.weights.len() != n {
            return Err(ConfigError::Dimension {
                what: "cost weights".into(),
                expected: n,
                got: self.weights.len(),
            });
        }
        if let Some(w) = self.weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(ConfigError::Invalid(format!("cost weight {w} must be finite and >= 0")));
        }
        Ok(())
    }
}

/// Weighted sum of per-channel 2-norm errors of a finished run.
///
/// Trace row `i` is compared with dataset row `i + EstimateTrace::FIRST_ROW`.
pub fn cost_of_trace(trace: &EstimateTrace, dataset: &Dataset, spec: &CostSpec) -> Result<f64, TuneError> {
    spec.validate()?;
    let first = EstimateTrace::FIRST_ROW;
    let mut j = 0.0;
    for (name, w) in spec.channels().iter().zip(&spec.weights) {
        let est = trace
            .channel(name)
            .ok_or_else(|| ConfigError::UnknownLabel(format!("estimate channel `{name}`")))?;
        let truth = truth_channel(dataset, name)?;
        if truth.len() != est.len() + first {
            return Err(ConfigError::Dimension {
                what: format!("truth channel `{name}`"),
                expected: est.len() + first,
                got: truth.len(),
            }
            .into());
        }
        let err2: f64 = est.iter().zip(&truth[first..]).map(|(e, t)| (t - e).powi(2)).sum();
        j += w * err2.sqrt();
    }
    Ok(j)
}

/// Result of one cost evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum CostOutcome {
    Finite(f64),
    /// The observer blew up; the tuner substitutes a penalty.
    Diverged { step: usize, reason: String },
}

impl CostOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            CostOutcome::Finite(j) => Some(*j),
            CostOutcome::Diverged { .. } => None,
        }
    }
}

/// Numerical blow-ups count as divergence; everything else is fatal.
pub(crate) fn classify(err: ObserverError) -> Result<CostOutcome, ObserverError> {
    match err {
        ObserverError::Diverged { step, channel } => Ok(CostOutcome::Diverged {
            step,
            reason: format!("non-finite `{channel}`"),
        }),
        ObserverError::Predictor {
            step,
            source: PredictorError::Dynamics(e),
        } => Ok(CostOutcome::Diverged {
            step,
            reason: e.to_string(),
        }),
        other => Err(other),
    }
}

/// Run the observer with gains `k` and score it.
pub fn cost(k: &[f64], dataset: &Dataset, config: &ObserverConfig, spec: &CostSpec) -> Result<CostOutcome, TuneError> {
    match config.run(dataset, k) {
        Ok(trace) => {
            let j = cost_of_trace(&trace, dataset, spec)?;
            if j.is_finite() {
                Ok(CostOutcome::Finite(j))
            } else {
                Ok(CostOutcome::Diverged {
                    step: trace.len(),
                    reason: "non-finite cost".into(),
                })
            }
        }
        Err(e) => Ok(classify(e)?),
    }
}
