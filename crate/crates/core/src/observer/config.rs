use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::gain::{benchmark_template, GainMatrix, GainTemplate};
use super::predictor::{ModelPredictor, Predictor};
use crate::dynamics::VehicleConfig;
use crate::error::{ConfigError, PredictorError};
use crate::xbridge::RemotePredictor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorKind {
    Benchmark,
    Plant,
    Extern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorConfig {
    pub kind: PredictorKind,
    /// Vehicle TOML, relative to the observer config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle_file: Option<PathBuf>,
    /// Inline vehicle description; takes the place of `vehicle_file` once resolved.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleConfig>,
    /// `tcp:host:port`, `unix:/path` or `exec:command args` for external predictors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<String>,
    /// Per-message timeout of external predictors (s).
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

fn default_timeout() -> f64 {
    5.0
}

impl PredictorConfig {
    pub fn of_kind(kind: PredictorKind) -> Self {
        PredictorConfig {
            kind,
            vehicle_file: None,
            vehicle: None,
            address: None,
            timeout_s: default_timeout(),
        }
    }

    /// Parse the `benchmark | plant | extern:<address>` shorthand.
    pub fn from_selector(selector: &str) -> Result<Self, ConfigError> {
        match selector {
            "benchmark" => Ok(Self::of_kind(PredictorKind::Benchmark)),
            "plant" => Ok(Self::of_kind(PredictorKind::Plant)),
            s => match s.strip_prefix("extern:") {
                Some(addr) if !addr.is_empty() => Ok(PredictorConfig {
                    address: Some(addr.to_string()),
                    ..Self::of_kind(PredictorKind::Extern)
                }),
                _ => Err(ConfigError::Invalid(format!(
                    "predictor must be `benchmark`, `plant` or `extern:<address>`, got `{s}`"
                ))),
            },
        }
    }
}

/// How the observer's first state is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// First dataset sample of every state channel found there, zero otherwise.
    #[default]
    FromTruth,
    Zero,
    Explicit {
        x: Vec<f64>,
        #[serde(default)]
        dz: Option<Vec<f64>>,
    },
}

/// Everything needed to run the observer on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    /// Sample period (s); must equal the dataset's.
    pub dt: f64,
    /// Gain parameter values in template order. Optional until tuned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    pub predictor: PredictorConfig,
    #[serde(default)]
    pub initial_state: InitialState,
    pub gain: GainTemplate,
}

impl ObserverConfig {
    /// Benchmark predictor, benchmark template, initial state from truth.
    pub fn benchmark_default() -> Self {
        ObserverConfig {
            dt: 0.01,
            values: None,
            predictor: PredictorConfig::of_kind(PredictorKind::Benchmark),
            initial_state: InitialState::FromTruth,
            gain: benchmark_template(),
        }
    }

    /// Parse and resolve; `base` anchors a relative `vehicle_file`.
    pub fn from_toml_str(text: &str, base: Option<&Path>) -> Result<Self, ConfigError> {
        let mut cfg: ObserverConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: base.map(Path::to_path_buf).unwrap_or_else(|| "<inline>".into()),
            message: e.to_string(),
        })?;
        cfg.resolve(base)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, Some(dir)).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    /// Inline the vehicle file and validate.
    pub fn resolve(&mut self, base: Option<&Path>) -> Result<(), ConfigError> {
        if let Some(file) = self.predictor.vehicle_file.take() {
            if self.predictor.vehicle.is_some() {
                return Err(ConfigError::Invalid("give either `vehicle_file` or `vehicle`, not both".into()));
            }
            let path = match base {
                Some(dir) if file.is_relative() => dir.join(&file),
                _ => file,
            };
            self.predictor.vehicle = Some(VehicleConfig::load(&path)?);
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ConfigError::Invalid("dt must be > 0".into()));
        }
        self.gain.validate()?;
        if let Some(v) = &self.values {
            if v.len() != self.gain.params.len() {
                return Err(ConfigError::Dimension {
                    what: "gain values".into(),
                    expected: self.gain.params.len(),
                    got: v.len(),
                });
            }
        }
        if self.predictor.kind == PredictorKind::Extern && self.predictor.address.is_none() {
            return Err(ConfigError::Invalid("extern predictor needs an `address`".into()));
        }
        if !(self.predictor.timeout_s > 0.0) {
            return Err(ConfigError::Invalid("timeout_s must be > 0".into()));
        }
        if let Some(v) = &self.predictor.vehicle {
            v.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Vehicle used by in-process predictors, clocked at `dt`.
    pub fn vehicle_config(&self) -> VehicleConfig {
        let mut v = match (&self.predictor.vehicle, self.predictor.kind) {
            (Some(v), _) => v.clone(),
            (None, PredictorKind::Plant) => VehicleConfig::default_plant(),
            (None, _) => VehicleConfig::default_benchmark(),
        };
        v.integration.dt = self.dt;
        v
    }

    /// A fresh predictor instance, confined to one run.
    pub fn build_predictor(&self) -> Result<Box<dyn Predictor + Send>, PredictorError> {
        Ok(match self.predictor.kind {
            PredictorKind::Benchmark => Box::new(ModelPredictor::benchmark(&self.vehicle_config())),
            PredictorKind::Plant => Box::new(ModelPredictor::plant(&self.vehicle_config())),
            PredictorKind::Extern => {
                let addr = self.predictor.address.as_deref().expect("validated");
                let timeout = Duration::from_secs_f64(self.predictor.timeout_s);
                Box::new(RemotePredictor::connect(addr, timeout)?)
            }
        })
    }

    /// Gain for `k` laid out on the predictor's augmented rows and outputs.
    pub fn gain_for(&self, predictor: &dyn Predictor, k: &[f64]) -> Result<GainMatrix, ConfigError> {
        let labels = predictor.labels();
        self.gain.assemble(k, &labels.augmented(), &labels.output)
    }

    pub fn values(&self) -> Result<&[f64], ConfigError> {
        self.values
            .as_deref()
            .ok_or_else(|| ConfigError::Invalid("observer config has no gain `values`".into()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("observer config serializes")
    }
}
