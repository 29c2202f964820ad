use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::DriverInputs;
use crate::error::ConfigError;

/// Piecewise profile given as `[time, value]` breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Profile(pub Vec<[f64; 2]>);

impl Profile {
    pub fn constant(v: f64) -> Self {
        Profile(vec![[0.0, v]])
    }

    /// Linear interpolation, holding the end values outside the breakpoints.
    pub fn linear(&self, t: f64) -> f64 {
        let pts = &self.0;
        if t <= pts[0][0] {
            return pts[0][1];
        }
        for w in pts.windows(2) {
            let ([t0, v0], [t1, v1]) = (w[0], w[1]);
            if t <= t1 {
                return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
            }
        }
        pts[pts.len() - 1][1]
    }

    /// Zero-order hold: value of the last breakpoint at or before `t`.
    pub fn step(&self, t: f64) -> f64 {
        self.0
            .iter()
            .take_while(|p| p[0] <= t)
            .last()
            .unwrap_or(&self.0[0])[1]
    }

    fn validate(&self, name: &str) -> Result<(), ConfigError> {
        let pts = &self.0;
        if pts.is_empty() {
            return Err(ConfigError::Invalid(format!("profile `{name}` is empty")));
        }
        if pts[0][0] > 0.0 {
            return Err(ConfigError::Invalid(format!("profile `{name}` must start at t <= 0")));
        }
        if pts.windows(2).any(|w| !(w[1][0] > w[0][0])) {
            return Err(ConfigError::Invalid(format!("profile `{name}` breakpoints must increase")));
        }
        if pts.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ConfigError::Invalid(format!("profile `{name}` has non-finite values")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profiles {
    /// Front steer angle (rad), linear.
    pub steer: Profile,
    /// Front brake pressure (bar), linear.
    pub brake: Profile,
    /// Engine torque (N m), linear.
    pub engine_torque: Profile,
    /// Engaged gear, zero-order hold.
    pub gear: Profile,
}

/// Scripted maneuver driving the plant during dataset generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Duration (s).
    pub duration: f64,
    /// Initial forward speed (m/s); wheels start in pure rolling.
    pub initial_speed: f64,
    /// Rear brake pressure as a fraction of the front pressure.
    #[serde(default = "default_rear_ratio")]
    pub rear_brake_ratio: f64,
    /// Standard deviation of white steering noise added by the driver (rad).
    #[serde(default)]
    pub steer_noise: f64,
    pub profiles: Profiles,
}

fn default_rear_ratio() -> f64 {
    0.55
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration > 0.0) {
            return Err(ConfigError::Invalid("duration must be > 0".into()));
        }
        if !(self.initial_speed >= 0.0) {
            return Err(ConfigError::Invalid("initial_speed must be >= 0".into()));
        }
        if !(self.rear_brake_ratio >= 0.0) || !(self.steer_noise >= 0.0) {
            return Err(ConfigError::Invalid("rear_brake_ratio and steer_noise must be >= 0".into()));
        }
        let p = &self.profiles;
        p.steer.validate("steer")?;
        p.brake.validate("brake")?;
        p.engine_torque.validate("engine_torque")?;
        p.gear.validate("gear")?;
        if p.brake.0.iter().any(|b| b[1] < 0.0) {
            return Err(ConfigError::Invalid("brake pressure must be >= 0".into()));
        }
        Ok(())
    }

    /// Commanded inputs at time `t` (before driver noise).
    pub fn inputs_at(&self, t: f64) -> DriverInputs {
        let p = &self.profiles;
        let front = p.brake.linear(t).max(0.0);
        let rear = front * self.rear_brake_ratio;
        DriverInputs {
            steer: p.steer.linear(t),
            brake: [front, front, rear, rear],
            engine_torque: p.engine_torque.linear(t),
            gear: p.gear.step(t).round() as i64,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let spec: ScenarioSpec = toml::from_str(s).map_err(|e| ConfigError::Parse {
            path: "<inline>".into(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }
}

const CANONICAL: [(&str, &str); 5] = [
    ("training_lap", include_str!("../../configs/scenarios/training_lap.toml")),
    ("test_lap_1", include_str!("../../configs/scenarios/test_lap_1.toml")),
    ("test_lap_2", include_str!("../../configs/scenarios/test_lap_2.toml")),
    ("test_lap_3", include_str!("../../configs/scenarios/test_lap_3.toml")),
    ("test_lap_4", include_str!("../../configs/scenarios/test_lap_4.toml")),
];

/// The shipped maneuvers: one training lap followed by four test laps.
pub fn canonical_scenarios() -> Vec<ScenarioSpec> {
    CANONICAL
        .iter()
        .map(|(name, text)| {
            ScenarioSpec::from_toml_str(text).unwrap_or_else(|e| panic!("shipped scenario {name}: {e}"))
        })
        .collect()
}

pub fn canonical_scenario(name: &str) -> Option<ScenarioSpec> {
    canonical_scenarios().into_iter().find(|s| s.name == name)
}
