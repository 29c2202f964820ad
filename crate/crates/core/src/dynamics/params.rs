use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, DynamicsError};

/// Physical constants of a vehicle.
///
/// Wheel arrays follow the corner order `fl, fr, rl, rr`. Gear `n` selects
/// `gear_ratios[n - 1]` (overall ratio from engine to wheel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    /// Total mass `M` (kg).
    pub mass: f64,
    /// Yaw inertia `I_zz` (kg m^2).
    pub yaw_inertia: f64,
    /// CG to front axle `l_f` (m).
    pub l_f: f64,
    /// CG to rear axle `l_r` (m).
    pub l_r: f64,
    /// Average track width `t` (m).
    pub track: f64,
    /// Rolling radius per corner `r_w` (m).
    pub wheel_radius: [f64; 4],
    /// Wheel spin inertia `I_w` (kg m^2).
    pub wheel_inertia: f64,
    /// Brake gain `k_b` (N m / bar).
    pub brake_gain: f64,
    /// Overall gear ratios `Gamma(sigma)`.
    pub gear_ratios: Vec<f64>,
    /// CG height `h` (m), used by the load-transfer model.
    pub cg_height: f64,
    /// Gravity `g` (m/s^2).
    pub gravity: f64,
}

impl VehicleParams {
    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    pub fn gear_ratio(&self, gear: i64) -> Result<f64, DynamicsError> {
        if gear >= 1 && (gear as usize) <= self.gear_ratios.len() {
            Ok(self.gear_ratios[gear as usize - 1])
        } else {
            Err(DynamicsError::UnknownGear {
                gear,
                available: self.gear_ratios.len(),
            })
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let scalars = [
            ("mass", self.mass),
            ("yaw_inertia", self.yaw_inertia),
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("track", self.track),
            ("wheel_inertia", self.wheel_inertia),
            ("brake_gain", self.brake_gain),
            ("cg_height", self.cg_height),
            ("gravity", self.gravity),
        ];
        for (name, v) in scalars {
            positive(name, v)?;
        }
        for r in self.wheel_radius {
            positive("wheel_radius", r)?;
        }
        if self.gear_ratios.is_empty() {
            return Err(invalid("gear_ratios", "table is empty"));
        }
        for g in &self.gear_ratios {
            positive("gear_ratios", *g)?;
        }
        Ok(())
    }
}

/// One axis of the simplified Pacejka magic formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacejkaAxis {
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl PacejkaAxis {
    pub fn validate(&self, axis: &str) -> Result<(), DynamicsError> {
        positive(&format!("{axis}.b"), self.b)?;
        positive(&format!("{axis}.c"), self.c)?;
        positive(&format!("{axis}.d"), self.d)?;
        if !self.e.is_finite() {
            return Err(invalid(&format!("{axis}.e"), "must be finite"));
        }
        Ok(())
    }
}

/// Tire coefficients for both axes plus the low-speed guard `eps_v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TireCoeffs {
    pub longitudinal: PacejkaAxis,
    pub lateral: PacejkaAxis,
    /// Slip denominator floor (m/s).
    pub eps_v: f64,
}

impl TireCoeffs {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.longitudinal.validate("longitudinal")?;
        self.lateral.validate("lateral")?;
        positive("eps_v", self.eps_v)
    }
}

/// Effects that the plant model adds on top of the benchmark structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantEffects {
    /// Tire relaxation length (m). Zero disables the lag.
    pub relaxation_length: f64,
    /// Scale lateral force by the remaining longitudinal friction budget.
    pub friction_ellipse: bool,
    /// Cut-off of the first-order filter on the load-transfer accelerations
    /// (Hz). Zero means unfiltered, i.e. the benchmark load transfer.
    pub load_filter_hz: f64,
}

impl PlantEffects {
    /// All effects switched off: the plant reduces to the benchmark model.
    pub const NONE: PlantEffects = PlantEffects {
        relaxation_length: 0.0,
        friction_ellipse: false,
        load_filter_hz: 0.0,
    };

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.relaxation_length >= 0.0 && self.relaxation_length.is_finite()) {
            return Err(invalid("relaxation_length", "must be >= 0"));
        }
        if !(self.load_filter_hz >= 0.0 && self.load_filter_hz.is_finite()) {
            return Err(invalid("load_filter_hz", "must be >= 0"));
        }
        Ok(())
    }
}

impl Default for PlantEffects {
    fn default() -> Self {
        PlantEffects {
            relaxation_length: 0.3,
            friction_ellipse: true,
            load_filter_hz: 2.0,
        }
    }
}

/// Fixed-step integration settings shared by both models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integration {
    /// Sample period of the model as seen by the observer (s).
    pub dt: f64,
    /// Forward-Euler sub-steps per sample.
    pub substeps: u32,
}

impl Default for Integration {
    fn default() -> Self {
        Integration {
            dt: 0.01,
            substeps: 10,
        }
    }
}

/// A complete vehicle description as stored in a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub vehicle: VehicleParams,
    pub tires: TireCoeffs,
    #[serde(default)]
    pub plant: PlantEffects,
    #[serde(default)]
    pub integration: Integration,
}

const BENCHMARK_TOML: &str = include_str!("../../configs/vehicle_benchmark.toml");
const PLANT_TOML: &str = include_str!("../../configs/vehicle_plant.toml");

impl VehicleConfig {
    /// Parameter set of the simplified benchmark model (the "identified" car).
    pub fn default_benchmark() -> Self {
        Self::from_toml_str(BENCHMARK_TOML).expect("shipped benchmark config parses")
    }

    /// Parameter set of the higher-fidelity plant (the "true" car).
    pub fn default_plant() -> Self {
        Self::from_toml_str(PLANT_TOML).expect("shipped plant config parses")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        let cfg: VehicleConfig = toml::from_str(s).map_err(|e| ConfigError::Parse {
            path: "<inline>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
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

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.vehicle.validate()?;
        self.tires.validate()?;
        self.plant.validate()?;
        if !(self.integration.dt > 0.0) || self.integration.substeps == 0 {
            return Err(invalid("integration", "dt must be > 0 and substeps >= 1"));
        }
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<(), DynamicsError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, &format!("must be strictly positive, got {v}")))
    }
}

fn invalid(name: &str, reason: &str) -> DynamicsError {
    DynamicsError::InvalidParam {
        name: name.to_string(),
        reason: reason.to_string(),
    }
}
