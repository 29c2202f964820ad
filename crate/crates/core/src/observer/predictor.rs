use crate::dynamics::{
    ChassisState, DriverInputs, PlantEffects, PlantState, VehicleConfig, VehicleModel, FORCE_LABELS,
    INPUT_LABELS, OUTPUT_LABELS, PLANT_EXTRA_LABELS, STATE_LABELS,
};
use crate::error::{ConfigError, PredictorError};

/// Channel names a predictor declares for its vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelLabels {
    /// Simulator state `x`.
    pub state: Vec<String>,
    /// Measured outputs `y`.
    pub output: Vec<String>,
    /// Extended outputs `z` (one extended state per entry).
    pub extended: Vec<String>,
    /// Inputs `u`.
    pub input: Vec<String>,
}

fn owned(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

impl ChannelLabels {
    pub fn benchmark() -> Self {
        ChannelLabels {
            state: owned(&STATE_LABELS),
            output: owned(&OUTPUT_LABELS),
            extended: owned(&FORCE_LABELS),
            input: owned(&INPUT_LABELS),
        }
    }

    pub fn plant() -> Self {
        let mut labels = Self::benchmark();
        labels.state.extend(owned(&PLANT_EXTRA_LABELS));
        labels
    }

    /// Rows of the augmented vector: states then extended states.
    pub fn augmented(&self) -> Vec<String> {
        self.state.iter().chain(&self.extended).cloned().collect()
    }

    /// `(n_x, p, n_z)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.state.len(), self.output.len(), self.extended.len())
    }
}

/// One predictor step: `x~(k)`, `y~(k)` (evaluated at `x~(k)`) and `z~(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

/// A black-box vehicle simulator that can be advanced one sample at a time.
///
/// `step(x, u, dz)` advances from the corrected state `x` under input `u`,
/// applying `dz` as additive offsets on the extended outputs. `z` in the
/// returned prediction excludes those offsets.
pub trait Predictor {
    fn labels(&self) -> &ChannelLabels;
    fn step(&mut self, x: &[f64], u: &[f64], dz: &[f64]) -> Result<Prediction, PredictorError>;
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn labels(&self) -> &ChannelLabels {
        (**self).labels()
    }
    fn step(&mut self, x: &[f64], u: &[f64], dz: &[f64]) -> Result<Prediction, PredictorError> {
        (**self).step(x, u, dz)
    }
}

/// In-process predictor backed by [`VehicleModel`].
///
/// The benchmark variant exposes the 7 chassis states and runs without plant
/// effects; the plant variant also exposes the plant's internal memory.
#[derive(Debug, Clone)]
pub struct ModelPredictor {
    model: VehicleModel,
    full_state: bool,
    labels: ChannelLabels,
}

impl ModelPredictor {
    pub fn benchmark(cfg: &VehicleConfig) -> Self {
        let mut model = VehicleModel::from_config(cfg);
        if model.effects != PlantEffects::NONE {
            log::warn!("benchmark predictor ignores the plant effects of its vehicle config");
            model.effects = PlantEffects::NONE;
        }
        ModelPredictor {
            model,
            full_state: false,
            labels: ChannelLabels::benchmark(),
        }
    }

    pub fn plant(cfg: &VehicleConfig) -> Self {
        ModelPredictor {
            model: VehicleModel::from_config(cfg),
            full_state: true,
            labels: ChannelLabels::plant(),
        }
    }

    pub fn model(&self) -> &VehicleModel {
        &self.model
    }
}

fn check_len(what: &str, expected: usize, got: usize) -> Result<(), PredictorError> {
    if expected != got {
        return Err(ConfigError::Dimension {
            what: what.to_string(),
            expected,
            got,
        }
        .into());
    }
    Ok(())
}

impl Predictor for ModelPredictor {
    fn labels(&self) -> &ChannelLabels {
        &self.labels
    }

    fn step(&mut self, x: &[f64], u: &[f64], dz: &[f64]) -> Result<Prediction, PredictorError> {
        let (nx, _, nz) = self.labels.dims();
        check_len("x", nx, x.len())?;
        check_len("u", self.labels.input.len(), u.len())?;
        check_len("dz", nz, dz.len())?;
        let state = if self.full_state {
            PlantState::from_slice(x)
        } else {
            PlantState::from_chassis(ChassisState::from_slice(x))
        };
        let mut offsets = [0.0; 8];
        offsets.copy_from_slice(dz);
        let r = self.model.step(&state, &DriverInputs::from_slice(u), &offsets)?;
        let x = if self.full_state {
            r.next.to_vec()
        } else {
            r.next.chassis.to_array().to_vec()
        };
        Ok(Prediction {
            x,
            y: r.outputs.to_array().to_vec(),
            z: r.model_forces.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::step_benchmark;

    #[test]
    fn benchmark_predictor_matches_step_benchmark() {
        let cfg = VehicleConfig::default_benchmark();
        let mut p = ModelPredictor::benchmark(&cfg);
        let x = ChassisState {
            v_x: 21.0,
            v_y: 0.2,
            yaw_rate: 0.1,
            omega: [65.5, 65.8, 66.0, 66.2],
        };
        let u = DriverInputs {
            steer: 0.02,
            brake: [0.0; 4],
            engine_torque: 120.0,
            gear: 3,
        };
        // One sample of the predictor equals `substeps` single Euler steps.
        let h = cfg.integration.dt / cfg.integration.substeps as f64;
        let mut s = x;
        let mut last = None;
        for _ in 0..cfg.integration.substeps {
            let r = step_benchmark(&s, &u, &cfg.vehicle, &cfg.tires, h).unwrap();
            s = r.next;
            last = Some(r);
        }
        let last = last.unwrap();
        let pred = p.step(&x.to_array(), &u.to_array(), &[0.0; 8]).unwrap();
        assert_eq!(pred.x, s.to_array().to_vec());
        assert_eq!(pred.y, last.outputs.to_array().to_vec());
        assert_eq!(pred.z, last.model_forces.to_vec());
    }

    #[test]
    fn dimension_errors() {
        let mut p = ModelPredictor::plant(&VehicleConfig::default_plant());
        assert_eq!(p.labels().dims(), (17, 7, 8));
        assert!(matches!(
            p.step(&[0.0; 7], &[0.0; 7], &[0.0; 8]),
            Err(PredictorError::Config(ConfigError::Dimension { .. }))
        ));
    }
}
