use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::dataset::{Dataset, MEAS_PREFIX};
use super::noise::{add_noise, NoiseSpec};
use super::scenario::ScenarioSpec;
use crate::dynamics::{
    ChassisState, DriverInputs, PlantState, VehicleModel, FORCE_LABELS, INPUT_LABELS, OUTPUT_LABELS, STATE_LABELS,
};
use crate::error::DataError;

/// Commanded inputs for every sample, including seeded driver noise.
pub fn scenario_inputs(scenario: &ScenarioSpec, dt: f64, samples: usize, seed: u64) -> Vec<DriverInputs> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = (scenario.steer_noise > 0.0).then(|| Normal::new(0.0, scenario.steer_noise).unwrap());
    (0..samples)
        .map(|k| {
            let mut u = scenario.inputs_at(k as f64 * dt);
            if let Some(n) = &jitter {
                u.steer += n.sample(&mut rng);
            }
            u
        })
        .collect()
}

/// Roll the plant over a scenario and record clean truth plus noisy sensors.
///
/// Row `k` holds the input applied over `[t_k, t_k+1)`, the state at `t_k`,
/// and the outputs and tire forces evaluated at `t_k` with the input held
/// over the previous interval (row 0 uses its own input).
pub fn generate_dataset(
    scenario: &ScenarioSpec,
    plant: &VehicleModel,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Dataset, DataError> {
    scenario.validate().map_err(|e| DataError::Csv(e.to_string()))?;
    noise.validate().map_err(|e| DataError::Csv(e.to_string()))?;
    let dt = plant.integration.dt;
    let samples = (scenario.duration / dt).round() as usize + 1;
    let inputs = scenario_inputs(scenario, dt, samples, seed);

    let r0 = plant.params.wheel_radius;
    let mut state = PlantState::from_chassis(ChassisState {
        v_x: scenario.initial_speed,
        omega: [0, 1, 2, 3].map(|i| scenario.initial_speed / r0[i]),
        ..Default::default()
    });

    let mut states = Vec::with_capacity(samples);
    let mut outputs = Vec::with_capacity(samples);
    let mut forces = Vec::with_capacity(samples);
    let mut clamps = 0u64;

    let (y0, eval0) = plant.observe(&state, &inputs[0]);
    states.push(state.chassis.to_array());
    outputs.push(y0.to_array());
    forces.push(eval0.model_forces);
    for k in 1..samples {
        let step = plant
            .step(&state, &inputs[k - 1], &[0.0; 8])
            .map_err(|source| DataError::PlantDiverged {
                time: k as f64 * dt,
                source,
            })?;
        clamps += step.clamped as u64;
        state = step.next;
        states.push(state.chassis.to_array());
        outputs.push(step.outputs.to_array());
        forces.push(step.model_forces);
    }

    let time: Vec<f64> = (0..samples).map(|k| k as f64 * dt).collect();
    let mut ds = Dataset::new(dt, time);
    for (j, name) in INPUT_LABELS.iter().enumerate() {
        ds.insert(*name, inputs.iter().map(|u| u.to_array()[j]).collect());
    }
    for (j, name) in OUTPUT_LABELS.iter().enumerate() {
        let column = format!("{MEAS_PREFIX}{name}");
        let clean: Vec<f64> = outputs.iter().map(|y| y[j]).collect();
        let noisy = match noise.channels.get(&column) {
            Some(n) => add_noise(&clean, n.std, n.bias, noise.channel_seed(j)),
            None => clean,
        };
        ds.insert(column, noisy);
    }
    for (j, name) in STATE_LABELS.iter().enumerate() {
        ds.insert(*name, states.iter().map(|x| x[j]).collect());
    }
    for (j, name) in FORCE_LABELS.iter().enumerate() {
        ds.insert(*name, forces.iter().map(|f| f[j]).collect());
    }

    let md = &mut ds.metadata;
    md.insert("scenario".into(), scenario.name.clone());
    md.insert("seed".into(), seed.to_string());
    md.insert("noise_seed".into(), noise.seed.to_string());
    let noise_desc: Vec<String> = noise
        .channels
        .iter()
        .map(|(k, n)| format!("{k}={}/{}", n.std, n.bias))
        .collect();
    md.insert("noise".into(), if noise_desc.is_empty() { "none".into() } else { noise_desc.join(";") });
    md.insert("load_clamps".into(), clamps.to_string());
    Ok(ds)
}
