//! Dataset schema, CSV persistence and twin-experiment generation.

mod dataset;
mod generate;
mod noise;
mod scenario;

pub use dataset::{
    force_truth_channels, input_channels, load_dataset, measurement_channels, required_channels, save_dataset,
    state_truth_channels, Dataset, Role, MEAS_PREFIX,
};
pub use generate::{generate_dataset, scenario_inputs};
pub use noise::{add_noise, ChannelNoise, NoiseSpec};
pub use scenario::{canonical_scenario, canonical_scenarios, Profile, Profiles, ScenarioSpec};
