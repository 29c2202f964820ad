//! Twin-experiment data: roll the plant over the training lap, add sensor
//! noise and save the dataset.
//!
//!     cargo run --release --example generate_dataset -- /tmp/training.csv

use std::path::PathBuf;

use simloop::dataio::{canonical_scenario, generate_dataset, load_dataset, save_dataset, NoiseSpec, Role};
use simloop::dynamics::{VehicleConfig, VehicleModel};

fn main() -> anyhow::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("simloop_training.csv"));

    let scenario = canonical_scenario("training_lap").expect("shipped scenario");
    let plant = VehicleModel::from_config(&VehicleConfig::default_plant());
    let ds = generate_dataset(&scenario, &plant, &NoiseSpec::automotive(11), 7)?;
    save_dataset(&ds, &out)?;

    let back = load_dataset(&out, Role::Training)?;
    assert_eq!(back, ds, "CSV round trip is lossless");

    let vx = ds.channel("v_x")?;
    let ay = ds.channel("meas_a_y")?;
    println!("{} samples at dt = {} s -> {}", ds.len(), ds.dt, out.display());
    println!(
        "v_x {:.1}..{:.1} m/s, peak |a_y| {:.2} m/s^2",
        vx.iter().copied().fold(f64::INFINITY, f64::min),
        vx.iter().copied().fold(0.0, f64::max),
        ay.iter().map(|a| a.abs()).fold(0.0, f64::max)
    );
    for (k, v) in &ds.metadata {
        println!("  {k}: {v}");
    }
    Ok(())
}
