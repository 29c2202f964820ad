//! Run the observer against a predictor served over the line protocol and
//! check it against the in-process run.
//!
//!     cargo run --release --example xbridge_loopback

use simloop::dataio::{canonical_scenario, generate_dataset, NoiseSpec};
use simloop::dynamics::{VehicleConfig, VehicleModel};
use simloop::observer::{ModelPredictor, ObserverConfig, PredictorConfig, REFERENCE_GAINS};
use simloop::xbridge::LoopbackServer;

fn main() -> anyhow::Result<()> {
    let plant = VehicleModel::from_config(&VehicleConfig::default_plant());
    let mut lap = canonical_scenario("test_lap_4").expect("shipped scenario");
    lap.duration = 20.0;
    let ds = generate_dataset(&lap, &plant, &NoiseSpec::automotive(104), 204)?;

    let server = LoopbackServer::spawn(|| ModelPredictor::benchmark(&VehicleConfig::default_benchmark()))?;
    println!("benchmark model served on {}", server.address());

    let local = ObserverConfig::benchmark_default();
    let mut remote = local.clone();
    remote.predictor = PredictorConfig::from_selector(&format!("extern:{}", server.address()))?;

    let started = std::time::Instant::now();
    let a = local.run(&ds, &REFERENCE_GAINS)?;
    let t_local = started.elapsed();
    let b = remote.run(&ds, &REFERENCE_GAINS)?;
    let t_remote = started.elapsed() - t_local;

    let identical = a.x == b.x && a.z == b.z && a.y_pred == b.y_pred;
    println!("{} steps: in-process {t_local:.1?}, over the wire {t_remote:.1?}", a.len());
    println!("bit-identical: {identical}");
    assert!(identical);
    Ok(())
}
