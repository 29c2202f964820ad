//! The benchmark model run open loop against the closed-loop observer with
//! the reference gains, on a held-out lap.
//!
//!     cargo run --release --example open_loop_vs_observer

use simloop::dataio::{canonical_scenario, generate_dataset, NoiseSpec};
use simloop::dynamics::{VehicleConfig, VehicleModel};
use simloop::harness::{rmse, REPORT_CHANNELS};
use simloop::observer::{EstimateTrace, ObserverConfig, REFERENCE_GAINS};
use simloop::tuner::truth_channel;

fn main() -> anyhow::Result<()> {
    let plant = VehicleModel::from_config(&VehicleConfig::default_plant());
    let lap = canonical_scenario("test_lap_2").expect("shipped scenario");
    let ds = generate_dataset(&lap, &plant, &NoiseSpec::automotive(102), 202)?;

    let cfg = ObserverConfig::benchmark_default();
    let open = cfg.run(&ds, &[0.0; 5])?;
    let closed = cfg.run(&ds, &REFERENCE_GAINS)?;

    println!("{:<8} {:>12} {:>12} {:>7}", "channel", "open loop", "observer", "ratio");
    for name in REPORT_CHANNELS {
        let truth = &truth_channel(&ds, name)?[EstimateTrace::FIRST_ROW..];
        let a = rmse(&open.channel(name).expect("channel"), truth)?;
        let b = rmse(&closed.channel(name).expect("channel"), truth)?;
        println!("{name:<8} {a:>12.4} {b:>12.4} {:>7.3}", b / a);
    }
    Ok(())
}
