//! Tune the benchmark observer on the training lap and check the gains on
//! the four held-out laps.
//!
//!     cargo run --release --example tune_benchmark_observer -- [n_iter]

use simloop::dataio::{canonical_scenario, generate_dataset, NoiseSpec};
use simloop::dynamics::{VehicleConfig, VehicleModel};
use simloop::observer::ObserverConfig;
use simloop::tuner::{cost_of_trace, tune, CostSpec, TuneConfig};

fn main() -> anyhow::Result<()> {
    let n_iter = std::env::args().nth(1).map_or(Ok(100), |s| s.parse())?;
    let plant = VehicleModel::from_config(&VehicleConfig::default_plant());
    let training = canonical_scenario("training_lap").expect("shipped scenario");
    let ds = generate_dataset(&training, &plant, &NoiseSpec::automotive(11), 7)?;

    let observer = ObserverConfig::benchmark_default();
    let spec = CostSpec::benchmark(&ds)?;
    let config = TuneConfig {
        n_iter,
        ..TuneConfig::default()
    };
    let started = std::time::Instant::now();
    let result = tune(&ds, &observer, &spec, &config)?;
    println!("{} evaluations in {:.1?}", result.history.len(), started.elapsed());
    print!("{}", result.fragment());

    for i in 1..=4 {
        let lap = canonical_scenario(&format!("test_lap_{i}")).expect("shipped scenario");
        let test = generate_dataset(&lap, &plant, &NoiseSpec::automotive(100 + i), 200 + i)?;
        let spec = CostSpec::benchmark(&test)?;
        let open = cost_of_trace(&observer.run(&test, &[0.0; 5])?, &test, &spec)?;
        let tuned = cost_of_trace(&observer.run(&test, &result.best_k)?, &test, &spec)?;
        println!("test_lap_{i}: cost {open:.3} open loop, {tuned:.3} tuned");
    }
    Ok(())
}
