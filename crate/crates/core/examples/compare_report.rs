//! Score several estimators on one lap and write the report files: bar-chart
//! CSV, normalized spider-plot CSV and a text summary.
//!
//!     cargo run --release --example compare_report -- /tmp/report

use std::path::PathBuf;

use simloop::dataio::{canonical_scenario, generate_dataset, NoiseSpec};
use simloop::dynamics::{VehicleConfig, VehicleModel};
use simloop::harness::{compare_report, summary_text, write_report, Contender};
use simloop::observer::{ObserverConfig, PredictorConfig, REFERENCE_GAINS};

fn main() -> anyhow::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("simloop_report"));
    let plant = VehicleModel::from_config(&VehicleConfig::default_plant());
    let lap = canonical_scenario("test_lap_3").expect("shipped scenario");
    let ds = generate_dataset(&lap, &plant, &NoiseSpec::automotive(103), 203)?;

    let bench = ObserverConfig::benchmark_default();
    let mut with_plant = bench.clone();
    with_plant.predictor = PredictorConfig::from_selector("plant")?;

    let runs = [
        ("benchmark_open_loop", &bench, vec![0.0; 5]),
        ("benchmark_observer", &bench, REFERENCE_GAINS.to_vec()),
        ("plant_observer", &with_plant, REFERENCE_GAINS.to_vec()),
    ];
    let mut contenders = Vec::new();
    for (name, cfg, k) in runs {
        contenders.push(Contender {
            name: name.into(),
            predictor_id: format!("{:?}", cfg.predictor.kind).to_lowercase(),
            trace: cfg.run(&ds, &k)?,
            gains: Some(k),
        });
    }

    let reports = compare_report(&contenders, &ds, &lap.name)?;
    write_report(&reports, &out)?;
    print!("{}", summary_text(&reports));
    println!("report files in {}", out.display());
    Ok(())
}
