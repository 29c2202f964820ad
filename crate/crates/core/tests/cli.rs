//! The `simloop` binary: verbs, exit codes and served predictors.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use simloop::dataio::{canonical_scenario, generate_dataset, load_dataset, NoiseSpec, Role};
use simloop::dynamics::{VehicleConfig, VehicleModel};
use simloop::observer::{ObserverConfig, PredictorConfig, REFERENCE_GAINS};

fn simloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simloop")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn short_dataset() -> simloop::dataio::Dataset {
    let mut lap = canonical_scenario("test_lap_1").unwrap();
    lap.duration = 10.0;
    let plant = VehicleModel::from_config(&VehicleConfig::default_plant());
    generate_dataset(&lap, &plant, &NoiseSpec::automotive(1), 1).unwrap()
}

#[test]
fn help_lists_every_verb() {
    let out = simloop(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for verb in ["generate", "tune", "estimate", "evaluate", "compare", "serve"] {
        assert!(text.contains(verb), "missing `{verb}` in help");
    }
}

#[test]
fn errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = out_dir.to_str().unwrap();
    let observer = configs().join("observer_benchmark.toml");
    let observer = observer.to_str().unwrap();

    let missing = simloop(&["estimate", "--dataset", "/nonexistent.csv", "--observer-config", observer, "--out", out]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent.csv"));

    let bad_scenario = simloop(&["generate", "--scenario", "no_such_lap", "--out", out]);
    assert!(!bad_scenario.status.success());

    let ds = simloop(&["generate", "--scenario", "training_lap", "--noise", "none", "--out", out]);
    assert!(ds.status.success());
    let data = out_dir.join("dataset.csv");
    let bad_predictor = simloop(&[
        "estimate", "--dataset", data.to_str().unwrap(), "--observer-config", observer,
        "--predictor", "quantum", "--out", out,
    ]);
    assert!(!bad_predictor.status.success());
    assert!(String::from_utf8_lossy(&bad_predictor.stderr).contains("quantum"));
}

#[test]
fn generate_copies_resolved_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gen");
    let scenario = configs().join("scenarios/test_lap_3.toml");
    let noise = configs().join("noise_automotive.toml");
    let status = simloop(&[
        "generate",
        "--scenario", scenario.to_str().unwrap(),
        "--noise", noise.to_str().unwrap(),
        "--vehicle", configs().join("vehicle_plant.toml").to_str().unwrap(),
        "--seed", "4",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["dataset.csv", "scenario.toml", "noise.toml", "vehicle.toml", "run.toml"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let ds = load_dataset(&out.join("dataset.csv"), Role::Training).unwrap();
    assert_eq!(ds.metadata["scenario"], "test_lap_3");
    assert_eq!(ds.metadata["seed"], "4");
    assert_eq!(ds.len(), 6001);
}

#[test]
fn exec_predictor_matches_in_process() {
    let ds = short_dataset();
    let local = ObserverConfig::benchmark_default();
    let mut remote = local.clone();
    let address = format!("extern:exec:{} serve --listen stdio", env!("CARGO_BIN_EXE_simloop"));
    remote.predictor = PredictorConfig::from_selector(&address).unwrap();
    let a = local.run(&ds, &REFERENCE_GAINS).unwrap();
    let b = remote.run(&ds, &REFERENCE_GAINS).unwrap();
    assert_eq!(a, b);
}

#[cfg(unix)]
#[test]
fn unix_socket_server_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let socket = dir.path().join("plant.sock");
    let listen = format!("unix:{}", socket.display());
    let mut child = Command::new(env!("CARGO_BIN_EXE_simloop"))
        .args(["serve", "--listen", &listen, "--predictor", "plant"])
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let started = Instant::now();
    while !socket.exists() && started.elapsed() < Duration::from_secs(10) {
        std::thread::sleep(Duration::from_millis(20));
    }

    let ds = short_dataset();
    let mut local = ObserverConfig::benchmark_default();
    local.predictor = PredictorConfig::from_selector("plant").unwrap();
    let mut remote = local.clone();
    remote.predictor = PredictorConfig::from_selector(&format!("extern:{listen}")).unwrap();
    let a = local.run(&ds, &REFERENCE_GAINS);
    let b = remote.run(&ds, &REFERENCE_GAINS);
    child.kill().ok();
    child.wait().ok();
    assert_eq!(a.unwrap(), b.unwrap());
}

#[test]
fn untuned_config_estimates_open_loop() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert!(simloop(&["generate", "--scenario", "test_lap_4", "--seed", "9", "--out", gen.to_str().unwrap()])
        .status
        .success());
    let est = dir.path().join("est");
    let out = simloop(&[
        "estimate",
        "--dataset", gen.join("dataset.csv").to_str().unwrap(),
        "--observer-config", configs().join("observer_benchmark.toml").to_str().unwrap(),
        "--out", est.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let estimate = load_dataset(&est.join("estimate.csv"), Role::Any).unwrap();
    let ds = load_dataset(&gen.join("dataset.csv"), Role::Training).unwrap();
    let open = ObserverConfig::benchmark_default().run(&ds, &[0.0; 5]).unwrap();
    assert_eq!(estimate.channel("v_x").unwrap(), open.channel("v_x").unwrap().as_slice());
    assert_eq!(estimate.len() + 1, ds.len());
}
