//! The `simloop` command line.

use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use super::report::{compare_report, write_report, Contender, RunReport};
use crate::dataio::{canonical_scenario, generate_dataset, load_dataset, save_dataset, Dataset, NoiseSpec, Role, ScenarioSpec};
use crate::dynamics::{VehicleConfig, VehicleModel};
use crate::observer::{ModelPredictor, ObserverConfig, PredictorConfig, PredictorKind};
use crate::error::TuneError;
use crate::tuner::{cost_of_trace, tune, TuneConfig};

#[derive(Debug, Parser)]
#[command(name = "simloop", version, about = "Simulator-in-the-loop vehicle state estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Roll the plant over a scenario and write a noisy training dataset.
    Generate(GenerateArgs),
    /// Tune the observer gains on a training dataset.
    Tune(TuneArgs),
    /// Run the observer with fixed gains and export the estimates.
    Estimate(RunArgs),
    /// Score the configured observer against its open-loop run.
    Evaluate(RunArgs),
    /// Score several observer configs on one or more datasets.
    Compare(CompareArgs),
    /// Serve an in-repo model as an external predictor.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Canonical scenario name or path to a scenario TOML.
    #[arg(long)]
    pub scenario: String,
    /// `automotive`, `none` or a noise TOML.
    #[arg(long, default_value = "automotive")]
    pub noise: String,
    /// Plant vehicle TOML (defaults to the shipped plant).
    #[arg(long)]
    pub vehicle: Option<PathBuf>,
    /// Driver-noise seed; also the sensor-noise seed for `automotive`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub observer_config: PathBuf,
    /// Defaults: 100 evaluations, 4 initial draws.
    #[arg(long)]
    pub tune_config: Option<PathBuf>,
    /// Overrides the tune config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `benchmark`, `plant` or `extern:<address>`.
    #[arg(long)]
    pub predictor: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Without gain `values` the observer runs with zero gains.
    #[arg(long)]
    pub observer_config: PathBuf,
    #[arg(long)]
    pub predictor: Option<String>,
    /// Recorded in the run directory; the observer itself is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Repeat for several laps.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,
    /// `name=path` or `path` (named after the file stem); repeatable.
    #[arg(long, required = true)]
    pub observer_config: Vec<String>,
    /// Also score each contender's open-loop run.
    #[arg(long)]
    pub open_loop: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// `tcp:host:port`, `unix:/path` or `stdio`.
    #[arg(long, default_value = "stdio")]
    pub listen: String,
    /// `benchmark` or `plant`.
    #[arg(long, default_value = "benchmark")]
    pub predictor: String,
    /// Vehicle TOML for the served model.
    #[arg(long)]
    pub vehicle: Option<PathBuf>,
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn load_scenario(s: &str) -> Result<ScenarioSpec> {
    if let Some(spec) = canonical_scenario(s) {
        return Ok(spec);
    }
    let path = Path::new(s);
    if !path.exists() {
        bail!("`{s}` is neither a canonical scenario (training_lap, test_lap_1..4) nor a file");
    }
    Ok(ScenarioSpec::load(path)?)
}

fn load_noise(s: &str, seed: u64) -> Result<NoiseSpec> {
    Ok(match s {
        "automotive" => NoiseSpec::automotive(seed),
        "none" => NoiseSpec::none(),
        path => NoiseSpec::load(Path::new(path))?,
    })
}

fn load_observer(path: &Path, predictor: Option<&str>) -> Result<ObserverConfig> {
    let mut cfg = ObserverConfig::load(path)?;
    if let Some(sel) = predictor {
        let p = PredictorConfig::from_selector(sel)?;
        if p.kind != cfg.predictor.kind || p.kind == PredictorKind::Extern {
            cfg.predictor = p;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Gain values of `cfg`; a config without `values` runs open loop.
fn gains_of(cfg: &ObserverConfig) -> Vec<f64> {
    cfg.values.clone().unwrap_or_else(|| {
        log::warn!("observer config has no gain `values`; running with zero gains");
        vec![0.0; cfg.gain.params.len()]
    })
}

fn predictor_id(cfg: &ObserverConfig) -> String {
    match cfg.predictor.kind {
        PredictorKind::Benchmark => "benchmark".into(),
        PredictorKind::Plant => "plant".into(),
        PredictorKind::Extern => format!("extern:{}", cfg.predictor.address.as_deref().unwrap_or("?")),
    }
}

fn dataset_id(path: &Path, ds: &Dataset) -> String {
    ds.metadata
        .get("scenario")
        .cloned()
        .unwrap_or_else(|| path.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned()))
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let scenario = load_scenario(&a.scenario)?;
    let noise = load_noise(&a.noise, a.seed)?;
    let vehicle = match &a.vehicle {
        Some(p) => VehicleConfig::load(p)?,
        None => VehicleConfig::default_plant(),
    };
    let ds = generate_dataset(&scenario, &VehicleModel::from_config(&vehicle), &noise, a.seed)?;
    run_dir(&a.out)?;
    save_dataset(&ds, &a.out.join("dataset.csv"))?;
    write(&a.out, "scenario.toml", &toml::to_string(&scenario)?)?;
    write(&a.out, "noise.toml", &toml::to_string(&noise)?)?;
    write(&a.out, "vehicle.toml", &toml::to_string(&vehicle)?)?;
    write(&a.out, "run.toml", &format!("command = \"generate\"\nseed = {}\n", a.seed))?;
    println!("wrote {} samples to {}", ds.len(), a.out.join("dataset.csv").display());
    Ok(())
}

fn tune_cmd(a: &TuneArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset, Role::Training)?;
    let observer = load_observer(&a.observer_config, a.predictor.as_deref())?;
    let mut tc = match &a.tune_config {
        Some(p) => TuneConfig::load(p)?,
        None => TuneConfig::default(),
    };
    if let Some(seed) = a.seed {
        tc.seed = seed;
    }
    let spec = tc.cost_spec(&ds)?;
    run_dir(&a.out)?;
    write(&a.out, "observer.toml", &observer.to_toml_string())?;
    write(&a.out, "tune.toml", &tc.to_toml_string())?;

    let result = match tune(&ds, &observer, &spec, &tc) {
        Ok(r) => r,
        Err(TuneError::Aborted {
            completed,
            partial,
            source,
        }) => {
            partial.save(&a.out.join("history.csv"))?;
            bail!("tuning aborted after {completed} evaluations (partial history saved): {source}");
        }
        Err(e) => return Err(e.into()),
    };
    result.history.save(&a.out.join("history.csv"))?;
    write(&a.out, "gains.toml", &result.fragment())?;
    write(&a.out, "observer_tuned.toml", &result.apply_to(&observer).to_toml_string())?;

    let open = cost_of_trace(&observer.run(&ds, &vec![0.0; result.best_k.len()])?, &ds, &spec)?;
    let mut summary = format!("evaluations: {}\nopen-loop cost: {open}\ntuned cost: {}\n", result.history.len(), result.best_j);
    for (n, v) in result.history.param_names.iter().zip(&result.best_k) {
        summary.push_str(&format!("{n} = {v}\n"));
    }
    write(&a.out, "summary.txt", &summary)?;
    print!("{summary}");
    Ok(())
}

fn estimate(a: &RunArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset, Role::Deployment)?;
    let cfg = load_observer(&a.observer_config, a.predictor.as_deref())?;
    let trace = cfg.run(&ds, &gains_of(&cfg))?;
    run_dir(&a.out)?;
    write(&a.out, "observer.toml", &cfg.to_toml_string())?;
    save_dataset(&trace.to_dataset(ds.dt), &a.out.join("estimate.csv"))?;
    println!("wrote {} estimate rows to {}", trace.len(), a.out.join("estimate.csv").display());
    Ok(())
}

fn finish_report(reports: &[RunReport], out: &Path) -> Result<()> {
    write_report(reports, out)?;
    print!("{}", super::report::summary_text(reports));
    Ok(())
}

fn evaluate(a: &RunArgs) -> Result<()> {
    let ds = load_dataset(&a.dataset, Role::Training)?;
    let cfg = load_observer(&a.observer_config, a.predictor.as_deref())?;
    let k = gains_of(&cfg);
    let zeros = vec![0.0; k.len()];
    let (closed, open) = thread::scope(|s| {
        let c = s.spawn(|| cfg.run(&ds, &k));
        let o = s.spawn(|| cfg.run(&ds, &zeros));
        (c.join().expect("observer thread"), o.join().expect("observer thread"))
    });
    let (closed, open) = (closed?, open?);
    run_dir(&a.out)?;
    write(&a.out, "observer.toml", &cfg.to_toml_string())?;
    save_dataset(&closed.to_dataset(ds.dt), &a.out.join("estimate.csv"))?;
    let id = predictor_id(&cfg);
    let contenders = [
        Contender {
            name: "observer".into(),
            predictor_id: id.clone(),
            gains: Some(k),
            trace: closed,
        },
        Contender {
            name: "open_loop".into(),
            predictor_id: id,
            gains: Some(zeros),
            trace: open,
        },
    ];
    finish_report(&compare_report(&contenders, &ds, &dataset_id(&a.dataset, &ds))?, &a.out)
}

fn parse_contender(s: &str) -> Result<(String, PathBuf)> {
    Ok(match s.split_once('=') {
        Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
        _ => {
            let p = PathBuf::from(s);
            let name = p
                .file_stem()
                .map(|n| n.to_string_lossy().into_owned())
                .with_context(|| format!("cannot name contender `{s}`"))?;
            (name, p)
        }
    })
}

fn compare(a: &CompareArgs) -> Result<()> {
    let mut configs = Vec::new();
    for s in &a.observer_config {
        let (name, path) = parse_contender(s)?;
        if configs.iter().any(|(n, _): &(String, ObserverConfig)| *n == name) {
            bail!("duplicate contender name `{name}`");
        }
        configs.push((name, load_observer(&path, None)?));
    }
    run_dir(&a.out)?;
    for (name, cfg) in &configs {
        write(&a.out, &format!("observer_{name}.toml"), &cfg.to_toml_string())?;
    }
    let mut runs: Vec<(String, &ObserverConfig, Vec<f64>)> = Vec::new();
    for (name, cfg) in &configs {
        let k = gains_of(cfg);
        if a.open_loop {
            runs.push((format!("{name}_open_loop"), cfg, vec![0.0; k.len()]));
        }
        runs.push((name.clone(), cfg, k));
    }

    let mut reports = Vec::new();
    for path in &a.dataset {
        let ds = load_dataset(path, Role::Training)?;
        let traces: Vec<_> = thread::scope(|s| {
            let handles: Vec<_> = runs.iter().map(|(_, cfg, k)| s.spawn(|| cfg.run(&ds, k))).collect();
            handles.into_iter().map(|h| h.join().expect("observer thread")).collect()
        });
        let mut contenders = Vec::new();
        for ((name, cfg, k), trace) in runs.iter().zip(traces) {
            contenders.push(Contender {
                name: name.clone(),
                predictor_id: predictor_id(cfg),
                gains: Some(k.clone()),
                trace: trace.with_context(|| format!("running `{name}` on {}", path.display()))?,
            });
        }
        reports.extend(compare_report(&contenders, &ds, &dataset_id(path, &ds))?);
    }
    finish_report(&reports, &a.out)
}

fn serve(a: &ServeArgs) -> Result<()> {
    let kind = match a.predictor.as_str() {
        "benchmark" => PredictorKind::Benchmark,
        "plant" => PredictorKind::Plant,
        other => bail!("cannot serve predictor `{other}` (benchmark or plant)"),
    };
    let vehicle = match (&a.vehicle, kind) {
        (Some(p), _) => VehicleConfig::load(p)?,
        (None, PredictorKind::Plant) => VehicleConfig::default_plant(),
        (None, _) => VehicleConfig::default_benchmark(),
    };
    let make = move || match kind {
        PredictorKind::Plant => ModelPredictor::plant(&vehicle),
        _ => ModelPredictor::benchmark(&vehicle),
    };
    if a.listen == "stdio" {
        let summary = crate::xbridge::serve_stdio(&mut make())?;
        log::info!("session ended after {} steps", summary.steps);
        return Ok(());
    }
    match crate::xbridge::Address::parse(&a.listen)? {
        crate::xbridge::Address::Tcp(target) => {
            let listener = std::net::TcpListener::bind(&target).with_context(|| format!("binding {target}"))?;
            eprintln!("serving {} on tcp:{}", a.predictor, listener.local_addr()?);
            crate::xbridge::serve_tcp(listener, make)?;
        }
        #[cfg(unix)]
        crate::xbridge::Address::Unix(path) => {
            let listener =
                std::os::unix::net::UnixListener::bind(&path).with_context(|| format!("binding {}", path.display()))?;
            eprintln!("serving {} on unix:{}", a.predictor, path.display());
            crate::xbridge::serve_unix(listener, make)?;
        }
        other => bail!("cannot listen on {other:?}"),
    }
    Ok(())
}

/// Parse arguments and run one verb.
pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Tune(a) => tune_cmd(a),
        Command::Estimate(a) => estimate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Compare(a) => compare(a),
        Command::Serve(a) => serve(a),
    }
}

pub fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(Cli::parse())
}
