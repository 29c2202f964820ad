use std::path::Path;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::acquisition::{propose_next, AcquisitionSettings};
use super::cost::{classify, cost_of_trace, CostOutcome, CostSpec};
use super::gp::gp_fit;
use crate::dataio::Dataset;
use crate::error::{ConfigError, DataError, ObserverError, TuneError};
use crate::observer::ObserverConfig;

/// Cost used for a diverged run before any finite cost is known.
pub const INITIAL_PENALTY: f64 = 1e9;
/// Diverged runs cost this multiple of the worst finite cost seen so far.
pub const PENALTY_FACTOR: f64 = 10.0;

/// Channels (and optionally weights) of the tuning cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostChannels {
    pub state_channels: Vec<String>,
    pub extended_channels: Vec<String>,
    /// Defaults to inverse ground-truth norms.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

impl CostChannels {
    pub fn to_spec(&self, dataset: &Dataset) -> Result<CostSpec, TuneError> {
        let spec = match &self.weights {
            Some(w) => CostSpec {
                state_channels: self.state_channels.clone(),
                extended_channels: self.extended_channels.clone(),
                weights: w.clone(),
            },
            None => CostSpec::with_default_weights(dataset, self.state_channels.clone(), self.extended_channels.clone())?,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Settings of the Bayesian-optimization loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    /// Total number of cost evaluations, initial draws included.
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    /// Uniform random draws before the surrogate takes over.
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub acquisition: AcquisitionSettings,
    /// Cost channels; the benchmark states and forces when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<CostChannels>,
}

fn default_n_iter() -> usize {
    100
}
fn default_n_init() -> usize {
    4
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            n_iter: default_n_iter(),
            n_init: default_n_init(),
            seed: 0,
            acquisition: AcquisitionSettings::default(),
            cost: None,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0 < self.n_init && self.n_init < self.n_iter) {
            return Err(ConfigError::Invalid(format!(
                "need 0 < n_init < n_iter, got n_init = {}, n_iter = {}",
                self.n_init, self.n_iter
            )));
        }
        if self.acquisition.candidates == 0 {
            return Err(ConfigError::Invalid("acquisition needs at least one candidate".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: TuneConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<inline>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("tune config serializes")
    }

    /// Cost spec for `dataset`, honoring the optional `[cost]` table.
    pub fn cost_spec(&self, dataset: &Dataset) -> Result<CostSpec, TuneError> {
        match &self.cost {
            Some(c) => c.to_spec(dataset),
            None => CostSpec::benchmark(dataset),
        }
    }
}

/// One evaluated gain vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// 1-based evaluation counter.
    pub iteration: usize,
    pub k: Vec<f64>,
    /// Cost fed to the surrogate (the penalty for diverged runs).
    pub j: f64,
    pub diverged: bool,
    /// Best `j` up to and including this evaluation.
    pub incumbent: f64,
}

/// Every evaluation of a tuning run, in order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub param_names: Vec<String>,
    pub evaluations: Vec<Evaluation>,
}

impl History {
    pub fn new(param_names: Vec<String>) -> Self {
        History {
            param_names,
            evaluations: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    /// Lowest cost so far; the earliest evaluation wins ties.
    pub fn best(&self) -> Option<&Evaluation> {
        self.evaluations
            .iter()
            .fold(None, |acc: Option<&Evaluation>, e| match acc {
                Some(b) if b.j <= e.j => Some(b),
                _ => Some(e),
            })
    }

    pub fn incumbent_curve(&self) -> Vec<f64> {
        self.evaluations.iter().map(|e| e.incumbent).collect()
    }

    fn worst_finite(&self) -> Option<f64> {
        self.evaluations
            .iter()
            .filter(|e| !e.diverged)
            .map(|e| e.j)
            .fold(None, |acc, j| Some(acc.map_or(j, |a: f64| a.max(j))))
    }

    fn record(&mut self, k: Vec<f64>, outcome: &CostOutcome) {
        let (j, diverged) = match outcome {
            CostOutcome::Finite(j) => (*j, false),
            CostOutcome::Diverged { step, reason } => {
                let penalty = self.worst_finite().map_or(INITIAL_PENALTY, |w| PENALTY_FACTOR * w);
                log::warn!("gains {k:?} diverged at step {step} ({reason}); cost set to {penalty}");
                (penalty, true)
            }
        };
        let incumbent = self.evaluations.last().map_or(j, |e| e.incumbent.min(j));
        self.evaluations.push(Evaluation {
            iteration: self.evaluations.len() + 1,
            k,
            j,
            diverged,
            incumbent,
        });
    }

    /// `iteration, <param>..., j, incumbent_j, diverged`.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["iteration".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.extend(["j".into(), "incumbent_j".into(), "diverged".into()]);
        w.write_record(&header).expect("in-memory write");
        for e in &self.evaluations {
            let mut row = vec![e.iteration.to_string()];
            row.extend(e.k.iter().map(|v| v.to_string()));
            row.extend([e.j.to_string(), e.incumbent.to_string(), u8::from(e.diverged).to_string()]);
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_csv_string()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Outcome of a completed tuning run.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best_k: Vec<f64>,
    pub best_j: f64,
    pub history: History,
}

impl TuneResult {
    /// Observer-config fragment carrying the tuned gain values.
    pub fn fragment(&self) -> String {
        #[derive(Serialize)]
        struct Fragment<'a> {
            values: &'a [f64],
        }
        let mut out = format!("# Tuned gains, training cost {}\n", self.best_j);
        for (n, v) in self.history.param_names.iter().zip(&self.best_k) {
            out.push_str(&format!("# {n} = {v}\n"));
        }
        out.push_str(&toml::to_string(&Fragment { values: &self.best_k }).expect("fragment serializes"));
        out
    }

    /// `base` with its `values` replaced by the tuned gains.
    pub fn apply_to(&self, base: &ObserverConfig) -> ObserverConfig {
        let mut cfg = base.clone();
        cfg.values = Some(self.best_k.clone());
        cfg
    }
}

fn uniform_draw(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)]) -> Vec<f64> {
    bounds.iter().map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect()
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<(), ConfigError> {
    if bounds.is_empty() {
        return Err(ConfigError::Invalid("nothing to tune: empty bounds".into()));
    }
    if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite())) {
        return Err(ConfigError::Invalid(format!("bad bounds ({lo}, {hi})")));
    }
    Ok(())
}

/// Bayesian optimization of a black-box `objective` over the `bounds` box.
///
/// `n_init` uniform draws are evaluated concurrently, then one
/// surrogate-guided proposal at a time until `n_iter` evaluations. A fatal
/// objective error aborts with the history gathered so far.
pub fn minimize<F>(objective: F, bounds: &[(f64, f64)], param_names: Vec<String>, config: &TuneConfig) -> Result<TuneResult, TuneError>
where
    F: Fn(&[f64]) -> Result<CostOutcome, ObserverError> + Sync,
{
    config.validate()?;
    check_bounds(bounds)?;
    if param_names.len() != bounds.len() {
        return Err(ConfigError::Dimension {
            what: "parameter names".into(),
            expected: bounds.len(),
            got: param_names.len(),
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = History::new(param_names);
    let abort = |history: &History, source| TuneError::Aborted {
        completed: history.len(),
        partial: Box::new(history.clone()),
        source,
    };

    let initial: Vec<Vec<f64>> = (0..config.n_init).map(|_| uniform_draw(&mut rng, bounds)).collect();
    let outcomes: Vec<Result<CostOutcome, ObserverError>> = thread::scope(|s| {
        let handles: Vec<_> = initial.iter().map(|k| s.spawn(|| objective(k))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("cost evaluation panicked"))
            .collect()
    });
    for (k, outcome) in initial.into_iter().zip(outcomes) {
        match outcome {
            Ok(o) => history.record(k, &o),
            Err(e) => return Err(abort(&history, e)),
        }
    }

    while history.len() < config.n_iter {
        let fit_seed: u64 = rng.random();
        let propose_seed: u64 = rng.random();
        let next = if history.len() < 2 {
            uniform_draw(&mut rng, bounds)
        } else {
            let points: Vec<Vec<f64>> = history.evaluations.iter().map(|e| e.k.clone()).collect();
            let costs: Vec<f64> = history.evaluations.iter().map(|e| e.j).collect();
            let surrogate = gp_fit(&points, &costs, bounds, fit_seed)?;
            propose_next(&surrogate, &config.acquisition, propose_seed)
        };
        match objective(&next) {
            Ok(o) => history.record(next, &o),
            Err(e) => return Err(abort(&history, e)),
        }
        let last = history.evaluations.last().expect("just recorded");
        log::debug!("evaluation {}: J = {} (best {})", last.iteration, last.j, last.incumbent);
    }

    let best = history.best().expect("n_iter > 0").clone();
    Ok(TuneResult {
        best_k: best.k,
        best_j: best.j,
        history,
    })
}

fn as_observer_error(e: TuneError) -> ObserverError {
    match e {
        TuneError::Config(c) => ObserverError::Config(c),
        TuneError::Data(d) => ObserverError::Data(d),
        TuneError::Observer(o) => o,
        other => ObserverError::Config(ConfigError::Invalid(other.to_string())),
    }
}

/// Tune the observer gains on a training dataset.
pub fn tune(
    dataset: &Dataset,
    observer: &ObserverConfig,
    spec: &CostSpec,
    config: &TuneConfig,
) -> Result<TuneResult, TuneError> {
    spec.validate()?;
    for c in spec.channels() {
        super::cost::truth_channel(dataset, &c)?;
    }
    let objective = |k: &[f64]| -> Result<CostOutcome, ObserverError> {
        match observer.run(dataset, k) {
            Ok(trace) => {
                let j = cost_of_trace(&trace, dataset, spec).map_err(as_observer_error)?;
                Ok(if j.is_finite() {
                    CostOutcome::Finite(j)
                } else {
                    CostOutcome::Diverged {
                        step: trace.len(),
                        reason: "non-finite cost".into(),
                    }
                })
            }
            Err(e) => classify(e),
        }
    };
    minimize(objective, &observer.gain.bounds(), observer.gain.param_names(), config)
}
