use super::config::{InitialState, ObserverConfig};
use super::gain::GainMatrix;
use super::predictor::{ChannelLabels, Predictor};
use crate::dataio::{Dataset, MEAS_PREFIX};
use crate::error::{ConfigError, ObserverError, PredictorError};

/// Floor on `v_x` when forming the side-slip angle (m/s).
pub const SIDE_SLIP_EPS: f64 = 0.5;

/// `beta = atan(v_y / max(v_x, eps))`.
pub fn side_slip(v_x: f64, v_y: f64) -> f64 {
    (v_y / v_x.max(SIDE_SLIP_EPS)).atan()
}

/// Predictor output plus the propagated extended states.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedStep {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    /// Extended states have constant dynamics: equal to the previous correction.
    pub dz: Vec<f64>,
}

impl PredictedStep {
    /// `[x~; dz~]`.
    pub fn augmented(&self) -> Vec<f64> {
        self.x.iter().chain(&self.dz).copied().collect()
    }

    /// `z^ = z~ + dz^` for a given correction of the extended states.
    pub fn corrected_extended(&self, dz_hat: &[f64]) -> Vec<f64> {
        self.z.iter().zip(dz_hat).map(|(z, d)| z + d).collect()
    }
}

fn check(what: &str, expected: usize, got: usize) -> Result<(), ConfigError> {
    if expected == got {
        Ok(())
    } else {
        Err(ConfigError::Dimension {
            what: what.into(),
            expected,
            got,
        })
    }
}

/// Advance the predictor from the corrected augmented state.
pub fn predict_step<P: Predictor + ?Sized>(
    predictor: &mut P,
    x_hat: &[f64],
    u: &[f64],
    dz_hat: &[f64],
) -> Result<PredictedStep, PredictorError> {
    let (nx, p, nz) = predictor.labels().dims();
    check("x^", nx, x_hat.len())?;
    check("dz^", nz, dz_hat.len())?;
    let pred = predictor.step(x_hat, u, dz_hat)?;
    check("predicted x~", nx, pred.x.len())?;
    check("predicted y~", p, pred.y.len())?;
    check("predicted z~", nz, pred.z.len())?;
    Ok(PredictedStep {
        x: pred.x,
        y: pred.y,
        z: pred.z,
        dz: dz_hat.to_vec(),
    })
}

/// `x^aug = x~aug + K (y - y~)`.
pub fn correct_step(x_aug: &[f64], y: &[f64], y_pred: &[f64], gain: &GainMatrix) -> Result<Vec<f64>, ConfigError> {
    let k = &gain.k;
    check("augmented state", k.nrows(), x_aug.len())?;
    check("y", k.ncols(), y.len())?;
    check("y~", k.ncols(), y_pred.len())?;
    let mut out = x_aug.to_vec();
    for j in 0..k.ncols() {
        let e = y[j] - y_pred[j];
        for (i, xi) in out.iter_mut().enumerate() {
            let kij = k[(i, j)];
            // Structural zeros leave the prediction untouched bit for bit.
            if kij != 0.0 {
                *xi += kij * e;
            }
        }
    }
    Ok(out)
}

/// Per-step observer output for rows `1..N` of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTrace {
    pub labels: ChannelLabels,
    /// Sample times of the rows (dataset rows 1 onward).
    pub time: Vec<f64>,
    /// Corrected simulator states `x^(k)`.
    pub x: Vec<Vec<f64>>,
    /// Corrected extended states `dz^(k)`.
    pub dz: Vec<Vec<f64>>,
    /// Corrected extended outputs `z^(k) = z~(k) + dz^(k)`.
    pub z: Vec<Vec<f64>>,
    /// Predicted outputs `y~(k)`.
    pub y_pred: Vec<Vec<f64>>,
    /// Innovations `y(k) - y~(k)`.
    pub innovation: Vec<Vec<f64>>,
    /// Side-slip angle of `x^(k)` (empty when `v_x`/`v_y` are not states).
    pub beta: Vec<f64>,
}

impl EstimateTrace {
    fn new(labels: ChannelLabels, capacity: usize) -> Self {
        EstimateTrace {
            labels,
            time: Vec::with_capacity(capacity),
            x: Vec::with_capacity(capacity),
            dz: Vec::with_capacity(capacity),
            z: Vec::with_capacity(capacity),
            y_pred: Vec::with_capacity(capacity),
            innovation: Vec::with_capacity(capacity),
            beta: Vec::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// First dataset row covered by the trace.
    pub const FIRST_ROW: usize = 1;

    /// Estimate series of a state label, an extended label or `beta`.
    pub fn channel(&self, name: &str) -> Option<Vec<f64>> {
        if name == "beta" && !self.beta.is_empty() {
            return Some(self.beta.clone());
        }
        if let Some(i) = self.labels.state.iter().position(|l| l == name) {
            return Some(self.x.iter().map(|r| r[i]).collect());
        }
        if let Some(i) = self.labels.extended.iter().position(|l| l == name) {
            return Some(self.z.iter().map(|r| r[i]).collect());
        }
        None
    }

    /// Export in the dataset schema: estimates under the truth channel names,
    /// plus `beta`, `pred_*`, `innov_*` and `delta_*` diagnostics.
    pub fn to_dataset(&self, dt: f64) -> Dataset {
        let mut ds = Dataset::new(dt, self.time.clone());
        let col = |rows: &[Vec<f64>], i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
        for (i, l) in self.labels.state.iter().enumerate() {
            ds.insert(l.clone(), col(&self.x, i));
        }
        for (i, l) in self.labels.extended.iter().enumerate() {
            ds.insert(l.clone(), col(&self.z, i));
        }
        if !self.beta.is_empty() {
            ds.insert("beta", self.beta.clone());
        }
        for (i, l) in self.labels.output.iter().enumerate() {
            ds.insert(format!("pred_{l}"), col(&self.y_pred, i));
        }
        for (i, l) in self.labels.output.iter().enumerate() {
            ds.insert(format!("innov_{l}"), col(&self.innovation, i));
        }
        for (i, l) in self.labels.extended.iter().enumerate() {
            ds.insert(format!("delta_{l}"), col(&self.dz, i));
        }
        ds
    }

    fn push(&mut self, t: f64, x: Vec<f64>, dz: Vec<f64>, z: Vec<f64>, y_pred: Vec<f64>, y: &[f64]) {
        let innovation = y.iter().zip(&y_pred).map(|(a, b)| a - b).collect();
        let pos = |name: &str| self.labels.state.iter().position(|l| l == name);
        if let (Some(ix), Some(iy)) = (pos("v_x"), pos("v_y")) {
            self.beta.push(side_slip(x[ix], x[iy]));
        }
        self.time.push(t);
        self.x.push(x);
        self.dz.push(dz);
        self.z.push(z);
        self.y_pred.push(y_pred);
        self.innovation.push(innovation);
    }
}

/// Initial `(x^(0), dz^(0))` for a predictor under a policy.
pub fn initial_state(
    policy: &InitialState,
    labels: &ChannelLabels,
    dataset: &Dataset,
) -> Result<(Vec<f64>, Vec<f64>), ObserverError> {
    let (nx, _, nz) = labels.dims();
    match policy {
        InitialState::FromTruth => {
            let x = labels
                .state
                .iter()
                .map(|l| dataset.channels.get(l).and_then(|c| c.first().copied()).unwrap_or(0.0))
                .collect();
            Ok((x, vec![0.0; nz]))
        }
        InitialState::Zero => Ok((vec![0.0; nx], vec![0.0; nz])),
        InitialState::Explicit { x, dz } => {
            check("initial x", nx, x.len())?;
            let dz = dz.clone().unwrap_or_else(|| vec![0.0; nz]);
            check("initial dz", nz, dz.len())?;
            Ok((x.clone(), dz))
        }
    }
}

struct Signals {
    u: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

fn signals(dataset: &Dataset, labels: &ChannelLabels) -> Result<Signals, ObserverError> {
    if dataset.len() < 2 {
        return Err(ObserverError::Data(crate::error::DataError::Empty));
    }
    let meas: Vec<String> = labels.output.iter().map(|l| format!("{MEAS_PREFIX}{l}")).collect();
    Ok(Signals {
        u: dataset.rows(&labels.input)?,
        y: dataset.rows(&meas)?,
    })
}

fn first_non_finite(values: &[f64], labels: &[String]) -> Option<String> {
    values.iter().position(|v| !v.is_finite()).map(|i| labels[i].clone())
}

/// Run the closed-loop observer over the whole dataset.
pub fn run_observer<P: Predictor + ?Sized>(
    dataset: &Dataset,
    predictor: &mut P,
    gain: &GainMatrix,
    initial: &InitialState,
) -> Result<EstimateTrace, ObserverError> {
    let labels = predictor.labels().clone();
    let aug_labels = labels.augmented();
    if gain.rows != aug_labels || gain.cols != labels.output {
        return Err(ConfigError::Invalid("gain rows/columns do not match the predictor's channels".into()).into());
    }
    let sig = signals(dataset, &labels)?;
    let (mut x_hat, mut dz_hat) = initial_state(initial, &labels, dataset)?;
    let nx = labels.state.len();
    let n = dataset.len();
    let mut trace = EstimateTrace::new(labels, n - 1);
    for k in 1..n {
        let pred = predict_step(predictor, &x_hat, &sig.u[k - 1], &dz_hat)
            .map_err(|source| ObserverError::Predictor { step: k, source })?;
        let aug = correct_step(&pred.augmented(), &sig.y[k], &pred.y, gain)?;
        if let Some(channel) = first_non_finite(&aug, &aug_labels) {
            return Err(ObserverError::Diverged { step: k, channel });
        }
        x_hat = aug[..nx].to_vec();
        dz_hat = aug[nx..].to_vec();
        let z_hat = pred.corrected_extended(&dz_hat);
        trace.push(dataset.time[k], x_hat.clone(), dz_hat.clone(), z_hat, pred.y, &sig.y[k]);
    }
    Ok(trace)
}

/// Plain simulation of the predictor from the initial state, no correction.
pub fn open_loop_rollout<P: Predictor + ?Sized>(
    dataset: &Dataset,
    predictor: &mut P,
    initial: &InitialState,
) -> Result<EstimateTrace, ObserverError> {
    let labels = predictor.labels().clone();
    let sig = signals(dataset, &labels)?;
    let (mut x, dz) = initial_state(initial, &labels, dataset)?;
    let n = dataset.len();
    let mut trace = EstimateTrace::new(labels, n - 1);
    for k in 1..n {
        let pred = predictor
            .step(&x, &sig.u[k - 1], &dz)
            .map_err(|source| ObserverError::Predictor { step: k, source })?;
        if let Some(channel) = first_non_finite(&pred.x, &trace.labels.state) {
            return Err(ObserverError::Diverged { step: k, channel });
        }
        x = pred.x;
        let z = pred.z.iter().zip(&dz).map(|(a, b)| a + b).collect();
        trace.push(dataset.time[k], x.clone(), dz.clone(), z, pred.y, &sig.y[k]);
    }
    Ok(trace)
}

impl ObserverConfig {
    /// Build a fresh predictor, assemble the gain for `k` and run.
    pub fn run(&self, dataset: &Dataset, k: &[f64]) -> Result<EstimateTrace, ObserverError> {
        if (dataset.dt - self.dt).abs() > 1e-9 * self.dt {
            return Err(ConfigError::Invalid(format!(
                "dataset period {} s differs from observer dt {} s",
                dataset.dt, self.dt
            ))
            .into());
        }
        let mut predictor = self
            .build_predictor()
            .map_err(|source| ObserverError::Predictor { step: 0, source })?;
        let gain = self.gain_for(predictor.as_ref(), k)?;
        run_observer(dataset, &mut predictor, &gain, &self.initial_state)
    }
}
