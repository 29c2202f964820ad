use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::TuneError;

/// Jitter added to the kernel diagonal before factorization.
pub const JITTER: f64 = 1e-8;

/// Random-search starts for the hyperparameters.
pub const HYPER_STARTS: usize = 32;

const LENGTH_RANGE: (f64, f64) = (0.02, 5.0);
const SIGNAL_RANGE: (f64, f64) = (0.05, 20.0);
const MAX_JITTER: f64 = 1e-2;

/// Matérn-5/2 kernel hyperparameters in normalized coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub signal_var: f64,
    /// One length scale per input dimension, in unit-box units.
    pub length_scales: Vec<f64>,
    pub noise: f64,
}

impl Hyperparams {
    pub fn isotropic(dim: usize, signal_var: f64, length: f64) -> Self {
        Hyperparams {
            signal_var,
            length_scales: vec![length; dim],
            noise: JITTER,
        }
    }

    fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a
            .iter()
            .zip(b)
            .zip(&self.length_scales)
            .map(|((x, y), l)| ((x - y) / l).powi(2))
            .sum();
        matern52(r2.sqrt(), self.signal_var)
    }
}

/// `s2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r)`.
pub fn matern52(r: f64, signal_var: f64) -> f64 {
    let s5r = 5f64.sqrt() * r;
    signal_var * (1.0 + s5r + s5r * s5r / 3.0) * (-s5r).exp()
}

/// One hyperparameter candidate tried while fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct LmlRecord {
    pub hyper: Hyperparams,
    pub log_marginal_likelihood: f64,
}

/// Gaussian-process posterior over the cost, ready for prediction.
#[derive(Debug, Clone)]
pub struct Surrogate {
    pub bounds: Vec<(f64, f64)>,
    /// Training inputs mapped to the unit box.
    pub points: Vec<Vec<f64>>,
    /// Standardized training costs.
    pub targets: Vec<f64>,
    pub cost_mean: f64,
    pub cost_scale: f64,
    pub hyper: Hyperparams,
    /// Diagonal jitter actually used (may exceed `hyper.noise` after escalation).
    pub jitter: f64,
    pub log_marginal_likelihood: f64,
    /// Every candidate evaluated during hyperparameter selection.
    pub lml_log: Vec<LmlRecord>,
    /// `true` when the data could not support a posterior and the prior is used.
    pub prior_only: bool,
    chol: Option<Cholesky<f64, Dyn>>,
    alpha: DVector<f64>,
}

fn to_unit(point: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    point.iter().zip(bounds).map(|(v, (lo, hi))| (v - lo) / (hi - lo)).collect()
}

/// Map a unit-box point back to parameter space.
pub fn from_unit(point: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    point.iter().zip(bounds).map(|(u, (lo, hi))| lo + u * (hi - lo)).collect()
}

struct Factorized {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    lml: f64,
}

fn factorize(points: &[Vec<f64>], targets: &[f64], hyper: &Hyperparams) -> Option<Factorized> {
    let n = points.len();
    let base = DMatrix::from_fn(n, n, |i, j| hyper.kernel(&points[i], &points[j]));
    let y = DVector::from_column_slice(targets);
    let mut jitter = hyper.noise.max(JITTER);
    while jitter <= MAX_JITTER {
        let mut k = base.clone();
        for i in 0..n {
            k[(i, i)] += jitter;
        }
        if let Some(chol) = k.cholesky() {
            let alpha = chol.solve(&y);
            let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            let lml = -0.5 * y.dot(&alpha) - log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            if lml.is_finite() {
                return Some(Factorized { chol, alpha, jitter, lml });
            }
            return None;
        }
        jitter *= 10.0;
    }
    None
}

fn standardize(costs: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = costs.len() as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    let scale = if var.sqrt() > 1e-12 * mean.abs().max(1.0) { var.sqrt() } else { 1.0 };
    (mean, scale, costs.iter().map(|c| (c - mean) / scale).collect())
}

fn check_inputs(points: &[Vec<f64>], costs: &[f64], bounds: &[(f64, f64)]) -> Result<(), TuneError> {
    if points.len() < 2 {
        return Err(TuneError::TooFewPoints {
            needed: 2,
            got: points.len(),
        });
    }
    if points.len() != costs.len() {
        return Err(crate::error::ConfigError::Dimension {
            what: "surrogate costs".into(),
            expected: points.len(),
            got: costs.len(),
        }
        .into());
    }
    for p in points {
        if p.len() != bounds.len() {
            return Err(crate::error::ConfigError::Dimension {
                what: "surrogate point".into(),
                expected: bounds.len(),
                got: p.len(),
            }
            .into());
        }
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(crate::error::ConfigError::Invalid("surrogate costs must be finite".into()).into());
    }
    Ok(())
}

fn all_duplicates(points: &[Vec<f64>]) -> bool {
    points.iter().all(|p| p == &points[0])
}

impl Surrogate {
    /// Posterior with fixed hyperparameters (no selection).
    pub fn with_hyperparams(
        points: &[Vec<f64>],
        costs: &[f64],
        bounds: &[(f64, f64)],
        hyper: Hyperparams,
    ) -> Result<Self, TuneError> {
        check_inputs(points, costs, bounds)?;
        let unit: Vec<Vec<f64>> = points.iter().map(|p| to_unit(p, bounds)).collect();
        let (mean, scale, targets) = standardize(costs);
        let mut s = Surrogate {
            bounds: bounds.to_vec(),
            points: unit,
            targets,
            cost_mean: mean,
            cost_scale: scale,
            hyper,
            jitter: 0.0,
            log_marginal_likelihood: f64::NEG_INFINITY,
            lml_log: Vec::new(),
            prior_only: true,
            chol: None,
            alpha: DVector::zeros(0),
        };
        if let Some(f) = factorize(&s.points, &s.targets, &s.hyper) {
            s.jitter = f.jitter;
            s.log_marginal_likelihood = f.lml;
            s.chol = Some(f.chol);
            s.alpha = f.alpha;
            s.prior_only = false;
        } else {
            log::warn!("kernel matrix could not be factorized; using the prior");
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    /// Posterior mean and variance at a unit-box point, in standardized units.
    pub fn predict_unit(&self, u: &[f64]) -> (f64, f64) {
        let prior = self.hyper.signal_var;
        let Some(chol) = &self.chol else {
            return (0.0, prior);
        };
        let kstar = DVector::from_iterator(self.points.len(), self.points.iter().map(|p| self.hyper.kernel(p, u)));
        let mean = kstar.dot(&self.alpha);
        let v = chol.l_dirty().solve_lower_triangular(&kstar).expect("triangular factor");
        let var = (prior - v.dot(&v)).max(0.0);
        (mean, var)
    }

    /// Posterior mean and variance of the cost at `point` (parameter space).
    ///
    /// Points outside the bounds box are clipped onto it.
    pub fn predict(&self, point: &[f64]) -> (f64, f64) {
        let mut u = to_unit(point, &self.bounds);
        if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
            log::warn!("prediction point {point:?} lies outside the bounds box; clipping");
            for v in &mut u {
                *v = v.clamp(0.0, 1.0);
            }
        }
        let (m, v) = self.predict_unit(&u);
        (self.cost_mean + self.cost_scale * m, self.cost_scale * self.cost_scale * v)
    }
}

/// Fit a surrogate, selecting hyperparameters by log marginal likelihood.
///
/// Candidates: one isotropic default, [`HYPER_STARTS`] log-uniform random
/// draws, then a coordinate sweep around the best. The winner has the
/// largest likelihood among everything recorded in `lml_log`.
pub fn gp_fit(points: &[Vec<f64>], costs: &[f64], bounds: &[(f64, f64)], seed: u64) -> Result<Surrogate, TuneError> {
    check_inputs(points, costs, bounds)?;
    let dim = bounds.len();
    let unit: Vec<Vec<f64>> = points.iter().map(|p| to_unit(p, bounds)).collect();
    if all_duplicates(&unit) {
        log::warn!("all surrogate inputs coincide; falling back to the prior");
        let (mean, scale, targets) = standardize(costs);
        return Ok(Surrogate {
            bounds: bounds.to_vec(),
            points: unit,
            targets,
            cost_mean: mean,
            cost_scale: scale,
            hyper: Hyperparams::isotropic(dim, 1.0, 0.3),
            jitter: 0.0,
            log_marginal_likelihood: f64::NEG_INFINITY,
            lml_log: Vec::new(),
            prior_only: true,
            chol: None,
            alpha: DVector::zeros(0),
        });
    }
    let (_, _, targets) = standardize(costs);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_uniform = |rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)| (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    let mut candidates = vec![Hyperparams::isotropic(dim, 1.0, 0.3)];
    for _ in 0..HYPER_STARTS {
        let signal_var = log_uniform(&mut rng, SIGNAL_RANGE);
        let length_scales = (0..dim).map(|_| log_uniform(&mut rng, LENGTH_RANGE)).collect();
        candidates.push(Hyperparams {
            signal_var,
            length_scales,
            noise: JITTER,
        });
    }

    let mut log = Vec::new();
    let mut best: Option<(f64, Hyperparams)> = None;
    let consider = |h: Hyperparams, log: &mut Vec<LmlRecord>, best: &mut Option<(f64, Hyperparams)>| {
        let lml = factorize(&unit, &targets, &h).map_or(f64::NEG_INFINITY, |f| f.lml);
        if best.as_ref().is_none_or(|(b, _)| lml > *b) {
            *best = Some((lml, h.clone()));
        }
        log.push(LmlRecord {
            hyper: h,
            log_marginal_likelihood: lml,
        });
    };
    for h in candidates {
        consider(h, &mut log, &mut best);
    }

    // Multiplicative coordinate sweep around the incumbent.
    for factor in [2.0, 1.4, 1.15] {
        for coord in 0..=dim {
            for dir in [factor, 1.0 / factor] {
                let mut h = best.as_ref().expect("at least one candidate").1.clone();
                if coord == dim {
                    h.signal_var = (h.signal_var * dir).clamp(SIGNAL_RANGE.0, SIGNAL_RANGE.1);
                } else {
                    h.length_scales[coord] = (h.length_scales[coord] * dir).clamp(LENGTH_RANGE.0, LENGTH_RANGE.1);
                }
                consider(h, &mut log, &mut best);
            }
        }
    }

    let (_, hyper) = best.expect("at least one candidate");
    let mut s = Surrogate::with_hyperparams(points, costs, bounds, hyper)?;
    s.lml_log = log;
    Ok(s)
}

/// Free function form of [`Surrogate::predict`].
pub fn gp_predict(surrogate: &Surrogate, point: &[f64]) -> (f64, f64) {
    surrogate.predict(point)
}
