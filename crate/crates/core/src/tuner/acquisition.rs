use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::gp::{from_unit, Surrogate};

/// How the acquisition is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionSettings {
    /// Quasi-random candidates scored per proposal.
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    /// Best candidates handed to local refinement.
    #[serde(default = "default_refine_top")]
    pub refine_top: usize,
    /// Pattern-search iterations per refined candidate.
    #[serde(default = "default_refine_steps")]
    pub refine_steps: usize,
}

fn default_candidates() -> usize {
    2048
}
fn default_refine_top() -> usize {
    8
}
fn default_refine_steps() -> usize {
    24
}

impl Default for AcquisitionSettings {
    fn default() -> Self {
        AcquisitionSettings {
            candidates: default_candidates(),
            refine_top: default_refine_top(),
            refine_steps: default_refine_steps(),
        }
    }
}

/// Minimization-form expected improvement for a Gaussian with `mean`, `var`.
pub fn expected_improvement_gaussian(mean: f64, var: f64, best: f64) -> f64 {
    let sigma = var.max(0.0).sqrt();
    let gap = best - mean;
    if sigma == 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sigma;
    let n = Normal::standard();
    (gap * n.cdf(z) + sigma * n.pdf(z)).max(0.0)
}

/// `E[max(best - Y, 0)]` under the surrogate posterior at `point`.
pub fn expected_improvement(surrogate: &Surrogate, point: &[f64], best_so_far: f64) -> f64 {
    let (m, v) = surrogate.predict(point);
    expected_improvement_gaussian(m, v, best_so_far)
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = f64::from(base);
    let mut inv = 1.0 / b;
    let mut out = 0.0;
    while i > 0 {
        out += (i % u64::from(base)) as f64 * inv;
        i /= u64::from(base);
        inv /= b;
    }
    out
}

/// `count` Halton points in the unit box with a seeded random shift (mod 1).
pub fn shifted_halton(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "Halton candidates support up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
                .collect()
        })
        .collect()
}

fn ei_unit(s: &Surrogate, u: &[f64], best: f64) -> f64 {
    let (m, v) = s.predict_unit(u);
    expected_improvement_gaussian(m, v, best)
}

fn refine(s: &Surrogate, start: &[f64], best: f64, steps: usize) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = ei_unit(s, &x, best);
    let mut step = 0.05;
    for _ in 0..steps {
        let mut improved = false;
        for d in 0..x.len() {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[d] = (y[d] + dir * step).clamp(0.0, 1.0);
                let fy = ei_unit(s, &y, best);
                if fy > fx {
                    x = y;
                    fx = fy;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

/// Next point to evaluate: the maximizer of expected improvement over the
/// incumbent (lowest training cost).
///
/// Scores a shifted Halton set, refines the best few by pattern search and
/// returns the overall best. When EI vanishes everywhere the candidate with
/// the largest posterior variance is returned instead.
pub fn propose_next(surrogate: &Surrogate, settings: &AcquisitionSettings, seed: u64) -> Vec<f64> {
    let dim = surrogate.dim();
    let best = surrogate.targets.iter().copied().fold(f64::INFINITY, f64::min);
    let cands = shifted_halton(settings.candidates.max(1), dim, seed);
    let scored: Vec<(f64, f64)> = cands
        .iter()
        .map(|u| {
            let (m, v) = surrogate.predict_unit(u);
            (expected_improvement_gaussian(m, v, best), v)
        })
        .collect();

    if scored.iter().all(|(ei, _)| *ei <= 0.0) {
        let (i, _) = scored
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, (_, v))| if *v > acc.1 { (i, *v) } else { acc });
        log::info!("expected improvement is zero everywhere; exploring the highest-variance candidate");
        return from_unit(&cands[i], &surrogate.bounds);
    }

    let mut order: Vec<usize> = (0..cands.len()).collect();
    // Stable sort keeps the earlier candidate on ties.
    order.sort_by(|a, b| scored[*b].0.total_cmp(&scored[*a].0));
    let mut best_u = cands[order[0]].clone();
    let mut best_ei = scored[order[0]].0;
    for &i in order.iter().take(settings.refine_top) {
        let (u, ei) = refine(surrogate, &cands[i], best, settings.refine_steps);
        if ei > best_ei {
            best_u = u;
            best_ei = ei;
        }
    }
    from_unit(&best_u, &surrogate.bounds)
}
