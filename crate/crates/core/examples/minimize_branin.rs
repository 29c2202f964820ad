//! Bayesian optimization of the Branin function, a standard 2-D test with
//! three global minima of value 0.397887.
//!
//!     cargo run --release --example minimize_branin

use std::f64::consts::PI;

use simloop::tuner::{minimize, CostOutcome, TuneConfig};

fn branin(x: &[f64]) -> f64 {
    let (a, b, c) = (1.0, 5.1 / (4.0 * PI * PI), 5.0 / PI);
    let (r, s, t) = (6.0, 10.0, 1.0 / (8.0 * PI));
    a * (x[1] - b * x[0] * x[0] + c * x[0] - r).powi(2) + s * (1.0 - t) * x[0].cos() + s
}

fn main() -> anyhow::Result<()> {
    let bounds = [(-5.0, 10.0), (0.0, 15.0)];
    let config = TuneConfig {
        n_iter: 60,
        ..TuneConfig::default()
    };
    let result = minimize(
        |x| Ok(CostOutcome::Finite(branin(x))),
        &bounds,
        vec!["x1".into(), "x2".into()],
        &config,
    )?;

    for (i, j) in result.history.incumbent_curve().iter().enumerate().step_by(10) {
        println!("after {:>3} evaluations: {j:.6}", i + 1);
    }
    println!(
        "best f({:.4}, {:.4}) = {:.6}, global minimum 0.397887",
        result.best_k[0], result.best_k[1], result.best_j
    );
    Ok(())
}
