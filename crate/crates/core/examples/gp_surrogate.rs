//! Fit the Gaussian-process surrogate to a few samples of a 1-D function and
//! show its posterior, expected improvement and the next proposal.
//!
//!     cargo run --example gp_surrogate

use simloop::tuner::{expected_improvement, gp_fit, gp_predict, propose_next, AcquisitionSettings};

fn f(x: f64) -> f64 {
    (3.0 * x).sin() + 0.3 * x * x
}

fn main() -> anyhow::Result<()> {
    let bounds = [(-3.0, 3.0)];
    let xs = [-2.8, -2.0, -1.1, -0.4, 0.3, 1.0, 1.8, 2.7];
    let points: Vec<Vec<f64>> = xs.iter().map(|x| vec![*x]).collect();
    let costs: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
    let best = costs.iter().copied().fold(f64::INFINITY, f64::min);

    let s = gp_fit(&points, &costs, &bounds, 0)?;
    println!(
        "signal var {:.3}, length scale {:.3} (unit box), log ML {:.3} over {} restarts",
        s.hyper.signal_var,
        s.hyper.length_scales[0],
        s.log_marginal_likelihood,
        s.lml_log.len()
    );

    println!("x,f,mean,std,ei");
    for i in 0..=60 {
        let x = -3.0 + 0.1 * f64::from(i);
        let (m, v) = gp_predict(&s, &[x]);
        println!("{x:.1},{:.4},{m:.4},{:.4},{:.5}", f(x), v.sqrt(), expected_improvement(&s, &[x], best));
    }

    let next = propose_next(&s, &AcquisitionSettings::default(), 1);
    println!("next sample at x = {:.4}", next[0]);
    Ok(())
}
