use crate::error::ReportError;

fn check(estimate: &[f64], truth: &[f64]) -> Result<(), ReportError> {
    if estimate.len() != truth.len() {
        return Err(ReportError::LengthMismatch {
            estimate: estimate.len(),
            truth: truth.len(),
        });
    }
    if estimate.is_empty() {
        return Err(ReportError::Empty);
    }
    Ok(())
}

/// Root mean square of `estimate - truth`.
pub fn rmse(estimate: &[f64], truth: &[f64]) -> Result<f64, ReportError> {
    check(estimate, truth)?;
    let sum: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum();
    Ok((sum / estimate.len() as f64).sqrt())
}

/// Largest `|estimate - truth|`.
pub fn max_abs_error(estimate: &[f64], truth: &[f64]) -> Result<f64, ReportError> {
    check(estimate, truth)?;
    Ok(estimate.iter().zip(truth).map(|(e, t)| (e - t).abs()).fold(0.0, f64::max))
}
