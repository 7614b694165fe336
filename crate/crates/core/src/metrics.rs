//! Position error statistics over Monte Carlo runs.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::float::sqrt;
use crate::scenario::CtState;
use crate::{Error, Result};

/// Squared position error of a state estimate.
pub fn position_sq_error(estimate: &DVector<f64>, truth: &CtState) -> f64 {
    let [a, b] = truth.position();
    let da = estimate[0] - a;
    let db = estimate[2] - b;
    da * da + db * db
}

/// Squared position errors of one run: `errors[t][k]` for step `t+1` and
/// estimating node `k`.
pub type RunErrors = Vec<Vec<f64>>;

/// Per-step errors for the estimates of `nodes` (all estimates if `None`).
pub fn run_errors(
    estimates: &[Vec<DVector<f64>>],
    truth: &[CtState],
    nodes: Option<&[usize]>,
) -> Result<RunErrors> {
    if estimates.len() != truth.len() {
        return Err(Error::InvalidDimension(alloc::format!(
            "{} estimate steps vs {} truth steps",
            estimates.len(),
            truth.len()
        )));
    }
    Ok(estimates
        .iter()
        .zip(truth)
        .map(|(step, x)| match nodes {
            Some(ids) => ids
                .iter()
                .map(|&k| position_sq_error(&step[k], x))
                .collect(),
            None => step.iter().map(|e| position_sq_error(e, x)).collect(),
        })
        .collect())
}

/// RMSE at each step, pooled over runs and estimating nodes.
pub fn rmse(runs: &[RunErrors]) -> Result<Vec<f64>> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Usage("no successful runs".into()))?;
    let steps = first.len();
    if runs.iter().any(|r| r.len() != steps) {
        return Err(Error::InvalidDimension(
            "runs have different lengths".into(),
        ));
    }
    (0..steps)
        .map(|t| {
            let (sum, count) = runs.iter().fold((0.0, 0usize), |(s, c), r| {
                (s + r[t].iter().sum::<f64>(), c + r[t].len())
            });
            if count == 0 {
                Err(Error::Usage("no estimating nodes".into()))
            } else {
                Ok(sqrt(sum / count as f64))
            }
        })
        .collect()
}

/// Time average of an RMSE curve.
pub fn trmse(curve: &[f64]) -> Result<f64> {
    if curve.is_empty() {
        return Err(Error::Usage("empty RMSE curve".into()));
    }
    Ok(curve.iter().sum::<f64>() / curve.len() as f64)
}

/// Time-averaged RMS error of a single run.
pub fn run_trmse(run: &RunErrors) -> Result<f64> {
    trmse(&rmse(core::slice::from_ref(run))?)
}

/// Standard error of the mean of paired differences `a[i] - b[i]`.
pub fn paired_standard_error(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidDimension(
            "paired samples differ in length".into(),
        ));
    }
    let m = a.len();
    if m < 2 {
        return Err(Error::Usage("need at least two paired samples".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / m as f64;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (m - 1) as f64;
    Ok(sqrt(var / m as f64))
}
