//! Closed-form asymptotic error bounds and the empirical check against them.
//!
//! Both algorithm variants carry a guarantee of the same shape: the tail
//! sup-error against the optimal value is controlled by the projection
//! quality `delta2` and shrinks geometrically in the lookahead depth. The
//! evaluators here require `h >= 2`; at `h = 1` the `1 - alpha^(h-1)` factor
//! vanishes and the guarantee degenerates to the tabular special case, which
//! the driver still runs but the arithmetic refuses.

use crate::driver::RunRecord;
use crate::error::{Error, Result};
use crate::features::Delta2;

fn check_bound_inputs(delta2: f64, alpha: f64, h: usize) -> Result<()> {
    if !(delta2 >= 0.0) {
        return Err(Error::invalid(format!(
            "delta2 must be nonnegative, got {delta2}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if h < 2 {
        return Err(Error::Unsupported(format!(
            "bound evaluators need lookahead h >= 2 (1 - alpha^(h-1) vanishes at h = {h})"
        )));
    }
    Ok(())
}

/// Asymptotic sup-error bound for the least-squares variant:
/// `delta2 / (1 - alpha^(h-1))
///  + alpha^(h-1) (1 + alpha)(delta2 + 1/(1-alpha)) / ((1-alpha)(1 - alpha^(h-1)))`.
pub fn ls_error_bound(delta2: f64, alpha: f64, h: usize) -> Result<f64> {
    check_bound_inputs(delta2, alpha, h)?;
    let lead = alpha.powi(h as i32 - 1);
    let shrink = 1.0 - lead;
    let first = delta2 / shrink;
    let second = lead * (1.0 + alpha) * (delta2 + 1.0 / (1.0 - alpha)) / ((1.0 - alpha) * shrink);
    Ok(first + second)
}

/// Asymptotic sup-error bound for the gradient-descent variant:
/// `(1 / (1 - alpha^(h-1))) * [delta2
///   + alpha^(h-1) (1 + alpha)(delta2 + 1/(1-alpha)) / (1-alpha)]`.
pub fn gd_error_bound(delta2: f64, alpha: f64, h: usize) -> Result<f64> {
    check_bound_inputs(delta2, alpha, h)?;
    let lead = alpha.powi(h as i32 - 1);
    let shrink = 1.0 - lead;
    let inner = delta2 + lead * (1.0 + alpha) * (delta2 + 1.0 / (1.0 - alpha)) / (1.0 - alpha);
    Ok(inner / shrink)
}

/// Bound on `||T_mu' J^mu - J^mu||_inf` over all policy pairs: `(1+alpha)/(1-alpha)`.
pub fn policy_residual_bound(alpha: f64) -> f64 {
    (1.0 + alpha) / (1.0 - alpha)
}

/// Bound on `||T_mu' (M J^mu) - M J^mu||_inf` over all policy pairs:
/// `(1/(1-alpha) + delta2)(1 + alpha)`.
pub fn projected_residual_bound(delta2: f64, alpha: f64) -> f64 {
    (1.0 / (1.0 - alpha) + delta2) * (1.0 + alpha)
}

/// Slack added to every bound comparison before the statistical margin.
pub const BOUND_TOL: f64 = 1e-9;

/// Outcome of checking a run's empirical tail error against the bounds.
///
/// When `delta2_exact` is false the bounds were built from a lower bound on
/// the projection error, so the satisfaction flags are advisory: a failure is
/// inconclusive, only an exact-delta2 failure falsifies the guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub delta2: f64,
    pub delta2_exact: bool,
    pub alpha: f64,
    pub lookahead_h: usize,
    pub ls_bound: f64,
    pub gd_bound: f64,
    /// Max tail-window sup-error recorded by the run.
    pub empirical_tail_error: f64,
    /// Standard error of the tail-window sup-errors.
    pub tail_stderr: f64,
    pub ls_satisfied: bool,
    pub gd_satisfied: bool,
}

/// Compares a run's tail error against both bounds at `BOUND_TOL` plus three
/// standard errors of the tail estimate. The record must carry oracle errors.
pub fn check_run(record: &RunRecord, delta2: &Delta2, alpha: f64, h: usize) -> Result<BoundReport> {
    let empirical = record.summary.tail_max_sup_error.ok_or_else(|| {
        Error::invalid("run record carries no oracle sup-errors; rerun with the optimal value")
    })?;
    let stderr = record.summary.tail_sup_error_stderr.unwrap_or(0.0);
    let ls_bound = ls_error_bound(delta2.value, alpha, h)?;
    let gd_bound = gd_error_bound(delta2.value, alpha, h)?;
    let margin = BOUND_TOL + 3.0 * stderr;
    Ok(BoundReport {
        delta2: delta2.value,
        delta2_exact: delta2.exact,
        alpha,
        lookahead_h: h,
        ls_bound,
        gd_bound,
        empirical_tail_error: empirical,
        tail_stderr: stderr,
        ls_satisfied: empirical <= ls_bound + margin,
        gd_satisfied: empirical <= gd_bound + margin,
    })
}
