//! Scalar sequential and truncated estimators: `b` with `a` known, and
//! `a` with `b` known, plus the fixed-horizon MLEs used for comparison.

use crate::error::{Error, Result};
use crate::path::{Functional, PathRecord};

/// One sequential procedure instance: threshold `H`, deadline `T`, bound
/// order `m`, clamp level `r` (the b-procedure ignores `r`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcedureConfig {
    pub h: f64,
    pub t: f64,
    pub m: u32,
    pub r: f64,
}

impl ProcedureConfig {
    pub fn new(h: f64, t: f64, m: u32, r: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::BadParam {
                what: "H must be > 0",
            });
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::BadParam {
                what: "T must be > 0",
            });
        }
        if m < 2 {
            return Err(Error::BadParam {
                what: "bound order m too small",
            });
        }
        if !(r >= 1.0) {
            return Err(Error::BadParam {
                what: "clamp level r must be >= 1",
            });
        }
        Ok(Self { h, t, m, r })
    }
}

/// Raw (untruncated) stopping information kept for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawStop {
    /// The crossing was observed at this time (it may exceed `T`).
    Observed(f64),
    /// No crossing within the simulated horizon.
    CensoredBeyond(f64),
}

/// Result of a truncated sequential procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOutcome {
    /// Model time at which observation ended (`tau_H` or `T`).
    pub stop_time: f64,
    /// Declared estimate; zero when the rule did not fire by `T`.
    pub estimate: f64,
    /// True when `tau_H > T` (estimate declared zero).
    pub truncated: bool,
    pub raw_stop: RawStop,
}

/// Untruncated sequential stop: crossing time and on-stop estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialStop {
    pub tau: f64,
    pub estimate: f64,
}

/// Fixed-horizon MLE of `b` with `a` known:
/// `(a T - X_T + x0) / int_0^T X ds`.
pub fn mle_b_fixed_horizon(path: &PathRecord, a_known: f64, upto_time: f64) -> Result<f64> {
    let p = path.at_time(upto_time)?;
    Ok((a_known * p.time - p.state + path.x0()) / p.int_x)
}

/// Sequential estimate of `b`: stop when `int X ds` reaches `H`, then
/// `(a tau - X_tau + x0)/H`. `None` when the horizon ends first.
pub fn sequential_estimate_b(path: &PathRecord, a_known: f64, h: f64) -> Option<SequentialStop> {
    let cross = path.crossing(Functional::IntX, h)?;
    let tau = cross.point.time;
    Some(SequentialStop {
        tau,
        estimate: (a_known * tau - cross.point.state + path.x0()) / h,
    })
}

/// Fixed-horizon MLE of `a` with `b` known:
/// `(b T + int_0^T X^-1 dX) / int_0^T X^-1 ds`,
/// the stochastic integral via the Ito log identity.
pub fn mle_a_fixed_horizon(
    path: &PathRecord,
    b_known: f64,
    sigma: f64,
    upto_time: f64,
) -> Result<f64> {
    let p = path.at_time(upto_time)?;
    let ito = p.ito_log_integral(path.log_state()[0], sigma);
    Ok((b_known * p.time + ito) / p.int_invx)
}

/// Sequential estimate of `a`: stop when `int X^-1 ds` reaches `H`, then
/// `(b tau + int_0^tau X^-1 dX)/H`.
pub fn sequential_estimate_a(
    path: &PathRecord,
    b_known: f64,
    sigma: f64,
    h: f64,
) -> Option<SequentialStop> {
    let cross = path.crossing(Functional::IntInvX, h)?;
    let tau = cross.point.time;
    let ito = cross.point.ito_log_integral(path.log_state()[0], sigma);
    Some(SequentialStop {
        tau,
        estimate: (b_known * tau + ito) / h,
    })
}

fn truncate(
    path: &PathRecord,
    stop: Option<SequentialStop>,
    t_deadline: f64,
) -> Result<EstimateOutcome> {
    match stop {
        Some(s) if s.tau <= t_deadline => Ok(EstimateOutcome {
            stop_time: s.tau,
            estimate: s.estimate,
            truncated: false,
            raw_stop: RawStop::Observed(s.tau),
        }),
        Some(s) => Ok(EstimateOutcome {
            stop_time: t_deadline,
            estimate: 0.0,
            truncated: true,
            raw_stop: RawStop::Observed(s.tau),
        }),
        None => {
            if !path.covers(t_deadline) {
                // Cannot decide whether the rule fired by T.
                return Err(Error::PathTooShort {
                    have: path.horizon(),
                    need: t_deadline,
                });
            }
            Ok(EstimateOutcome {
                stop_time: t_deadline,
                estimate: 0.0,
                truncated: true,
                raw_stop: RawStop::CensoredBeyond(path.horizon()),
            })
        }
    }
}

/// Truncated b-procedure: the sequential estimate when `tau_H <= T`,
/// the literal zero estimate (flagged) otherwise.
pub fn truncated_estimate_b(
    path: &PathRecord,
    a_known: f64,
    config: &ProcedureConfig,
) -> Result<EstimateOutcome> {
    truncate(
        path,
        sequential_estimate_b(path, a_known, config.h),
        config.t,
    )
}

/// Truncated a-procedure; mirrors [`truncated_estimate_b`] on `int X^-1`.
pub fn truncated_estimate_a(
    path: &PathRecord,
    b_known: f64,
    sigma: f64,
    config: &ProcedureConfig,
) -> Result<EstimateOutcome> {
    truncate(
        path,
        sequential_estimate_a(path, b_known, sigma, config.h),
        config.t,
    )
}
