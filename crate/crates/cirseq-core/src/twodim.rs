//! Two-step aggregated sequential procedure for the parameter pair
//! theta = (a, b).
//!
//! Writing the model as `dX = g_t' theta dt + sqrt(sigma X) dW` with
//! `g_t = (1, -X_t)'`, the observed design matrix is
//!
//! ```text
//! G_t = [[ int X^-1 ds, -t ], [ -t, int X ds ]],
//! ```
//!
//! whose trace is the stage information integral. Stages stop when
//! `tr G_t` crosses a schedule value `kappa_n`; each stage produces the
//! least-squares estimate `G^+ . (int X^-1 dX, -(X_t - x0))` and a
//! data-driven weight `b_n^2`. Stages accumulate until the weight sum
//! reaches `H`, and the weighted average of stage estimates is the
//! aggregated estimator. The truncated version reports zero when the
//! aggregate stopping time overruns the deadline `T`.

use crate::error::{Error, Result};
use crate::path::{Crossing, Functional, PathRecord};
use alloc::vec::Vec;
// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;

/// Dense 2x2 matrix, row-major `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 {
        a: 0.0,
        b: 0.0,
        c: 0.0,
        d: 0.0,
    };

    #[inline]
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Frobenius (Euclidean) norm.
    #[inline]
    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    /// Smaller eigenvalue, assuming the matrix is symmetric.
    #[inline]
    pub fn min_eigen_sym(&self) -> f64 {
        let half_tr = 0.5 * (self.a + self.d);
        let half_diff = 0.5 * (self.a - self.d);
        half_tr - (half_diff * half_diff + self.b * self.c).max(0.0).sqrt()
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2 {
            a: self.d / det,
            b: -self.b / det,
            c: -self.c / det,
            d: self.a / det,
        })
    }

    #[inline]
    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }
}

/// Observed design matrix `G_t` read off the path accumulators.
pub fn design_matrix(path: &PathRecord, t: f64) -> Result<Mat2> {
    let p = path.at_time(t)?;
    Ok(Mat2 {
        a: p.int_invx,
        b: -t,
        c: -t,
        d: p.int_x,
    })
}

/// First time `tr G_t >= z`; `None` when the horizon is insufficient.
pub fn stage_stopping_time(path: &PathRecord, z: f64) -> Option<Crossing> {
    path.crossing(Functional::TraceG, z)
}

/// Relative eigenvalue floor under which a stage counts as singular.
/// Numerical stand-in for the exact-zero event of the pseudo-inverse rule.
pub const SINGULARITY_REL_EPS: f64 = 1e-10;

/// Stage estimate `G^+ . (int X^-1 dX, -(X_t - x0))` at stage stop `t_n`;
/// the zero vector when `G` is numerically singular.
pub fn stage_mle(path: &PathRecord, t_n: f64, sigma: f64) -> Result<[f64; 2]> {
    let p = path.at_time(t_n)?;
    let g = Mat2 {
        a: p.int_invx,
        b: -p.time,
        c: -p.time,
        d: p.int_x,
    };
    if g.min_eigen_sym() <= SINGULARITY_REL_EPS * g.trace() {
        return Ok([0.0, 0.0]);
    }
    let obs = [
        p.ito_log_integral(path.log_state()[0], sigma),
        -(p.state - path.x0()),
    ];
    Ok(g.inverse().map_or([0.0, 0.0], |inv| inv.mul_vec(obs)))
}

/// Stage weight `b_n^2` with `b_n = 1/(|G^-1| kappa_n)` on the
/// positive-definite branch and zero otherwise (Frobenius norm).
pub fn stage_weight(g_at_stop: &Mat2, kappa_n: f64) -> f64 {
    debug_assert!(kappa_n > 0.0);
    if g_at_stop.min_eigen_sym() <= SINGULARITY_REL_EPS * g_at_stop.trace() {
        return 0.0;
    }
    match g_at_stop.inverse() {
        Some(inv) => {
            let b = 1.0 / (inv.frobenius() * kappa_n);
            b * b
        }
        None => 0.0,
    }
}

/// Stage thresholds: `kappa_n = H` for `n <= n* = floor(2 u_* H)`, then
/// `kappa_n = n^varpi` with growth exponent `1 < varpi < 2`.
#[derive(Debug, Clone, Copy)]
pub struct KappaSchedule {
    pub h: f64,
    pub varpi: f64,
    pub n_star: u64,
    pub delta_star: f64,
}

impl KappaSchedule {
    pub fn new(h: f64, varpi: f64, u_star: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::BadParam {
                what: "kappa schedule needs H > 0",
            });
        }
        if !(varpi > 1.0 && varpi < 2.0) {
            return Err(Error::BadParam {
                what: "varpi must lie in (1, 2)",
            });
        }
        if !(u_star >= 1.0 && u_star.is_finite()) {
            return Err(Error::BadParam {
                what: "u_star must be >= 1",
            });
        }
        let n_star = (2.0 * u_star * h).floor() as u64;
        let schedule = Self {
            h,
            varpi,
            n_star,
            delta_star: 0.5 * (2.0 - varpi),
        };
        if ((n_star + 1) as f64).powf(varpi) < h {
            // Would break monotonicity at the junction; cannot happen for
            // H >= 1 and u_* >= 1, but reject degenerate inputs loudly.
            return Err(Error::BadParam {
                what: "kappa schedule not nondecreasing",
            });
        }
        Ok(schedule)
    }

    /// Threshold for stage `n` (1-based).
    #[inline]
    pub fn kappa(&self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        if n <= self.n_star {
            self.h
        } else {
            (n as f64).powf(self.varpi)
        }
    }

    /// Hard cap on the stage count (a.s. finiteness is asymptotic; a
    /// runaway loop must fail loudly instead of spinning).
    #[inline]
    pub fn stage_cap(&self) -> u64 {
        10 * self.n_star.max(1)
    }
}

/// One stage of the two-step procedure.
#[derive(Debug, Clone, Copy)]
pub struct StageRecord {
    pub index: u64,
    pub kappa: f64,
    pub t_stop: f64,
    pub g_at_stop: Mat2,
    pub estimate: [f64; 2],
    pub weight_sq: f64,
    pub singular: bool,
}

/// Result of running stages until the weight sum reaches `H`.
#[derive(Debug, Clone)]
pub enum StageRun {
    /// Weight sum reached `H` at stage `upsilon`; `tau` is that stage's stop.
    Completed {
        upsilon: u64,
        tau: f64,
        estimate: [f64; 2],
        weight_sum: f64,
        stages: Option<Vec<StageRecord>>,
    },
    /// The path horizon ended before the next stage crossing; the next
    /// stage needs `tr G >= needed`.
    NeedHorizon { needed: f64, reached_stage: u64 },
    /// The cap fired before the weight sum reached `H`.
    CapExceeded { cap: u64, weight_sum: f64 },
}

/// Run the stage loop on one trajectory. Stages with equal thresholds
/// share one crossing computation. Set `collect` to materialize per-stage
/// records for diagnostics.
pub fn run_stages(
    path: &PathRecord,
    schedule: &KappaSchedule,
    sigma: f64,
    collect: bool,
) -> Result<StageRun> {
    let cap = schedule.stage_cap();
    let mut stages = if collect { Some(Vec::new()) } else { None };
    let mut weight_sum = 0.0;
    let mut num = [0.0_f64, 0.0];
    let mut n = 1u64;
    let mut hint = 0usize;
    // Cache of the last computed stage (shared by equal-kappa stages).
    let mut cached: Option<(f64, f64, Mat2, [f64; 2], f64)> = None;
    loop {
        if n > cap {
            return Ok(StageRun::CapExceeded { cap, weight_sum });
        }
        let kappa = schedule.kappa(n);
        let stage = match &cached {
            Some(c) if c.0 == kappa => *c,
            _ => {
                let cross = match path.crossing_from(Functional::TraceG, kappa, hint) {
                    Some(c) => c,
                    None => {
                        return Ok(StageRun::NeedHorizon {
                            needed: kappa,
                            reached_stage: n,
                        })
                    }
                };
                hint = cross.node;
                let t_n = cross.point.time;
                let g = Mat2 {
                    a: cross.point.int_invx,
                    b: -t_n,
                    c: -t_n,
                    d: cross.point.int_x,
                };
                let w = stage_weight(&g, kappa);
                let est = if w > 0.0 {
                    let obs = [
                        cross.point.ito_log_integral(path.log_state()[0], sigma),
                        -(cross.point.state - path.x0()),
                    ];
                    g.inverse().map_or([0.0, 0.0], |inv| inv.mul_vec(obs))
                } else {
                    [0.0, 0.0]
                };
                let entry = (kappa, t_n, g, est, w);
                cached = Some(entry);
                entry
            }
        };
        let (kappa, t_n, g, est, w) = stage;
        if let Some(list) = stages.as_mut() {
            list.push(StageRecord {
                index: n,
                kappa,
                t_stop: t_n,
                g_at_stop: g,
                estimate: est,
                weight_sq: w,
                singular: w == 0.0,
            });
        }
        weight_sum += w;
        num[0] += w * est[0];
        num[1] += w * est[1];
        if weight_sum >= schedule.h {
            let estimate = [num[0] / weight_sum, num[1] / weight_sum];
            return Ok(StageRun::Completed {
                upsilon: n,
                tau: t_n,
                estimate,
                weight_sum,
                stages,
            });
        }
        n += 1;
    }
}

/// Stage-count stopping rule on a stream of weights:
/// `upsilon_H = inf{k : sum_{n<=k} b_n^2 >= H}`, capped so an exhausted
/// or degenerate stream fails loudly instead of spinning.
pub fn stage_count<I: IntoIterator<Item = f64>>(weights: I, h: f64, cap: u64) -> Result<u64> {
    debug_assert!(h > 0.0);
    let mut acc = 0.0;
    let mut k = 0u64;
    for w in weights {
        k += 1;
        if k > cap {
            return Err(Error::StageCap { cap });
        }
        acc += w;
        if acc >= h {
            return Ok(k);
        }
    }
    Err(Error::StageCap { cap })
}

/// Aggregate explicit stage records: weighted average of stage estimates,
/// stopping at the first stage where the cumulative weight reaches `H`.
pub fn aggregated_estimate(stages: &[StageRecord], h: f64) -> Option<(f64, [f64; 2])> {
    let mut weight_sum = 0.0;
    let mut num = [0.0_f64, 0.0];
    for s in stages {
        weight_sum += s.weight_sq;
        num[0] += s.weight_sq * s.estimate[0];
        num[1] += s.weight_sq * s.estimate[1];
        if weight_sum >= h {
            return Some((s.t_stop, [num[0] / weight_sum, num[1] / weight_sum]));
        }
    }
    None
}

/// Outcome of the truncated two-step procedure.
#[derive(Debug, Clone)]
pub struct Outcome2d {
    pub stop_time: f64,
    pub estimate: [f64; 2],
    pub truncated: bool,
    /// Aggregate stopping time when it was observed within the horizon.
    pub raw_stop: Option<f64>,
    /// Stage count at completion; `None` when the horizon censored it.
    pub upsilon: Option<u64>,
    /// Stages whose crossings were inside the horizon (equals `upsilon`
    /// on completion).
    pub stages_seen: u64,
    pub stages: Option<Vec<StageRecord>>,
}

/// Truncated two-step estimate: the aggregated estimator when its
/// stopping time lands by `T`, the zero vector (flagged) otherwise.
///
/// The path must either cover `[0, T]` or already contain the aggregate
/// crossing; otherwise the decision is not determined and an error is
/// returned so the caller can extend the trajectory.
pub fn truncated_estimate_2d(
    path: &PathRecord,
    t_deadline: f64,
    schedule: &KappaSchedule,
    sigma: f64,
    collect: bool,
) -> Result<Outcome2d> {
    match run_stages(path, schedule, sigma, collect)? {
        StageRun::Completed {
            upsilon,
            tau,
            estimate,
            stages,
            ..
        } => {
            if tau <= t_deadline {
                Ok(Outcome2d {
                    stop_time: tau,
                    estimate,
                    truncated: false,
                    raw_stop: Some(tau),
                    upsilon: Some(upsilon),
                    stages_seen: upsilon,
                    stages,
                })
            } else {
                Ok(Outcome2d {
                    stop_time: t_deadline,
                    estimate: [0.0, 0.0],
                    truncated: true,
                    raw_stop: Some(tau),
                    upsilon: Some(upsilon),
                    stages_seen: upsilon,
                    stages,
                })
            }
        }
        StageRun::NeedHorizon { reached_stage, .. } => {
            if path.covers(t_deadline) {
                // Stage crossings are nondecreasing, so the aggregate stop
                // lies beyond the horizon >= T: truncated.
                Ok(Outcome2d {
                    stop_time: t_deadline,
                    estimate: [0.0, 0.0],
                    truncated: true,
                    raw_stop: None,
                    upsilon: None,
                    stages_seen: reached_stage.saturating_sub(1),
                    stages: None,
                })
            } else {
                Err(Error::PathTooShort {
                    have: path.horizon(),
                    need: t_deadline,
                })
            }
        }
        StageRun::CapExceeded { cap, .. } => Err(Error::StageCap { cap }),
    }
}
