//! Every explicit constant of the guaranteed accuracy bounds: moment
//! envelopes x_q, the thresholds L_m / U_m / V_m / Z_m, the clamped
//! inverse-moment functionals mu, the clamp level r, Fisher informations,
//! the ergodic matrix F with u_* and b_*^2, and the accuracy functions of
//! all three procedures.
//!
//! All functions here are pure; worst cases over the parameter rectangle
//! are taken on corner/midpoint grids.

use crate::error::{Error, Result};
use crate::quad;
use crate::region::ParamRegion;
use crate::special::{gamma_extremes, gamma_pdf, ln_gamma};
use crate::twodim::Mat2;
// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;

/// Multiplicative safety factor on the moment envelope; covers the gaps of
/// the finite time/parameter grids behind the supremum.
pub const ENVELOPE_SAFETY: f64 = 1.05;

/// Relative tolerance for the quadratures feeding bound constants.
const QUAD_TOL: f64 = 1e-11;

/// Number of grid points per axis for worst-case scans over the rectangle.
const REGION_GRID: usize = 5;

// ---------------------------------------------------------------------------
// Transient moments and the envelope x_q
// ---------------------------------------------------------------------------

/// `E[X_t^q | X_0 = x0]` under the exact transition law.
///
/// With `c = 2b/(sigma(1 - e^(-bt)))` and Poisson mixing mean
/// `pm = c x0 e^(-bt)`, the conditional law is `Gamma(alpha + J, 1)/c`
/// with `J ~ Poisson(pm)`, so the moment is the Poisson mixture of Gamma
/// moments, summed in log space around the Poisson bulk.
pub fn transient_moment(a: f64, b: f64, sigma: f64, x0: f64, q: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let alpha = 2.0 * a / sigma;
    debug_assert!(alpha + q > 0.0, "moment diverges");
    if t == 0.0 {
        return x0.powf(q);
    }
    let decay = (-b * t).exp();
    let c = 2.0 * b / (sigma * (1.0 - decay));
    let pm = c * x0 * decay;
    let ln_c = c.ln();
    let ln_term = |j: f64| -> f64 {
        -pm + j * pm.ln() - ln_gamma(j + 1.0) + ln_gamma(alpha + j + q)
            - ln_gamma(alpha + j)
            - q * ln_c
    };
    if pm < 1e-280 {
        return (ln_gamma(alpha + q) - ln_gamma(alpha) - q * ln_c).exp();
    }
    // Sum outward from the Poisson bulk until terms stop contributing.
    let j0 = pm.floor();
    let ln_peak = ln_term(j0);
    let mut acc = (ln_term(j0) - ln_peak).exp();
    let mut j = j0 + 1.0;
    loop {
        let w = (ln_term(j) - ln_peak).exp();
        acc += w;
        if w < 1e-18 * acc {
            break;
        }
        j += 1.0;
    }
    j = j0 - 1.0;
    while j >= 0.0 {
        let w = (ln_term(j) - ln_peak).exp();
        acc += w;
        if w < 1e-18 * acc {
            break;
        }
        j -= 1.0;
    }
    (ln_peak).exp() * acc
}

/// Time grid for the envelope supremum: 0, a geometric ladder capped at 50,
/// and effectively-stationary times via the closed stationary moment.
fn envelope_time_grid() -> impl Iterator<Item = f64> {
    let ladder = (0..10)
        .map(|k| 0.1 * (1u64 << k) as f64)
        .map(|t| t.min(50.0));
    core::iter::once(0.0).chain(ladder)
}

/// Moment envelope `x_q`: a finite upper estimate of
/// `sup_t sup_Theta E X_t^q`, evaluated on a time x corner grid from the
/// exact transition law and inflated by [`ENVELOPE_SAFETY`].
pub fn moment_envelope(region: &ParamRegion, q: f64) -> Result<f64> {
    if q <= -region.alpha_min() {
        return Err(Error::MomentDiverges {
            q,
            alpha_min: region.alpha_min(),
        });
    }
    let mut sup = f64::NEG_INFINITY;
    for (a, b) in region.grid(3) {
        for t in envelope_time_grid() {
            sup = sup.max(transient_moment(a, b, region.sigma, region.x0, q, t));
        }
        // Stationary value (t -> infinity limit).
        let m = region.model_at(a, b).stationary_moment(q)?;
        sup = sup.max(m);
    }
    Ok(sup * ENVELOPE_SAFETY)
}

// ---------------------------------------------------------------------------
// L_m, U_m, V_m, Z_m
// ---------------------------------------------------------------------------

fn require_order(m: u32, min: u32) -> Result<()> {
    if m < min {
        return Err(Error::BadParam {
            what: "bound order m too small",
        });
    }
    Ok(())
}

/// Deviation-moment threshold
/// `L_m = 3^(2m-1) (2 x_{2m} + sigma^m (m(2m-1))^m x_m)`.
pub fn l_m(region: &ParamRegion, m: u32) -> Result<f64> {
    require_order(m, 1)?;
    let mf = m as f64;
    let x_2m = moment_envelope(region, 2.0 * mf)?;
    let x_m = moment_envelope(region, mf)?;
    Ok(3.0f64.powi(2 * m as i32 - 1)
        * (2.0 * x_2m + region.sigma.powi(m as i32) * (mf * (2.0 * mf - 1.0)).powi(m as i32) * x_m))
}

/// `U_m = L_m b_max^2 / b_min^(2m)` (b-procedure truncation constant).
pub fn u_m(region: &ParamRegion, m: u32) -> Result<f64> {
    Ok(l_m(region, m)? * region.b_max * region.b_max / region.b_min.powi(2 * m as i32))
}

fn log_sum_exp3(a: f64, b: f64, c: f64) -> f64 {
    let m = a.max(b).max(c);
    m + ((a - m).exp() + (b - m).exp() + (c - m).exp()).ln()
}

/// Log of the corrector sup-norm bracket
///
/// ```text
/// 4 e^be / a_lo + 2^a_hi Gamma_max / min(bp^a_lo, bp^a_hi) + 2^a_hi / bd
/// ```
///
/// with separately chosen beta slots so both the scalar-a form (single
/// beta) and the two-dimensional form (beta_max in the exponential,
/// beta_min elsewhere) reuse it.
fn ln_bracket(alpha_lo: f64, alpha_hi: f64, beta_exp: f64, beta_pow: f64, beta_div: f64) -> f64 {
    let (_, gamma_max) = gamma_extremes(alpha_lo, alpha_hi);
    let t1 = (4.0f64).ln() + beta_exp - alpha_lo.ln();
    let t2 = alpha_hi * core::f64::consts::LN_2 + gamma_max.ln()
        - (alpha_lo * beta_pow.ln()).min(alpha_hi * beta_pow.ln());
    let t3 = alpha_hi * core::f64::consts::LN_2 - beta_div.ln();
    log_sum_exp3(t1, t2, t3)
}

/// Corrector sup-norm bound `y_* <= (phi_*/sigma) * bracket(alpha, beta)`
/// for a single parameter point.
pub fn y_star_bound(phi_star: f64, sigma: f64, alpha: f64, beta: f64) -> f64 {
    phi_star / sigma * ln_bracket(alpha, alpha, beta, beta, beta).exp()
}

/// `V_m` of the a-procedure bound: `a_max^2 L_m / sigma^(2m)` times the
/// corrector bracket to the power `2m`, with `beta = 2b/sigma` for the
/// known fixed `b`.
pub fn v_m(region: &ParamRegion, m: u32) -> Result<f64> {
    require_order(m, 1)?;
    region.require_a_min_above_half_sigma()?;
    let beta = 2.0 * region.known_b() / region.sigma;
    let lb = ln_bracket(region.alpha_min(), region.alpha_max(), beta, beta, beta);
    let ln_v = 2.0 * region.a_max.ln() + l_m(region, m)?.ln() - 2.0 * m as f64 * region.sigma.ln()
        + 2.0 * m as f64 * lb;
    Ok(ln_v.exp())
}

/// `Z_m` of the two-dimensional bound:
/// `2^(2m) L_m (1/b_min^(2m) + bracket^(2m)/sigma^(2m))` with `beta_max`
/// in the exponential term and `beta_min` in the power/division terms.
pub fn z_m(region: &ParamRegion, m: u32) -> Result<f64> {
    require_order(m, 1)?;
    region.require_a_min_above_half_sigma()?;
    let lb = ln_bracket(
        region.alpha_min(),
        region.alpha_max(),
        region.beta_max(),
        region.beta_min(),
        region.beta_min(),
    );
    let mf = m as f64;
    let inner = (-2.0 * mf * region.b_min.ln()).exp()
        + (2.0 * mf * lb - 2.0 * mf * region.sigma.ln()).exp();
    Ok((2.0f64).powi(2 * m as i32) * l_m(region, m)? * inner)
}

// ---------------------------------------------------------------------------
// Clamped inverse moments mu and the clamp level r
// ---------------------------------------------------------------------------

/// `mu_{a,theta}(r) = E[min(X^-1, r)]` under the stationary Gamma law with
/// shape `2*theta/sigma` and rate `2b/sigma`, by adaptive quadrature split
/// at the clamp kink `1/r`.
pub fn mu_a_theta(a_value: f64, b: f64, sigma: f64, r: f64) -> f64 {
    debug_assert!(r >= 1.0);
    let alpha = 2.0 * a_value / sigma;
    let beta = 2.0 * b / sigma;
    let hi = quad::gamma_tail_cutoff(alpha, beta, 1e-15);
    quad::integrate_with_knots(
        |z| (1.0 / z).min(r) * gamma_pdf(alpha, beta, z),
        0.0,
        hi,
        &[1.0 / r],
        QUAD_TOL,
        0.0,
    )
}

/// Worst-case clamped rate `mu_{a,*} = inf_Theta mu_{a,theta}` over the
/// a-interval of the region (b known).
pub fn mu_star_a(region: &ParamRegion, r: f64) -> Result<f64> {
    region.require_a_min_above_half_sigma()?;
    let b = region.known_b();
    let mut inf = f64::INFINITY;
    for i in 0..REGION_GRID {
        let w = i as f64 / (REGION_GRID - 1) as f64;
        let a = region.a_min + w * (region.a_max - region.a_min);
        inf = inf.min(mu_a_theta(a, b, region.sigma, r));
        if region.a_min == region.a_max {
            break;
        }
    }
    Ok(inf)
}

/// Two-dimensional stage rate `mu_theta = a/b + E[min(X^-1, r)]`.
pub fn mu_theta_2d(a: f64, b: f64, sigma: f64, r: f64) -> f64 {
    a / b + mu_a_theta(a, b, sigma, r)
}

/// `mu_* = inf_Theta mu_theta` over the rectangle grid.
pub fn mu_star_2d(region: &ParamRegion, r: f64) -> Result<f64> {
    region.require_a_min_above_half_sigma()?;
    let mut inf = f64::INFINITY;
    for (a, b) in region.grid(REGION_GRID) {
        inf = inf.min(mu_theta_2d(a, b, region.sigma, r));
    }
    Ok(inf)
}

/// The constant `u_r = (beta^alpha_min v beta^alpha_max) /
/// (Gamma_min (alpha_min - 1))` entering the clamp-level choice.
pub fn u_r_const(region: &ParamRegion, b: f64) -> Result<f64> {
    if region.alpha_min() <= 1.0 {
        return Err(Error::NeedsAMinAboveHalfSigma {
            a_min: region.a_min,
            sigma: region.sigma,
        });
    }
    let beta = 2.0 * b / region.sigma;
    let (gamma_min, _) = gamma_extremes(region.alpha_min(), region.alpha_max());
    let pow = beta
        .powf(region.alpha_min())
        .max(beta.powf(region.alpha_max()));
    Ok(pow / (gamma_min * (region.alpha_min() - 1.0)))
}

/// Clamp level `r = ((2 a_max - sigma) u_r / (2 b eps))^(1/(alpha_min - 1))`
/// with `eps = T^(-delta (alpha_min - 1))`, floored at 1. Grows like
/// `O(T^delta)`.
pub fn r_threshold(region: &ParamRegion, b: f64, t: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::BadParam {
            what: "delta must lie in (0, 1/2)",
        });
    }
    if !(t >= 1.0) {
        return Err(Error::HorizonRange { t, needs: 1.0 });
    }
    let u_r = u_r_const(region, b)?;
    let expo = region.alpha_min() - 1.0;
    let eps = t.powf(-delta * expo).min(1.0);
    let r = ((2.0 * region.a_max - region.sigma) * u_r / (2.0 * b * eps)).powf(1.0 / expo);
    Ok(r.max(1.0))
}

// ---------------------------------------------------------------------------
// Fisher information and the ergodic matrix
// ---------------------------------------------------------------------------

/// Which scalar coordinate is being estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherCase {
    /// Estimating `b` with `a` known: `I(theta) = a / (sigma theta)`.
    EstimateB,
    /// Estimating `a` with `b` known: `I(theta) = 2b / (sigma (2 theta - sigma))`.
    EstimateA,
}

/// Per-unit-time Fisher information of the scalar problems.
pub fn fisher_info(case: FisherCase, theta: f64, fixed_other: f64, sigma: f64) -> Result<f64> {
    if !(theta > 0.0 && fixed_other > 0.0 && sigma > 0.0) {
        return Err(Error::BadParam {
            what: "fisher arguments must be > 0",
        });
    }
    match case {
        FisherCase::EstimateB => Ok(fixed_other / (sigma * theta)),
        FisherCase::EstimateA => {
            if theta <= sigma / 2.0 {
                return Err(Error::FisherPole { theta, sigma });
            }
            Ok(2.0 * fixed_other / (sigma * (2.0 * theta - sigma)))
        }
    }
}

/// Ergodic design limit `F = [[f1, -1], [-1, f2]]` with
/// `f1 = 2b/(2a - sigma)` and `f2 = a/b`; positive definite for
/// `a > sigma/2`.
pub fn ergodic_matrix_f(a: f64, b: f64, sigma: f64) -> Result<Mat2> {
    if a <= sigma / 2.0 {
        return Err(Error::NeedsAMinAboveHalfSigma { a_min: a, sigma });
    }
    Ok(Mat2 {
        a: 2.0 * b / (2.0 * a - sigma),
        b: -1.0,
        c: -1.0,
        d: a / b,
    })
}

/// `b_*^2 = 1 / (|F^-1| tr F)^2` at one parameter point (Frobenius norm).
pub fn b_star_sq(a: f64, b: f64, sigma: f64) -> Result<f64> {
    let f = ergodic_matrix_f(a, b, sigma)?;
    let inv = f.inverse().ok_or(Error::BadParam {
        what: "F must be invertible",
    })?;
    Ok(1.0 / (inv.frobenius() * f.trace()).powi(2))
}

/// `u_* = max_Theta (|F^-1| tr F)^2` over the rectangle grid. Reciprocal
/// of `b_*^2` when the rectangle degenerates to a point.
pub fn u_star(region: &ParamRegion) -> Result<f64> {
    region.require_a_min_above_half_sigma()?;
    let mut sup = f64::NEG_INFINITY;
    for (a, b) in region.grid(REGION_GRID) {
        sup = sup.max(1.0 / b_star_sq(a, b, region.sigma)?);
    }
    Ok(sup)
}

/// Weight-series tail `rho*_H = sum_{n > n*_H} (kappa*_n)^-1` bounded in
/// closed form by `(n*_H)^(1-varpi)/(varpi - 1)` for `kappa*_n = n^varpi`.
pub fn rho_star(h: f64, u_star: f64, varpi: f64) -> f64 {
    debug_assert!(varpi > 1.0);
    let n_star = 2.0 * u_star * h;
    n_star.powf(1.0 - varpi) / (varpi - 1.0)
}

// ---------------------------------------------------------------------------
// Accuracy functions
// ---------------------------------------------------------------------------

/// Decomposition of a guaranteed mean-square accuracy value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyBreakdown {
    /// Leading `sigma/H`-type term.
    pub statistical_term: f64,
    /// `(rate T - H)^(-2m)`-type truncation-probability term.
    pub truncation_term: f64,
    /// Stage-count tail term; zero for the scalar procedures.
    pub stage_tail_term: f64,
    pub total: f64,
}

impl AccuracyBreakdown {
    fn new(statistical_term: f64, truncation_term: f64, stage_tail_term: f64) -> Self {
        Self {
            statistical_term,
            truncation_term,
            stage_tail_term,
            total: statistical_term + truncation_term + stage_tail_term,
        }
    }
}

fn check_h_range(h: f64, lo: f64, hi: f64) -> Result<()> {
    if !(h > lo && h < hi) {
        return Err(Error::ThresholdRange { h, lo, hi });
    }
    Ok(())
}

/// Guaranteed accuracy of the truncated b-procedure:
/// `sigma/H + T^m U_m / (a_* T - H)^(2m)` for `T >= 1`, `0 < H < a_* T`,
/// `m >= 2`.
pub fn accuracy_b(region: &ParamRegion, h: f64, t: f64, m: u32) -> Result<AccuracyBreakdown> {
    require_order(m, 2)?;
    if !(t >= 1.0) {
        return Err(Error::HorizonRange { t, needs: 1.0 });
    }
    let hi = region.a_star() * t;
    check_h_range(h, 0.0, hi)?;
    let mf = m as f64;
    let trunc = (mf * t.ln() + u_m(region, m)?.ln() - 2.0 * mf * (hi - h).ln()).exp();
    Ok(AccuracyBreakdown::new(region.sigma / h, trunc, 0.0))
}

/// Closed bound on `sup_Theta P(tau_H > T)` for the b-procedure.
pub fn tail_bound_b(region: &ParamRegion, h: f64, t: f64, m: u32) -> Result<f64> {
    require_order(m, 1)?;
    let hi = region.a_star() * t;
    check_h_range(h, 0.0, hi)?;
    let mf = m as f64;
    Ok((mf * t.ln() + l_m(region, m)?.ln()
        - 2.0 * mf * (hi - h).ln()
        - 2.0 * mf * region.b_min.ln())
    .exp())
}

/// Guaranteed accuracy of the truncated a-procedure:
/// `sigma/H + T^m r^(2m) V_m / (mu_{a,*} T - H)^(2m)`.
pub fn accuracy_a(
    region: &ParamRegion,
    h: f64,
    t: f64,
    m: u32,
    r: f64,
) -> Result<AccuracyBreakdown> {
    require_order(m, 2)?;
    if !(t > 0.0) {
        return Err(Error::HorizonRange { t, needs: 0.0 });
    }
    if !(r >= 1.0) {
        return Err(Error::BadParam {
            what: "clamp level r must be >= 1",
        });
    }
    let hi = mu_star_a(region, r)? * t;
    check_h_range(h, 0.0, hi)?;
    let mf = m as f64;
    let trunc =
        (mf * t.ln() + 2.0 * mf * r.ln() + v_m(region, m)?.ln() - 2.0 * mf * (hi - h).ln()).exp();
    Ok(AccuracyBreakdown::new(region.sigma / h, trunc, 0.0))
}

/// Closed bound on `sup_Theta P(tau_H > T)` for the a-procedure
/// (the accuracy truncation term divided by `a_max^2`).
pub fn tail_bound_a(region: &ParamRegion, h: f64, t: f64, m: u32, r: f64) -> Result<f64> {
    let acc = accuracy_a(region, h, t, m, r)?;
    Ok(acc.truncation_term / (region.a_max * region.a_max))
}

/// Guaranteed accuracy of the truncated two-step procedure:
/// `(2 u_* + rho*_H) sigma / H + T^m theta_max r^(2m) Z_m / (mu_* T - H)^(2m)
///  + 2^(4m+1) v*_{2m} theta_max / H^(2m)`
/// for `T > 1/mu_*`, `1 <= H < mu_* T`, `m >= 2`.
///
/// `v_star` is the non-explicit constant of the stage-count tail bound,
/// exposed as a configuration input; callers may substitute an empirical
/// estimate of the stage tail for the third term.
pub fn accuracy_2d(
    region: &ParamRegion,
    h: f64,
    t: f64,
    m: u32,
    r: f64,
    v_star: f64,
    rho_star_h: f64,
) -> Result<AccuracyBreakdown> {
    require_order(m, 2)?;
    if !(r >= 1.0) {
        return Err(Error::BadParam {
            what: "clamp level r must be >= 1",
        });
    }
    if !(v_star >= 0.0) {
        return Err(Error::BadParam {
            what: "v_star must be >= 0",
        });
    }
    let mu = mu_star_2d(region, r)?;
    if !(t > 1.0 / mu) {
        return Err(Error::HorizonRange { t, needs: 1.0 / mu });
    }
    let hi = mu * t;
    if !(h >= 1.0 && h < hi) {
        return Err(Error::ThresholdRange { h, lo: 1.0, hi });
    }
    let mf = m as f64;
    let u = u_star(region)?;
    let stat = (2.0 * u + rho_star_h) * region.sigma / h;
    let theta_max = region.theta_max_sq();
    let trunc = (mf * t.ln() + theta_max.ln() + 2.0 * mf * r.ln() + z_m(region, m)?.ln()
        - 2.0 * mf * (hi - h).ln())
    .exp();
    let stage_tail = (2.0f64).powi(4 * m as i32 + 1) * v_star * theta_max / h.powi(2 * m as i32);
    Ok(AccuracyBreakdown::new(stat, trunc, stage_tail))
}

/// Termwise bound on `sup_Theta P(tau_H > T)` for the two-step procedure:
/// `(information-deficit term, stage-count tail term)`.
pub fn tail_bound_2d(
    region: &ParamRegion,
    h: f64,
    t: f64,
    m: u32,
    r: f64,
    v_star: f64,
) -> Result<(f64, f64)> {
    require_order(m, 2)?;
    let mu = mu_star_2d(region, r)?;
    let hi = mu * t;
    if !(h >= 1.0 && h < hi) {
        return Err(Error::ThresholdRange { h, lo: 1.0, hi });
    }
    let mf = m as f64;
    let info_term =
        (mf * t.ln() + 2.0 * mf * r.ln() + z_m(region, m)?.ln() - 2.0 * mf * (hi - h).ln()).exp();
    let stage_term = (2.0f64).powi(4 * m as i32 + 1) * v_star / h.powi(2 * m as i32);
    Ok((info_term, stage_term))
}

/// Stage-count tail bound: for `n > u_* H`,
/// `P(upsilon_H > n) <= v*_r ((2u_*)^(2r) H^r + n^(2 delta* r)) / (n - u_* H)^(2r)`.
pub fn stage_count_tail_bound(
    u_star: f64,
    h: f64,
    n: f64,
    r_exp: f64,
    delta_star: f64,
    v_star: f64,
) -> Result<f64> {
    if !(n > u_star * h) {
        return Err(Error::BadParam {
            what: "stage tail bound needs n > u_* H",
        });
    }
    let num = (2.0 * u_star).powf(2.0 * r_exp) * h.powf(r_exp) + n.powf(2.0 * delta_star * r_exp);
    Ok(v_star * num / (n - u_star * h).powf(2.0 * r_exp))
}

/// Deviation moment bound for a bounded integrand with
/// sup-norm `phi_star`:
/// `E |Delta_T(phi)|^(2m) / T^m <= (phi_*/sigma)^(2m) L_m sup_Theta bracket^(2m)`.
pub fn delta_moment_bound(region: &ParamRegion, m: u32, phi_star: f64) -> Result<f64> {
    require_order(m, 1)?;
    region.require_a_min_above_half_sigma()?;
    let mf = m as f64;
    let mut sup_lb = f64::NEG_INFINITY;
    for (a, b) in region.grid(REGION_GRID) {
        let alpha = 2.0 * a / region.sigma;
        let beta = 2.0 * b / region.sigma;
        sup_lb = sup_lb.max(ln_bracket(alpha, alpha, beta, beta, beta));
    }
    Ok(
        (2.0 * mf * (phi_star.ln() - region.sigma.ln()) + l_m(region, m)?.ln() + 2.0 * mf * sup_lb)
            .exp(),
    )
}

/// Occupation-deviation moment bound `L_m / b_min^(2m)` for
/// `E D_T^(2m) / T^m`.
pub fn d_moment_bound(region: &ParamRegion, m: u32) -> Result<f64> {
    Ok(l_m(region, m)? / region.b_min.powi(2 * m as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn point_region() -> ParamRegion {
        // alpha = 4, beta = 2, stationary mean 2.
        ParamRegion::point(1.0, 0.5, 0.5, 2.0).unwrap()
    }

    #[test]
    fn transient_moments_match_exponential_ode_cascade() {
        // Independent oracle: integer moments solve
        // m_n' = n (a + sigma (n-1)/2) m_{n-1} - n b m_n, solved exactly on
        // the exponential basis sum_k c_k e^(-k b t).
        let (a, b, sigma, x0) = (1.0f64, 0.5f64, 0.5f64, 1.3f64);
        let ode_moment = |n: usize, t: f64| -> f64 {
            let mut coeffs = alloc::vec![alloc::vec![1.0f64]]; // m_0 = 1
            for k in 1..=n {
                let gain = k as f64 * (a + sigma * (k as f64 - 1.0) / 2.0);
                let prev = &coeffs[k - 1];
                let mut cur = alloc::vec![0.0f64; k + 1];
                for (j, &cj) in prev.iter().enumerate() {
                    cur[j] = gain * cj / ((k - j) as f64 * b);
                }
                let partial: f64 = cur[..k].iter().sum();
                cur[k] = x0.powi(k as i32) - partial;
                coeffs.push(cur);
            }
            coeffs[n]
                .iter()
                .enumerate()
                .map(|(k, &c)| c * (-(k as f64) * b * t).exp())
                .sum()
        };
        for n in 1..=4usize {
            for &t in &[0.05, 0.3, 1.0, 4.0, 20.0] {
                let series = transient_moment(a, b, sigma, x0, n as f64, t);
                let ode = ode_moment(n, t);
                assert!(
                    (series - ode).abs() < 1e-9 * ode.abs().max(1.0),
                    "n={n} t={t}: series {series} vs ode {ode}"
                );
            }
        }
    }

    #[test]
    fn envelope_point_region_examples() {
        let r = point_region();
        // Started at the stationary mean, E X_t = 2 for all t.
        let x1 = moment_envelope(&r, 1.0).unwrap();
        assert!((x1 - 2.0 * ENVELOPE_SAFETY).abs() < 1e-9, "x1 = {x1}");
        // Second moment climbs to the stationary value 5.
        let x2 = moment_envelope(&r, 2.0).unwrap();
        assert!((x2 - 5.0 * ENVELOPE_SAFETY).abs() < 1e-6, "x2 = {x2}");
        // Divergence boundary.
        assert!(moment_envelope(&r, -r.alpha_min()).is_err());
    }

    #[test]
    fn l_m_formula_values() {
        let r = point_region();
        // m = 1 collapses to 3 (2 x_2 + sigma x_1).
        let x1 = moment_envelope(&r, 1.0).unwrap();
        let x2 = moment_envelope(&r, 2.0).unwrap();
        let l1 = l_m(&r, 1).unwrap();
        assert!((l1 - 3.0 * (2.0 * x2 + 0.5 * x1)).abs() < 1e-9);
        // m = 2 with the frozen envelope values x2 = 5.25, x4 = 55.125:
        // 27 (2 x4 + 0.25 * 36 * x2) = 4252.5.
        let l2 = l_m(&r, 2).unwrap();
        assert!((l2 - 4252.5).abs() < 1e-6, "L_2 = {l2}");
        let u2 = u_m(&r, 2).unwrap();
        assert!((u2 - 4252.5 * 0.25 / 0.0625).abs() < 1e-4, "U_2 = {u2}");
    }

    #[test]
    fn mu_a_theta_limits_and_monotonicity() {
        // r -> infinity recovers 2b/(2a - sigma) = 2/3.
        let v = mu_a_theta(1.0, 0.5, 0.5, 1e9);
        assert!((v - 2.0 / 3.0).abs() < 1e-6, "mu = {v}");
        // Monotone nondecreasing in r, bounded by the closed limit.
        let mut prev = 0.0;
        for &r in &[1.0, 2.0, 5.0, 20.0, 100.0] {
            let m = mu_a_theta(1.0, 0.5, 0.5, r);
            assert!(m >= prev && m <= 2.0 / 3.0 + 1e-9);
            prev = m;
        }
    }

    #[test]
    fn r_threshold_base_value_and_power_law() {
        let r = ParamRegion::new(0.8, 1.2, 0.5, 0.5, 0.5, 2.0).unwrap();
        // T = 1 forces eps = 1: the base value of the formula.
        let base = r_threshold(&r, 0.5, 1.0, 0.25).unwrap();
        let u = u_r_const(&r, 0.5).unwrap();
        let expo = 1.0 / (r.alpha_min() - 1.0);
        let expect = ((2.0 * 1.2 - 0.5) * u / (2.0 * 0.5)).powf(expo).max(1.0);
        assert!((base - expect).abs() < 1e-12);
        // r = O(T^delta): doubling T multiplies r by 2^delta.
        let r1 = r_threshold(&r, 0.5, 100.0, 0.25).unwrap();
        let r2 = r_threshold(&r, 0.5, 200.0, 0.25).unwrap();
        assert!((r2 / r1 - 2.0f64.powf(0.25)).abs() < 1e-9);
        for &t in &[100.0, 1000.0, 10_000.0] {
            let rt = r_threshold(&r, 0.5, t, 0.25).unwrap();
            assert!(rt >= 1.0 && (rt / t.powf(0.25)).is_finite());
        }
    }

    #[test]
    fn fisher_point_values_and_pole() {
        // Estimating b: a = 1, sigma = 1, theta = 0.5 -> 2.
        assert!((fisher_info(FisherCase::EstimateB, 0.5, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        // Estimating a: b = 0.5, sigma = 0.5, theta = 1 -> 4/3.
        let v = fisher_info(FisherCase::EstimateA, 1.0, 0.5, 0.5).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-12);
        assert!(fisher_info(FisherCase::EstimateA, 0.25, 0.5, 0.5).is_err());
    }

    #[test]
    fn ergodic_matrix_point_values() {
        let f = ergodic_matrix_f(1.0, 0.5, 0.5).unwrap();
        assert!((f.a - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((f.b, f.c), (-1.0, -1.0));
        assert_eq!(f.d, 2.0);
        assert!((f.det() - 1.0 / 3.0).abs() < 1e-15);
        assert!((f.trace() - 8.0 / 3.0).abs() < 1e-15);
        assert!(ergodic_matrix_f(0.25, 0.5, 0.5).is_err());
    }

    #[test]
    fn matrix_f_positive_definite_on_grid() {
        let r = ParamRegion::new(0.8, 1.2, 0.4, 0.6, 0.5, 2.0).unwrap();
        for (a, b) in r.grid(9) {
            let f = ergodic_matrix_f(a, b, r.sigma).unwrap();
            assert!(f.min_eigen_sym() > 0.0, "({a}, {b})");
        }
    }

    #[test]
    fn u_star_hand_value_and_monotonicity() {
        // Point region: u_* = (|F^-1| tr F)^2 = 58 * 64 / 9.
        let r = point_region();
        let u = u_star(&r).unwrap();
        assert!((u - 58.0 * 64.0 / 9.0).abs() < 1e-9, "u_* = {u}");
        let b2 = b_star_sq(1.0, 0.5, 0.5).unwrap();
        assert!((u * b2 - 1.0).abs() < 1e-12);
        // Enlarging the rectangle cannot decrease the max.
        let wider = ParamRegion::new(0.8, 1.2, 0.4, 0.6, 0.5, 2.0).unwrap();
        assert!(u_star(&wider).unwrap() >= u);
    }

    #[test]
    fn accuracy_b_pole_and_decomposition() {
        let r = point_region();
        let a_star_t = r.a_star() * 100.0;
        let near_pole = accuracy_b(&r, a_star_t * 0.999999, 100.0, 2).unwrap();
        let mid = accuracy_b(&r, a_star_t * 0.5, 100.0, 2).unwrap();
        assert!(near_pole.truncation_term > 1e6 * mid.truncation_term);
        assert!(accuracy_b(&r, a_star_t, 100.0, 2).is_err());
        assert!(accuracy_b(&r, -1.0, 100.0, 2).is_err());
        // Small H: statistical term dominates.
        let small = accuracy_b(&r, 1.0, 100.0, 2).unwrap();
        assert!(small.statistical_term > small.truncation_term);
        assert!(
            (small.total - small.statistical_term - small.truncation_term).abs()
                < 1e-15 * small.total
        );
    }

    #[test]
    fn accuracy_a_r_scaling() {
        let r = ParamRegion::new(0.8, 1.2, 0.5, 0.5, 0.5, 2.0).unwrap();
        let (t, m) = (200.0, 3);
        let a1 = accuracy_a(&r, 20.0, t, m, 2.0).unwrap();
        let a2 = accuracy_a(&r, 20.0, t, m, 4.0).unwrap();
        // Doubling r scales the truncation numerator by 2^(2m) and also
        // enlarges mu_{a,*}; the ratio must be at least 2^(2m) adjusted.
        let mu1 = mu_star_a(&r, 2.0).unwrap();
        let mu2 = mu_star_a(&r, 4.0).unwrap();
        let denom_shift = ((mu1 * t - 20.0) / (mu2 * t - 20.0)).powi(2 * m as i32);
        let ratio = a2.truncation_term / a1.truncation_term;
        assert!(
            (ratio - 2.0f64.powi(2 * m as i32) * denom_shift).abs() < 1e-6 * ratio,
            "ratio = {ratio}"
        );
        assert_eq!(a1.statistical_term, r.sigma / 20.0);
    }

    #[test]
    fn accuracy_2d_domain_and_v_star_linearity() {
        let r = point_region();
        let (t, m, clamp) = (500.0, 2, 5.0);
        let rho = rho_star(20.0, u_star(&r).unwrap(), 1.5);
        let with_tail = accuracy_2d(&r, 20.0, t, m, clamp, 1.0, rho).unwrap();
        let no_tail = accuracy_2d(&r, 20.0, t, m, clamp, 0.0, rho).unwrap();
        assert_eq!(no_tail.stage_tail_term, 0.0);
        assert!(with_tail.stage_tail_term > 0.0);
        assert!(
            (with_tail.total - no_tail.total - with_tail.stage_tail_term).abs()
                < 1e-12 * with_tail.total.max(1.0)
        );
        // H below 1 is outside the bound's domain.
        assert!(accuracy_2d(&r, 0.5, t, m, clamp, 1.0, rho).is_err());
        // H at the pole.
        let mu = mu_star_2d(&r, clamp).unwrap();
        assert!(accuracy_2d(&r, mu * t, t, m, clamp, 1.0, rho).is_err());
    }

    #[test]
    fn constants_nondecreasing_in_region_size() {
        let small = ParamRegion::new(0.95, 1.05, 0.45, 0.55, 0.5, 2.0).unwrap();
        let large = ParamRegion::new(0.9, 1.2, 0.4, 0.6, 0.5, 2.0).unwrap();
        // V_m lives on a-case regions (degenerate b-side).
        let small_a = ParamRegion::new(0.95, 1.05, 0.5, 0.5, 0.5, 2.0).unwrap();
        let large_a = ParamRegion::new(0.9, 1.2, 0.5, 0.5, 0.5, 2.0).unwrap();
        for m in [1u32, 2, 3] {
            assert!(l_m(&large, m).unwrap() >= l_m(&small, m).unwrap());
            assert!(u_m(&large, m).unwrap() >= u_m(&small, m).unwrap());
            assert!(v_m(&large_a, m).unwrap() >= v_m(&small_a, m).unwrap());
            assert!(z_m(&large, m).unwrap() >= z_m(&small, m).unwrap());
            assert!(l_m(&large, m).unwrap() > 0.0);
        }
        assert!(u_star(&large).unwrap() >= u_star(&small).unwrap());
    }

    #[test]
    fn mu_star_agrees_with_stationary_mc() {
        // Cross-check the clamped-inverse quadrature against a plain
        // stationary Monte Carlo average.
        use rand::Rng;
        let p = ModelParams::new(1.0, 0.5, 0.5, 2.0).unwrap();
        let mut rng = crate::rng::replicate_rng(31, 0);
        let r = 5.0;
        let n = 200_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let x = p.sample_stationary(&mut rng);
            acc += (1.0 / x).min(r);
        }
        let mc = acc / n as f64;
        let quad_val = mu_a_theta(1.0, 0.5, 0.5, r);
        assert!(quad_val > 0.0 && quad_val < 2.0 / 3.0);
        // 3 SE window with sd <= r.
        let se = {
            let mut rng2 = crate::rng::replicate_rng(31, 1);
            let mut s2 = 0.0;
            for _ in 0..10_000 {
                let x = p.sample_stationary(&mut rng2);
                s2 += ((1.0 / x).min(r) - quad_val).powi(2);
            }
            (s2 / 10_000.0 / n as f64).sqrt()
        };
        assert!(
            (mc - quad_val).abs() < 3.0 * se,
            "mc {mc} vs quad {quad_val}"
        );
        let _ = rng.gen::<f64>();
    }
}
