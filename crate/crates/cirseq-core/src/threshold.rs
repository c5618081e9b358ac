//! Optimal stopping threshold `H*_T`.
//!
//! Each guaranteed accuracy function has the shape
//!
//! ```text
//! e(H) = A/H + C T^m / (mu T - H)^(2m),      0 (or 1) < H < mu T,
//! ```
//!
//! which is strictly convex with a unique interior minimizer solving the
//! first-order condition `A/H^2 = 2m C T^m (mu T - H)^(-(2m+1))`. The
//! solver brackets that root (always possible on the open interval),
//! polishes with Newton, and cross-checks against a damped fixed-point
//! iteration seeded at the closed asymptotic formula and against a brute
//! force grid argmin. Every downstream experiment keys off this value, so
//! the redundancy is deliberate.

use crate::bounds::{self, AccuracyBreakdown};
use crate::error::{Error, Result};
use crate::region::ParamRegion;
// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;

/// Which truncated procedure the threshold is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcedureKind {
    ScalarB,
    ScalarA,
    TwoDim,
}

/// The accuracy function `A/H + e^(ln_c) T^m (rate T - H)^(-2m)` of one
/// procedure instance, with its admissible H-interval.
#[derive(Debug, Clone, Copy)]
pub struct AccuracyFn {
    /// Coefficient of `1/H` (sigma for the scalar cases, `2 u_* sigma` in 2-D).
    pub stat_coeff: f64,
    /// `ln` of the truncation coefficient (`U_m`, `r^2m V_m`, `theta_max r^2m Z_m`).
    pub ln_trunc_coeff: f64,
    /// Crossing rate (`a_*`, `mu_{a,*}` or `mu_*`).
    pub rate: f64,
    pub m: u32,
    pub t: f64,
    /// Lower edge of the admissible interval (1 in the two-dimensional case).
    pub h_min: f64,
}

/// Solved threshold.
#[derive(Debug, Clone, Copy)]
pub struct Hstar {
    pub h: f64,
    /// Fixed-point residual `|H - (mu T - k H^(2/(2m+1)) T^(m/(2m+1)))|`.
    pub residual: f64,
    /// True when the unconstrained root fell below `h_min` and was clamped
    /// (the accuracy function is increasing there, so the constrained
    /// minimizer is the edge).
    pub clamped: bool,
}

impl AccuracyFn {
    pub fn for_b(region: &ParamRegion, t: f64, m: u32) -> Result<Self> {
        if !(t >= 1.0) {
            return Err(Error::HorizonRange { t, needs: 1.0 });
        }
        Ok(Self {
            stat_coeff: region.sigma,
            ln_trunc_coeff: bounds::u_m(region, m)?.ln(),
            rate: region.a_star(),
            m,
            t,
            h_min: 0.0,
        })
    }

    pub fn for_a(region: &ParamRegion, t: f64, m: u32, r: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::HorizonRange { t, needs: 0.0 });
        }
        Ok(Self {
            stat_coeff: region.sigma,
            ln_trunc_coeff: 2.0 * m as f64 * r.ln() + bounds::v_m(region, m)?.ln(),
            rate: bounds::mu_star_a(region, r)?,
            m,
            t,
            h_min: 0.0,
        })
    }

    pub fn for_2d(region: &ParamRegion, t: f64, m: u32, r: f64) -> Result<Self> {
        let mu = bounds::mu_star_2d(region, r)?;
        if !(t > 1.0 / mu) {
            return Err(Error::HorizonRange { t, needs: 1.0 / mu });
        }
        let u = bounds::u_star(region)?;
        Ok(Self {
            stat_coeff: 2.0 * u * region.sigma,
            ln_trunc_coeff: region.theta_max_sq().ln()
                + 2.0 * m as f64 * r.ln()
                + bounds::z_m(region, m)?.ln(),
            rate: mu,
            m,
            t,
            h_min: 1.0,
        })
    }

    #[inline]
    fn h_max(&self) -> f64 {
        self.rate * self.t
    }

    /// Accuracy value at `H` (statistical + truncation terms).
    pub fn total(&self, h: f64) -> f64 {
        let mf = self.m as f64;
        self.stat_coeff / h
            + (self.ln_trunc_coeff + mf * self.t.ln() - 2.0 * mf * (self.h_max() - h).ln()).exp()
    }

    /// Log-form first-order-condition gap
    /// `ln A + (2m+1) ln(mu T - H) - ln(2m C T^m) - 2 ln H`,
    /// strictly decreasing on the open interval.
    fn foc_gap(&self, h: f64) -> f64 {
        let mf = self.m as f64;
        self.stat_coeff.ln() + (2.0 * mf + 1.0) * (self.h_max() - h).ln()
            - (2.0 * mf).ln()
            - self.ln_trunc_coeff
            - mf * self.t.ln()
            - 2.0 * h.ln()
    }

    /// Fixed-point map constant `k` with `H = mu T - k H^(2/(2m+1)) T^(m/(2m+1))`.
    fn fp_constant(&self) -> f64 {
        let mf = self.m as f64;
        (((2.0 * mf).ln() + self.ln_trunc_coeff - self.stat_coeff.ln()) / (2.0 * mf + 1.0)).exp()
    }

    fn fp_map(&self, h: f64) -> f64 {
        let mf = self.m as f64;
        let p = 1.0 / (2.0 * mf + 1.0);
        self.h_max() - self.fp_constant() * h.powf(2.0 * p) * self.t.powf(mf * p)
    }

    /// Residual of the fixed-point form at `h`.
    pub fn residual(&self, h: f64) -> f64 {
        (h - self.fp_map(h)).abs()
    }

    /// Closed asymptotic seed `mu T - (2m C rate^2 / A)^(1/(2m+1)) T^((2+m)/(2m+1))`.
    /// Can fall outside the interval when `T` is pre-asymptotic.
    pub fn asymptotic_seed(&self) -> f64 {
        let mf = self.m as f64;
        let p = 1.0 / (2.0 * mf + 1.0);
        let coeff = (((2.0 * mf).ln() + self.ln_trunc_coeff + 2.0 * self.rate.ln()
            - self.stat_coeff.ln())
            * p)
            .exp();
        self.h_max() - coeff * self.t.powf((2.0 + mf) * p)
    }

    /// Damped fixed-point iteration from `seed`; `None` when it fails to
    /// settle inside the interval.
    pub fn fixed_point(&self, seed: f64, damping: f64, iters: u32) -> Option<f64> {
        let hi = self.h_max();
        let mut h = seed;
        if !(h > 0.0 && h < hi) {
            return None;
        }
        for _ in 0..iters {
            let mapped = self.fp_map(h);
            let next = (1.0 - damping) * h + damping * mapped.clamp(hi * 1e-12, hi * (1.0 - 1e-12));
            if (next - h).abs() <= 1e-13 * hi {
                return Some(next);
            }
            h = next;
        }
        None
    }

    /// Solve the first-order condition: bracketed bisection on the log gap
    /// plus Newton polish on the fixed-point form, then clamp at `h_min`.
    pub fn solve(&self) -> Result<Hstar> {
        let hi = self.h_max();
        if !(hi > 0.0 && hi.is_finite()) {
            return Err(Error::BadParam {
                what: "rate * T must be positive and finite",
            });
        }
        let (mut lo, mut up) = (hi * 1e-15, hi * (1.0 - 1e-15));
        if self.foc_gap(lo) < 0.0 {
            // Root below floating resolution of the interval; pin to it.
            lo = hi * 1e-15;
            up = lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if self.foc_gap(mid) > 0.0 {
                lo = mid;
            } else {
                up = mid;
            }
        }
        let mut h = 0.5 * (lo + up);
        // Newton on g(H) = mu T - H - k H^(2/(2m+1)) T^(m/(2m+1)).
        let mf = self.m as f64;
        let p = 1.0 / (2.0 * mf + 1.0);
        let k = self.fp_constant() * self.t.powf(mf * p);
        for _ in 0..60 {
            let g = hi - h - k * h.powf(2.0 * p);
            let gp = -1.0 - k * 2.0 * p * h.powf(2.0 * p - 1.0);
            let step = g / gp;
            h -= step;
            if !(h > 0.0 && h < hi) {
                h = (h + step).clamp(hi * 1e-15, hi * (1.0 - 1e-15));
                break;
            }
            if step.abs() <= 1e-16 * hi {
                break;
            }
        }
        let clamped = h < self.h_min;
        if clamped {
            h = self.h_min;
        }
        Ok(Hstar {
            h,
            residual: self.residual(h),
            clamped,
        })
    }

    /// Brute-force argmin of the accuracy value over an `n`-point uniform
    /// grid strictly inside the admissible interval.
    pub fn grid_argmin(&self, n: usize) -> f64 {
        let lo = self.h_min;
        let hi = self.h_max();
        let mut best = (f64::INFINITY, lo);
        for i in 1..=n {
            let h = lo + (hi - lo) * i as f64 / (n as f64 + 1.0);
            let v = self.total(h);
            if v < best.0 {
                best = (v, h);
            }
        }
        best.1
    }

    /// Grid spacing used by [`Self::grid_argmin`].
    pub fn grid_cell(&self, n: usize) -> f64 {
        (self.h_max() - self.h_min) / (n as f64 + 1.0)
    }
}

/// Solve `H*_T` for a procedure over a region. `r` is the clamp level
/// (ignored by the b-procedure).
pub fn optimal_threshold(
    kind: ProcedureKind,
    region: &ParamRegion,
    t: f64,
    m: u32,
    r: f64,
) -> Result<Hstar> {
    accuracy_fn(kind, region, t, m, r)?.solve()
}

/// Build the case's accuracy function.
pub fn accuracy_fn(
    kind: ProcedureKind,
    region: &ParamRegion,
    t: f64,
    m: u32,
    r: f64,
) -> Result<AccuracyFn> {
    if m < 2 {
        return Err(Error::BadParam {
            what: "bound order m too small",
        });
    }
    match kind {
        ProcedureKind::ScalarB => AccuracyFn::for_b(region, t, m),
        ProcedureKind::ScalarA => AccuracyFn::for_a(region, t, m, r),
        ProcedureKind::TwoDim => AccuracyFn::for_2d(region, t, m, r),
    }
}

/// Accuracy breakdown of the given procedure at `(H, T, m, r)`; the 2-D
/// case takes the stage-tail inputs.
#[allow(clippy::too_many_arguments)]
pub fn accuracy_at(
    kind: ProcedureKind,
    region: &ParamRegion,
    h: f64,
    t: f64,
    m: u32,
    r: f64,
    v_star: f64,
    varpi: f64,
) -> Result<AccuracyBreakdown> {
    match kind {
        ProcedureKind::ScalarB => bounds::accuracy_b(region, h, t, m),
        ProcedureKind::ScalarA => bounds::accuracy_a(region, h, t, m, r),
        ProcedureKind::TwoDim => {
            let rho = bounds::rho_star(h, bounds::u_star(region)?, varpi);
            bounds::accuracy_2d(region, h, t, m, r, v_star, rho)
        }
    }
}
