//! Gamma-function helpers.

// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;

/// Location of the single interior minimum of Gamma on (0, inf).
const GAMMA_MIN_X: f64 = 1.461_632_144_968_362_3;

/// Natural log of Gamma(x), x > 0.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Gamma(x), x > 0.
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// (min, max) of Gamma over the interval `[lo, hi]`, `0 < lo <= hi`.
///
/// Gamma is strictly decreasing on (0, x*) and increasing on (x*, inf)
/// with x* ~ 1.4616, so the extremes sit at the endpoints and at the
/// clamped interior minimum.
pub fn gamma_extremes(lo: f64, hi: f64) -> (f64, f64) {
    debug_assert!(lo > 0.0 && lo <= hi);
    let g_lo = gamma(lo);
    let g_hi = gamma(hi);
    let interior = GAMMA_MIN_X.max(lo).min(hi);
    (gamma(interior), g_lo.max(g_hi))
}

/// Unnormalized Gamma density `beta^alpha z^(alpha-1) e^(-beta z) / Gamma(alpha)`.
#[inline]
pub fn gamma_pdf(alpha: f64, beta: f64, z: f64) -> f64 {
    if z < 0.0 {
        return 0.0;
    }
    if z == 0.0 {
        // alpha > 1 -> 0; alpha == 1 -> beta; alpha < 1 -> +inf.
        return if alpha > 1.0 {
            0.0
        } else if alpha == 1.0 {
            beta
        } else {
            f64::INFINITY
        };
    }
    (alpha * beta.ln() + (alpha - 1.0) * z.ln() - beta * z - ln_gamma(alpha)).exp()
}
