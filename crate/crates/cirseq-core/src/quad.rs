//! Adaptive Gauss-Kronrod quadrature (7-15 pair).
//!
//! Bound evaluation must not be the dominant error source, so the
//! integrators here refine to ~1e-10 relative tolerance by default.

use crate::special::ln_gamma;
use alloc::vec::Vec;
// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;

// QUADPACK qk15 abscissae/weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_119,
    0.417_959_183_673_469_4,
];

/// One Kronrod panel over [lo, hi]: (estimate, error estimate).
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (lo + hi);
    let mut kron = WGK[7] * f(mid);
    let mut gauss = WG[3] * f(mid);
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kron *= half;
    gauss *= half;
    (kron, (kron - gauss).abs())
}

/// Adaptive integral of `f` over `[lo, hi]`.
///
/// Subdivides the worst panel until the summed error estimate drops below
/// `tol_rel * |integral| + tol_abs` or the panel budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol_rel: f64, tol_abs: f64) -> f64 {
    if lo == hi {
        return 0.0;
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = kronrod_panel(&f, lo, hi);
    panels.push((lo, hi, v, e));
    for _ in 0..2000 {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= tol_rel * total.abs() + tol_abs {
            break;
        }
        // Split the panel with the largest error estimate.
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .expect("non-empty panel list");
        let (a, b, _, _) = panels.swap_remove(idx);
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // Interval at floating-point resolution; give up on it.
            let p = kronrod_panel(&f, a, b);
            panels.push((a, b, p.0, 0.0));
            continue;
        }
        let (v1, e1) = kronrod_panel(&f, a, m);
        let (v2, e2) = kronrod_panel(&f, m, b);
        panels.push((a, m, v1, e1));
        panels.push((m, b, v2, e2));
    }
    panels.iter().map(|p| p.2).sum()
}

/// Integral of `f` over `[lo, hi]` with forced initial splits at `knots`
/// (kinks of the integrand), then adaptive refinement per segment.
pub fn integrate_with_knots<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    knots: &[f64],
    tol_rel: f64,
    tol_abs: f64,
) -> f64 {
    let mut cuts: Vec<f64> = Vec::with_capacity(knots.len() + 2);
    cuts.push(lo);
    for &k in knots {
        if k > lo && k < hi {
            cuts.push(k);
        }
    }
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        total += integrate(&f, w[0], w[1], tol_rel, tol_abs);
    }
    total
}

/// Upper cutoff `U` such that the Gamma(alpha, beta) tail mass beyond `U`
/// is below `eps` relative to 1.
///
/// Uses the majorization `int_U^inf z^(alpha-1) e^(-beta z) dz
/// <= U^(alpha-1) e^(-beta U) / (beta - (alpha-1)/U)` valid once
/// `beta U > alpha - 1`.
pub fn gamma_tail_cutoff(alpha: f64, beta: f64, eps: f64) -> f64 {
    debug_assert!(alpha > 0.0 && beta > 0.0 && eps > 0.0);
    let ln_norm = alpha * beta.ln() - ln_gamma(alpha);
    let mut u = (2.0 * alpha.max(1.0) / beta).max(2.0 / beta);
    for _ in 0..200 {
        if beta * u > alpha - 1.0 {
            let ln_tail =
                ln_norm + (alpha - 1.0) * u.ln() - beta * u - (beta - (alpha - 1.0) / u).ln();
            if ln_tail < eps.ln() {
                return u;
            }
        }
        u *= 1.5;
    }
    u
}
