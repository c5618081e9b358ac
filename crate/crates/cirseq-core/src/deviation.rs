//! Ergodic-average deviation functionals and the Poisson-equation
//! corrector behind the concentration inequalities.

use crate::error::Result;
use crate::path::PathRecord;
use crate::quad;
use crate::special::gamma_pdf;
// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;

/// Centered occupation deviation `D_T = int_0^T (X_s - a/b) ds`.
pub fn deviation_d(path: &PathRecord, a: f64, b: f64, upto_time: f64) -> Result<f64> {
    let p = path.at_time(upto_time)?;
    Ok(p.int_x - a / b * p.time)
}

/// Clamped-inverse deviation
/// `Delta_T = int_0^T (min(X^-1, r) - mu) ds` with precomputed mean `mu`
/// (see [`crate::bounds::mu_a_theta`]); trapezoid rule on the grid.
pub fn deviation_delta(path: &PathRecord, r: f64, mu: f64, upto_time: f64) -> Result<f64> {
    let end = path.at_time(upto_time)?;
    let h = path.grid_step();
    let states = path.states();
    let phi = |x: f64| (1.0 / x).min(r);
    // Full steps up to the node below `upto_time`, then the partial step.
    let k_end = ((end.time / h) as usize).min(states.len() - 1);
    let mut acc = 0.0;
    for k in 0..k_end {
        acc += 0.5 * h * (phi(states[k]) + phi(states[k + 1]));
    }
    let u = end.time - k_end as f64 * h;
    if u > 0.0 && k_end + 1 < states.len() {
        let yl = phi(states[k_end]);
        let yr = phi(states[k_end + 1]);
        acc += u * (yl + 0.5 * (yr - yl) * (u / h));
    }
    Ok(acc - mu * end.time)
}

/// Bounded test function for the corrector machinery: the clamp family
/// `min(x^-1, r)` the bounds instantiate, or an arbitrary tabulated
/// function (linear interpolation, constant extrapolation).
#[derive(Debug, Clone)]
pub enum PhiFn<'a> {
    ClampInv { r: f64 },
    Table { xs: &'a [f64], ys: &'a [f64] },
}

impl PhiFn<'_> {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PhiFn::ClampInv { r } => (1.0 / x).min(*r),
            PhiFn::Table { xs, ys } => {
                if xs.is_empty() {
                    return 0.0;
                }
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[xs.len() - 1] {
                    return ys[ys.len() - 1];
                }
                let i = xs.partition_point(|&v| v < x).max(1);
                let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + w * (ys[i] - ys[i - 1])
            }
        }
    }

    /// Sup norm over the state space.
    pub fn sup_norm(&self) -> f64 {
        match self {
            PhiFn::ClampInv { r } => *r,
            PhiFn::Table { ys, .. } => ys.iter().fold(0.0, |m: f64, &y| m.max(y.abs())),
        }
    }

    /// Kink locations that quadratures should split at.
    fn knots(&self, out: &mut [f64; 4]) -> usize {
        match self {
            PhiFn::ClampInv { r } => {
                out[0] = 1.0 / r;
                1
            }
            PhiFn::Table { .. } => 0,
        }
    }
}

/// Stationary mean `mu(phi) = int phi q dx` for the Gamma(alpha, beta) law.
pub fn stationary_average(alpha: f64, beta: f64, phi: &PhiFn<'_>) -> f64 {
    let hi = quad::gamma_tail_cutoff(alpha, beta, 1e-15);
    let mut knots = [0.0; 4];
    let n = phi.knots(&mut knots);
    quad::integrate_with_knots(
        |z| phi.eval(z) * gamma_pdf(alpha, beta, z),
        0.0,
        hi,
        &knots[..n],
        1e-11,
        0.0,
    )
}

/// Bounded solution `y(x)` of the corrector equation
/// `(sigma/2) x y'(x) + (a - b x) y(x) = phi(x) - mu`.
///
/// For `x >= 1` the tail form
/// `y(x) = -(2/(sigma x^alpha)) int_x^inf (phi(u)-mu) u^(alpha-1) e^(-beta(u-x)) du`
/// is integrated directly; for `0 < x < 1` the equivalent near-origin form
/// `y(x) = (2 e^(beta x)/(sigma x^alpha)) int_0^x (phi(u)-mu) u^(alpha-1) e^(-beta u) du`
/// avoids the cancellation of the full-line integral (which is zero).
pub fn poisson_solution(a: f64, b: f64, sigma: f64, phi: &PhiFn<'_>, mu: f64, x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let alpha = 2.0 * a / sigma;
    let beta = 2.0 * b / sigma;
    let mut knots = [0.0; 4];
    let nk = phi.knots(&mut knots);
    if x < 1.0 {
        let integral = quad::integrate_with_knots(
            |u| (phi.eval(u) - mu) * u.powf(alpha - 1.0) * (-beta * u).exp(),
            0.0,
            x,
            &knots[..nk],
            1e-12,
            1e-300,
        );
        return 2.0 * (beta * x).exp() / (sigma * x.powf(alpha)) * integral;
    }
    // Tail form, normalized by x^(alpha-1) so the integrand stays scaled:
    // y = -(2/(sigma x)) int_0^inf phit(x+v) ((x+v)/x)^(alpha-1) e^(-beta v) dv.
    let v_hi = {
        // e^(-beta v) decay plus polynomial growth; pad the Gamma cutoff.
        let base = quad::gamma_tail_cutoff(alpha.max(1.0), beta, 1e-16);
        base + 10.0 / beta
    };
    let integral = quad::integrate_with_knots(
        |v| {
            let u = x + v;
            (phi.eval(u) - mu) * ((alpha - 1.0) * (u / x).ln() - beta * v).exp()
        },
        0.0,
        v_hi,
        &[],
        1e-12,
        1e-300,
    );
    -2.0 / (sigma * x) * integral
}

/// Residual of the corrector ODE at `x`, with `y'` by central differences.
pub fn poisson_ode_residual(a: f64, b: f64, sigma: f64, phi: &PhiFn<'_>, mu: f64, x: f64) -> f64 {
    let h = 1e-5 * x.max(1.0);
    let yp = (poisson_solution(a, b, sigma, phi, mu, x + h)
        - poisson_solution(a, b, sigma, phi, mu, x - h))
        / (2.0 * h);
    let y = poisson_solution(a, b, sigma, phi, mu, x);
    0.5 * sigma * x * yp + (a - b * x) * y - (phi.eval(x) - mu)
}
