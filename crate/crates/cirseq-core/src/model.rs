//! Model parameters, the stationary Gamma law, and exact transition
//! sampling for dX = (a - bX) dt + sqrt(sigma X) dW.

// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Drift level `a`, mean-reversion rate `b`, diffusion scale `sigma`,
/// initial state `x0`; all strictly positive.
///
/// The stationary law is Gamma with shape `alpha = 2a/sigma` and rate
/// `beta = 2b/sigma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl ModelParams {
    pub fn new(a: f64, b: f64, sigma: f64, x0: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::BadParam {
                what: "a must be > 0",
            });
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::BadParam {
                what: "b must be > 0",
            });
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::BadParam {
                what: "sigma must be > 0",
            });
        }
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::BadParam {
                what: "x0 must be > 0",
            });
        }
        Ok(Self { a, b, sigma, x0 })
    }

    /// Stationary Gamma shape `2a/sigma`.
    #[inline]
    pub fn alpha(&self) -> f64 {
        2.0 * self.a / self.sigma
    }

    /// Stationary Gamma rate `2b/sigma`.
    #[inline]
    pub fn beta(&self) -> f64 {
        2.0 * self.b / self.sigma
    }

    /// Long-run mean `a/b`.
    #[inline]
    pub fn stationary_mean(&self) -> f64 {
        self.a / self.b
    }

    /// Whether the state never hits zero (`2a >= sigma`).
    #[inline]
    pub fn feller_holds(&self) -> bool {
        2.0 * self.a >= self.sigma
    }

    /// Ergodic density `beta^alpha z^(alpha-1) e^(-beta z) / Gamma(alpha)`
    /// for `z >= 0`, zero for `z < 0`. Total function on the reals.
    pub fn stationary_density(&self, z: f64) -> f64 {
        crate::special::gamma_pdf(self.alpha(), self.beta(), z)
    }

    /// Stationary moment `E X^q = Gamma(alpha + q) / (Gamma(alpha) beta^q)`.
    ///
    /// Finite exactly for `q > -alpha`; rejects the divergent range.
    pub fn stationary_moment(&self, q: f64) -> Result<f64> {
        let alpha = self.alpha();
        if q <= -alpha {
            return Err(Error::MomentDiverges {
                q,
                alpha_min: alpha,
            });
        }
        Ok((ln_gamma(alpha + q) - ln_gamma(alpha) - q * self.beta().ln()).exp())
    }

    /// Conditional mean `x e^(-b dt) + (a/b)(1 - e^(-b dt))`.
    pub fn transition_mean(&self, x_from: f64, dt: f64) -> f64 {
        let decay = (-self.b * dt).exp();
        x_from * decay + self.stationary_mean() * (1.0 - decay)
    }

    /// Conditional variance of `X_{t+dt}` given `X_t = x_from`.
    pub fn transition_variance(&self, x_from: f64, dt: f64) -> f64 {
        let decay = (-self.b * dt).exp();
        let one_minus = 1.0 - decay;
        x_from * (self.sigma / self.b) * decay * one_minus
            + self.a * self.sigma / (2.0 * self.b * self.b) * one_minus * one_minus
    }

    /// Draw from the stationary Gamma(alpha, beta) law.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let gamma = Gamma::new(self.alpha(), 1.0 / self.beta()).expect("valid Gamma");
        loop {
            let x = gamma.sample(rng);
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// Exact one-step transition sampler at a fixed time increment.
///
/// Conditionally on `X_t = x`, `2 c X_{t+dt}` is noncentral chi-square with
/// `4a/sigma` degrees of freedom and noncentrality `2 c x e^(-b dt)`, where
/// `c = 2b / (sigma (1 - e^(-b dt)))`. Sampling composes a Poisson mixing
/// variable with a Gamma draw:
///
/// ```text
/// J ~ Poisson(c x e^(-b dt)),   X_{t+dt} = Gamma(alpha + J, 1) / c.
/// ```
///
/// Zero outputs (possible only through floating-point underflow) are
/// rejected by resampling.
#[derive(Debug, Clone, Copy)]
pub struct TransitionSampler {
    alpha: f64,
    c: f64,
    decay: f64,
}

impl TransitionSampler {
    pub fn new(params: &ModelParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::BadParam {
                what: "dt must be > 0",
            });
        }
        let decay = (-params.b * dt).exp();
        Ok(Self {
            alpha: params.alpha(),
            c: 2.0 * params.b / (params.sigma * (1.0 - decay)),
            decay,
        })
    }

    /// Next state given the current one; strictly positive.
    pub fn sample<R: Rng + ?Sized>(&self, x_from: f64, rng: &mut R) -> f64 {
        debug_assert!(x_from > 0.0);
        let pois_mean = self.c * x_from * self.decay;
        loop {
            let j = if pois_mean > 0.0 {
                Poisson::new(pois_mean)
                    .expect("positive Poisson mean")
                    .sample(rng)
            } else {
                0.0
            };
            let shape = self.alpha + j;
            let x = Gamma::new(shape, 1.0)
                .expect("positive Gamma shape")
                .sample(rng)
                / self.c;
            if x > 0.0 {
                return x;
            }
        }
    }
}

/// One exact transition draw; convenience wrapper over [`TransitionSampler`].
pub fn sample_transition<R: Rng + ?Sized>(
    params: &ModelParams,
    x_from: f64,
    dt: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(TransitionSampler::new(params, dt)?.sample(x_from, rng))
}
