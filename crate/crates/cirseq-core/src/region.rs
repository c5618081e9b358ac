//! Compact parameter rectangle Theta and its derived extremes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Rectangle `[a_min, a_max] x [b_min, b_max]` with a shared diffusion
/// scale and initial state. Scalar procedures use a degenerate side for
/// the known coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRegion {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub sigma: f64,
    pub x0: f64,
}

impl ParamRegion {
    pub fn new(
        a_min: f64,
        a_max: f64,
        b_min: f64,
        b_max: f64,
        sigma: f64,
        x0: f64,
    ) -> Result<Self> {
        if !(a_min > 0.0 && a_min <= a_max && a_max.is_finite()) {
            return Err(Error::BadParam {
                what: "need 0 < a_min <= a_max",
            });
        }
        if !(b_min > 0.0 && b_min <= b_max && b_max.is_finite()) {
            return Err(Error::BadParam {
                what: "need 0 < b_min <= b_max",
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
        Ok(Self {
            a_min,
            a_max,
            b_min,
            b_max,
            sigma,
            x0,
        })
    }

    /// Degenerate region at a single (a, b) point.
    pub fn point(a: f64, b: f64, sigma: f64, x0: f64) -> Result<Self> {
        Self::new(a, a, b, b, sigma, x0)
    }

    #[inline]
    pub fn alpha_min(&self) -> f64 {
        2.0 * self.a_min / self.sigma
    }

    #[inline]
    pub fn alpha_max(&self) -> f64 {
        2.0 * self.a_max / self.sigma
    }

    #[inline]
    pub fn beta_min(&self) -> f64 {
        2.0 * self.b_min / self.sigma
    }

    #[inline]
    pub fn beta_max(&self) -> f64 {
        2.0 * self.b_max / self.sigma
    }

    /// Known drift level for the b-procedure (degenerate a-side).
    #[inline]
    pub fn known_a(&self) -> f64 {
        debug_assert!(
            self.a_min == self.a_max,
            "b-procedure expects a_min == a_max"
        );
        self.a_min
    }

    /// Known reversion rate for the a-procedure (degenerate b-side).
    #[inline]
    pub fn known_b(&self) -> f64 {
        debug_assert!(
            self.b_min == self.b_max,
            "a-procedure expects b_min == b_max"
        );
        self.b_min
    }

    /// Worst-case crossing rate `a_* = a / b_max` of the b-procedure.
    #[inline]
    pub fn a_star(&self) -> f64 {
        self.known_a() / self.b_max
    }

    /// `max_Theta |theta|^2` over the rectangle corners.
    #[inline]
    pub fn theta_max_sq(&self) -> f64 {
        self.a_max * self.a_max + self.b_max * self.b_max
    }

    /// Enforce `a_min > sigma/2` (needed by inverse-moment machinery).
    pub fn require_a_min_above_half_sigma(&self) -> Result<()> {
        if self.a_min > self.sigma / 2.0 {
            Ok(())
        } else {
            Err(Error::NeedsAMinAboveHalfSigma {
                a_min: self.a_min,
                sigma: self.sigma,
            })
        }
    }

    /// `n x n` grid over the rectangle (corners and midpoints for n = 3).
    pub fn grid(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        let mut pts = Vec::with_capacity(n * n);
        for i in 0..n {
            let wa = i as f64 / (n - 1) as f64;
            let a = self.a_min + wa * (self.a_max - self.a_min);
            for j in 0..n {
                let wb = j as f64 / (n - 1) as f64;
                let b = self.b_min + wb * (self.b_max - self.b_min);
                pts.push((a, b));
            }
        }
        pts.dedup_by(|x, y| x == y);
        pts
    }

    /// Model at a grid point, with the region's shared sigma and x0.
    pub fn model_at(&self, a: f64, b: f64) -> ModelParams {
        ModelParams {
            a,
            b,
            sigma: self.sigma,
            x0: self.x0,
        }
    }

    /// Whether the rectangle is a single point.
    #[inline]
    pub fn is_point(&self) -> bool {
        self.a_min == self.a_max && self.b_min == self.b_max
    }
}
