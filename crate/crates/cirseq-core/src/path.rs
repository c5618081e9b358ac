//! Discretized trajectories with running path functionals.
//!
//! A [`PathRecord`] stores the state at grid nodes together with the
//! cumulative trapezoid integrals `int_0^t X ds` and `int_0^t X^-1 ds` and
//! `ln X_t`, which is everything the stopping rules and estimators read.
//! States are sampled from the exact transition law at the nodes; the only
//! discretization error is the O(step^2) quadrature of the time integrals.

use alloc::vec::Vec;
// Float math for the no_std build; std test builds resolve inherently.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ModelParams, TransitionSampler};

/// Which running functional a stopping rule watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    /// `int_0^t X ds` (b-estimation rule).
    IntX,
    /// `int_0^t X^-1 ds` (a-estimation rule).
    IntInvX,
    /// `tr G_t = int_0^t (X + X^-1) ds` (two-dimensional stage rule).
    TraceG,
}

/// Immutable trajectory record over the grid `t_k = k * grid_step`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    grid_step: f64,
    times: Vec<f64>,
    states: Vec<f64>,
    int_x: Vec<f64>,
    int_invx: Vec<f64>,
    log_state: Vec<f64>,
}

/// Path values interpolated at an off-grid time (within-step linear model
/// for the state and for each integrand).
#[derive(Debug, Clone, Copy)]
pub struct PathPoint {
    pub time: f64,
    pub state: f64,
    pub int_x: f64,
    pub int_invx: f64,
    pub log_state: f64,
}

impl PathPoint {
    /// `int_0^t X^-1 dX` via the Ito log identity
    /// `ln(X_t/x0) + (sigma/2) int_0^t X^-1 ds`.
    #[inline]
    pub fn ito_log_integral(&self, log_x0: f64, sigma: f64) -> f64 {
        self.log_state - log_x0 + 0.5 * sigma * self.int_invx
    }

    #[inline]
    pub fn trace_g(&self) -> f64 {
        self.int_x + self.int_invx
    }
}

/// Exact within-step crossing of an accumulated functional.
#[derive(Debug, Clone, Copy)]
pub struct Crossing {
    /// Grid index `k` with `t_k <= time < t_{k+1}` (or the final node).
    pub node: usize,
    pub point: PathPoint,
}

impl PathRecord {
    /// Build a record from raw states on a uniform grid, accumulating the
    /// trapezoid integrals. Used by the simulators and by tests that need
    /// hand-crafted paths.
    pub fn from_states(grid_step: f64, states: Vec<f64>) -> Result<Self> {
        if !(grid_step > 0.0 && grid_step.is_finite()) {
            return Err(Error::BadParam {
                what: "grid_step must be > 0",
            });
        }
        if states.len() < 2 {
            return Err(Error::BadParam {
                what: "need at least two grid nodes",
            });
        }
        if states.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::BadParam {
                what: "states must be strictly positive",
            });
        }
        let mut rec = Self {
            grid_step,
            times: Vec::with_capacity(states.len()),
            states: Vec::with_capacity(states.len()),
            int_x: Vec::with_capacity(states.len()),
            int_invx: Vec::with_capacity(states.len()),
            log_state: Vec::with_capacity(states.len()),
        };
        rec.push_first(states[0]);
        for &x in &states[1..] {
            rec.push_state(x);
        }
        Ok(rec)
    }

    fn push_first(&mut self, x0: f64) {
        self.times.push(0.0);
        self.states.push(x0);
        self.int_x.push(0.0);
        self.int_invx.push(0.0);
        self.log_state.push(x0.ln());
    }

    fn push_state(&mut self, x: f64) {
        let k = self.states.len() - 1;
        let prev = self.states[k];
        let h = self.grid_step;
        self.times.push((k as f64 + 1.0) * h);
        self.int_x.push(self.int_x[k] + 0.5 * h * (prev + x));
        self.int_invx
            .push(self.int_invx[k] + 0.5 * h * (1.0 / prev + 1.0 / x));
        self.log_state.push(x.ln());
        self.states.push(x);
    }

    #[inline]
    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.states.len()
    }

    /// Final grid time.
    #[inline]
    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty grid")
    }

    /// Whether the grid reaches `t`, with float slack for accumulated
    /// step rounding.
    #[inline]
    pub fn covers(&self, t: f64) -> bool {
        self.horizon() >= t - 1e-9 * t.abs().max(1.0)
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    #[inline]
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    #[inline]
    pub fn int_x(&self) -> &[f64] {
        &self.int_x
    }

    #[inline]
    pub fn int_invx(&self) -> &[f64] {
        &self.int_invx
    }

    #[inline]
    pub fn log_state(&self) -> &[f64] {
        &self.log_state
    }

    #[inline]
    pub fn x0(&self) -> f64 {
        self.states[0]
    }

    fn integrand(&self, functional: Functional, k: usize) -> f64 {
        let x = self.states[k];
        match functional {
            Functional::IntX => x,
            Functional::IntInvX => 1.0 / x,
            Functional::TraceG => x + 1.0 / x,
        }
    }

    fn accumulated(&self, functional: Functional, k: usize) -> f64 {
        match functional {
            Functional::IntX => self.int_x[k],
            Functional::IntInvX => self.int_invx[k],
            Functional::TraceG => self.int_x[k] + self.int_invx[k],
        }
    }

    /// `int_0^{t_k} X^-1 dX` at a grid node, via the Ito log identity.
    pub fn ito_log_integral(&self, sigma: f64, upto: usize) -> f64 {
        assert!(upto < self.n_nodes(), "grid index out of range");
        self.log_state[upto] - self.log_state[0] + 0.5 * sigma * self.int_invx[upto]
    }

    /// Values at time `t in [0, horizon]`; errors if `t` lies outside.
    pub fn at_time(&self, t: f64) -> Result<PathPoint> {
        if t < 0.0 || t > self.horizon() * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::PathTooShort {
                have: self.horizon(),
                need: t,
            });
        }
        let t = t.min(self.horizon());
        let h = self.grid_step;
        let k = ((t / h) as usize).min(self.n_nodes() - 1);
        if k == self.n_nodes() - 1 {
            return Ok(self.node_point(k));
        }
        let u = t - self.times[k];
        Ok(self.point_within(k, u))
    }

    fn node_point(&self, k: usize) -> PathPoint {
        PathPoint {
            time: self.times[k],
            state: self.states[k],
            int_x: self.int_x[k],
            int_invx: self.int_invx[k],
            log_state: self.log_state[k],
        }
    }

    /// Within-step values at `t_k + u`, `0 <= u <= h`: state and log-state
    /// interpolate linearly, integrals integrate the linear integrand model
    /// (consistent with the trapezoid accumulators at `u = h`).
    fn point_within(&self, k: usize, u: f64) -> PathPoint {
        let h = self.grid_step;
        let w = u / h;
        let (xl, xr) = (self.states[k], self.states[k + 1]);
        let (il, ir) = (1.0 / xl, 1.0 / xr);
        PathPoint {
            time: self.times[k] + u,
            state: xl + (xr - xl) * w,
            int_x: self.int_x[k] + u * (xl + 0.5 * (xr - xl) * w),
            int_invx: self.int_invx[k] + u * (il + 0.5 * (ir - il) * w),
            log_state: self.log_state[k] + (self.log_state[k + 1] - self.log_state[k]) * w,
        }
    }

    /// First time the accumulated `functional` reaches `level`, searching
    /// from grid node `start_hint`. Returns `None` when the horizon ends
    /// before the crossing (censored).
    ///
    /// The within-step crossing solves the linear-integrand model exactly,
    /// so the interpolated functional at the returned time equals `level`
    /// to ~1e-12 relative accuracy.
    pub fn crossing_from(
        &self,
        functional: Functional,
        level: f64,
        start_hint: usize,
    ) -> Option<Crossing> {
        if level <= 0.0 {
            return Some(Crossing {
                node: 0,
                point: self.node_point(0),
            });
        }
        let n = self.n_nodes();
        let mut k = start_hint.min(n - 1);
        // The hint must not sit past the crossing.
        while k > 0 && self.accumulated(functional, k) >= level {
            k -= 1;
        }
        while k + 1 < n && self.accumulated(functional, k + 1) < level {
            k += 1;
        }
        if k + 1 >= n {
            return None;
        }
        let h = self.grid_step;
        let acc_k = self.accumulated(functional, k);
        let y_l = self.integrand(functional, k);
        let y_r = self.integrand(functional, k + 1);
        let q = level - acc_k;
        let s = y_r - y_l;
        // Solve y_l u + s u^2 / (2h) = q for u in (0, h].
        let mut u = if s.abs() < 1e-14 * y_l.abs() {
            q / y_l
        } else {
            let disc = (y_l * y_l + 2.0 * s * q / h).max(0.0);
            2.0 * q / (y_l + disc.sqrt())
        };
        // One Newton polish step tightens to machine precision.
        let f = y_l * u + 0.5 * s * u * u / h - q;
        let fp = y_l + s * u / h;
        if fp != 0.0 {
            u -= f / fp;
        }
        let u = u.max(0.0).min(h);
        Some(Crossing {
            node: k,
            point: self.point_within(k, u),
        })
    }

    /// [`Self::crossing_from`] searching from the start of the path.
    pub fn crossing(&self, functional: Functional, level: f64) -> Option<Crossing> {
        self.crossing_from(functional, level, 0)
    }
}

/// Incremental simulator: grows a trajectory node by node with the exact
/// transition sampler, so a caller can extend the horizon on demand
/// without re-simulating. The node sequence for a given rng stream does
/// not depend on how the growth is chunked.
pub struct PathGrower<'r, R: Rng + ?Sized> {
    sampler: TransitionSampler,
    rec: PathRecord,
    rng: &'r mut R,
}

impl<'r, R: Rng + ?Sized> PathGrower<'r, R> {
    pub fn new(params: &ModelParams, step: f64, rng: &'r mut R) -> Result<Self> {
        Self::with_initial_state(params, step, params.x0, rng)
    }

    /// Start from an explicit initial state (e.g. a stationary draw).
    pub fn with_initial_state(
        params: &ModelParams,
        step: f64,
        x0: f64,
        rng: &'r mut R,
    ) -> Result<Self> {
        if !(x0 > 0.0 && x0.is_finite()) {
            return Err(Error::BadParam {
                what: "x0 must be > 0",
            });
        }
        let sampler = TransitionSampler::new(params, step)?;
        let mut rec = PathRecord {
            grid_step: step,
            times: Vec::new(),
            states: Vec::new(),
            int_x: Vec::new(),
            int_invx: Vec::new(),
            log_state: Vec::new(),
        };
        rec.push_first(x0);
        Ok(Self { sampler, rec, rng })
    }

    /// Append one node.
    pub fn step(&mut self) {
        let x = self
            .sampler
            .sample(*self.rec.states.last().expect("non-empty"), self.rng);
        self.rec.push_state(x);
    }

    /// Grow until the grid covers `t` (final node time >= t).
    pub fn grow_to(&mut self, t: f64) {
        while self.rec.horizon() < t - 1e-12 {
            self.step();
        }
    }

    /// Grow until `functional >= level` at a grid node or the horizon
    /// reaches `max_t`. Returns true when the level was reached.
    pub fn grow_until(&mut self, functional: Functional, level: f64, max_t: f64) -> bool {
        loop {
            let k = self.rec.n_nodes() - 1;
            if self.rec.accumulated(functional, k) >= level {
                return true;
            }
            if self.rec.horizon() >= max_t - 1e-12 {
                return false;
            }
            self.step();
        }
    }

    pub fn record(&self) -> &PathRecord {
        &self.rec
    }

    pub fn finish(self) -> PathRecord {
        self.rec
    }
}

/// Simulate a full grid over `[0, horizon]` (exact transitions at nodes,
/// trapezoid accumulators between them).
pub fn simulate_path<R: Rng + ?Sized>(
    params: &ModelParams,
    horizon: f64,
    step: f64,
    rng: &mut R,
) -> Result<PathRecord> {
    if !(horizon > 0.0) {
        return Err(Error::BadParam {
            what: "horizon must be > 0",
        });
    }
    if !(step > 0.0 && step <= horizon) {
        return Err(Error::BadParam {
            what: "step must satisfy 0 < step <= horizon",
        });
    }
    let mut grower = PathGrower::new(params, step, rng)?;
    grower.grow_to(horizon);
    Ok(grower.finish())
}
