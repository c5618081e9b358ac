//! Sequential and truncated drift estimation for the square-root
//! mean-reverting diffusion
//!
//! ```text
//! dX_t = (a - b X_t) dt + sqrt(sigma X_t) dW_t,   X_0 = x0 > 0.
//! ```
//!
//! The crate provides:
//!
//! * exact transition sampling and path-functional accumulation
//!   ([`path::simulate_path`]),
//! * the scalar sequential/truncated estimators for `b` (with `a` known)
//!   and for `a` (with `b` known) ([`scalar`]),
//! * the two-step aggregated procedure for the pair `(a, b)` ([`twodim`]),
//! * every explicit constant entering the non-asymptotic mean-square
//!   accuracy bounds, and the optimal stopping threshold `H*_T`
//!   ([`bounds`], [`threshold`]),
//! * the deviation functionals and the corrector (Poisson-equation)
//!   solution used by the concentration checks ([`deviation`]).
//!
//! Everything here is pure computation over value types; no IO. The crate
//! is `no_std` (with `alloc`), so it can be embedded in harnesses that
//! bring their own parallelism and reporting.

#![cfg_attr(not(test), no_std)]
// Negated float comparisons are deliberate: `!(x > 0.0)` rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bounds;
pub mod deviation;
pub mod error;
pub mod model;
pub mod path;
pub mod quad;
pub mod region;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod threshold;
pub mod twodim;

pub use error::{Error, Result};
pub use model::ModelParams;
pub use path::PathRecord;
pub use region::ParamRegion;
pub use scalar::{EstimateOutcome, ProcedureConfig};
