//! Error type shared by the whole crate.

use core::fmt;

/// Errors raised by constructors, bound evaluators and stopping rules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter violated a positivity/ordering precondition.
    BadParam { what: &'static str },
    /// Moment exponent at or below the divergence boundary `q <= -alpha_min`.
    MomentDiverges { q: f64, alpha_min: f64 },
    /// Threshold `H` outside the admissible interval `(lo, hi)` of the bound.
    ThresholdRange { h: f64, lo: f64, hi: f64 },
    /// Horizon `T` too small for the requested bound domain.
    HorizonRange { t: f64, needs: f64 },
    /// The region must satisfy `a_min > sigma/2` for this quantity.
    NeedsAMinAboveHalfSigma { a_min: f64, sigma: f64 },
    /// Fisher information pole: `theta <= sigma/2`.
    FisherPole { theta: f64, sigma: f64 },
    /// Stage-count stopping rule ran past its cap without firing.
    StageCap { cap: u64 },
    /// A path was too short for the requested read.
    PathTooShort { have: f64, need: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadParam { what } => write!(f, "invalid parameter: {what}"),
            Error::MomentDiverges { q, alpha_min } => write!(
                f,
                "moment of order q = {q} diverges: requires q > -alpha_min = -{alpha_min}"
            ),
            Error::ThresholdRange { h, lo, hi } => write!(
                f,
                "threshold H = {h} outside the admissible range {lo} < H < {hi}"
            ),
            Error::HorizonRange { t, needs } => {
                write!(f, "horizon T = {t} too small: requires T > {needs}")
            }
            Error::NeedsAMinAboveHalfSigma { a_min, sigma } => write!(
                f,
                "requires a_min > sigma/2 (got a_min = {a_min}, sigma/2 = {})",
                sigma / 2.0
            ),
            Error::FisherPole { theta, sigma } => write!(
                f,
                "Fisher information undefined: requires theta > sigma/2 (got theta = {theta}, sigma = {sigma})"
            ),
            Error::StageCap { cap } => write!(
                f,
                "stage-count stopping rule did not fire within the cap of {cap} stages"
            ),
            Error::PathTooShort { have, need } => write!(
                f,
                "path horizon {have} shorter than required time {need}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
