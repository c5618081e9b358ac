//! Experiment configuration: a flat TOML file plus CLI overrides.
//!
//! Every downstream precondition is checked at load time; violations are
//! collected (not short-circuited) and reported with the inequality that
//! failed, so a bad config surfaces all of its problems at once.

use cirseq_core::bounds;
use cirseq_core::threshold::{self, ProcedureKind};
use cirseq_core::twodim::KappaSchedule;
use cirseq_core::{ModelParams, ParamRegion};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Which procedure an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    /// Truncated sequential estimation of `b` (`a` known).
    B,
    /// Truncated sequential estimation of `a` (`b` known).
    A,
    /// Two-step aggregated procedure for `(a, b)`.
    #[serde(rename = "2d")]
    TwoDim,
    /// Fixed-horizon MLE of `b`.
    MleB,
    /// Fixed-horizon MLE of `a`.
    MleA,
}

impl Procedure {
    pub fn is_sequential(self) -> bool {
        matches!(self, Procedure::B | Procedure::A | Procedure::TwoDim)
    }

    pub fn kind(self) -> Option<ProcedureKind> {
        match self {
            Procedure::B | Procedure::MleB => Some(ProcedureKind::ScalarB),
            Procedure::A | Procedure::MleA => Some(ProcedureKind::ScalarA),
            Procedure::TwoDim => Some(ProcedureKind::TwoDim),
        }
    }
}

fn default_step() -> f64 {
    0.01
}
fn default_m() -> u32 {
    2
}
fn default_delta() -> f64 {
    0.25
}
fn default_varpi() -> f64 {
    1.5
}
fn default_v_star() -> f64 {
    1.0
}
fn default_replicates() -> u64 {
    1000
}

/// Flat, typed experiment description (see `configs/` for examples).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub procedure: Procedure,
    /// True data-generating drift level.
    pub a: f64,
    /// True data-generating reversion rate.
    pub b: f64,
    pub sigma: f64,
    pub x0: f64,
    /// Parameter rectangle; defaults to the point `(a, b)`.
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub b_min: Option<f64>,
    pub b_max: Option<f64>,
    /// Observation deadline `T`.
    pub t_horizon: f64,
    /// Bound order `m >= 2`.
    #[serde(default = "default_m")]
    pub m: u32,
    /// Clamp-level exponent `delta` in `(0, 1/2)`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Stage-schedule growth exponent `varpi` in `(1, 2)`.
    #[serde(default = "default_varpi")]
    pub varpi: f64,
    /// Stage-count tail constant (not explicit in closed form; reported
    /// separately wherever it enters a bound).
    #[serde(default = "default_v_star")]
    pub v_star: f64,
    /// Simulation grid step.
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    pub seed: u64,
    /// Explicit threshold `H`; when absent the optimal `H*_T` is solved.
    pub h: Option<f64>,
    /// Draw `x0` from the stationary law per replicate instead of the
    /// fixed value (concentration experiments default to this).
    #[serde(default)]
    pub stationary_start: bool,
}

/// Config with every derived quantity resolved and validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cfg: ExperimentConfig,
    pub params: ModelParams,
    pub region: ParamRegion,
    /// Clamp level (1 for the b-procedure, where it is unused).
    pub r: f64,
    /// Threshold actually used (override or solved `H*_T`).
    pub h: f64,
    /// True when `h` came from the optimizer.
    pub h_is_optimal: bool,
    pub u_star: Option<f64>,
    pub schedule: Option<KappaSchedule>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    pub fn region(&self) -> Result<ParamRegion, ConfigError> {
        let a_min = self.a_min.unwrap_or(self.a);
        let a_max = self.a_max.unwrap_or(self.a);
        let b_min = self.b_min.unwrap_or(self.b);
        let b_max = self.b_max.unwrap_or(self.b);
        ParamRegion::new(a_min, a_max, b_min, b_max, self.sigma, self.x0)
            .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))
    }

    /// Validate every downstream precondition and resolve `r`, `H` and the
    /// stage schedule. Violations are accumulated with the inequality that
    /// failed.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let mut errs = Vec::new();
        let mut push = |cond: bool, msg: String| {
            if !cond {
                errs.push(msg);
            }
        };

        push(
            self.a > 0.0,
            format!("drift level must satisfy a > 0 (got {})", self.a),
        );
        push(
            self.b > 0.0,
            format!("reversion rate must satisfy b > 0 (got {})", self.b),
        );
        push(
            self.sigma > 0.0,
            format!(
                "diffusion scale must satisfy sigma > 0 (got {})",
                self.sigma
            ),
        );
        push(
            self.x0 > 0.0,
            format!("initial state must satisfy x0 > 0 (got {})", self.x0),
        );
        push(
            self.step > 0.0 && self.step <= self.t_horizon,
            format!(
                "grid step must satisfy 0 < step <= T (got step = {}, T = {})",
                self.step, self.t_horizon
            ),
        );
        push(
            self.replicates >= 1,
            format!("replicates must be >= 1 (got {})", self.replicates),
        );
        push(
            self.m >= 2,
            format!("bound order must satisfy m >= 2 (got {})", self.m),
        );
        push(
            self.delta > 0.0 && self.delta < 0.5,
            format!(
                "clamp exponent must satisfy 0 < delta < 1/2 (got {})",
                self.delta
            ),
        );
        push(
            self.varpi > 1.0 && self.varpi < 2.0,
            format!(
                "schedule exponent must satisfy 1 < varpi < 2 (got {})",
                self.varpi
            ),
        );
        push(
            self.v_star >= 0.0,
            format!("v_star must be >= 0 (got {})", self.v_star),
        );

        let region = match self.region() {
            Ok(r) => r,
            Err(ConfigError::Invalid(mut v)) => {
                errs.append(&mut v);
                return Err(ConfigError::Invalid(errs));
            }
            Err(e) => return Err(e),
        };
        let in_region = self.a >= region.a_min
            && self.a <= region.a_max
            && self.b >= region.b_min
            && self.b <= region.b_max;
        push(
            in_region,
            format!(
                "true parameter (a, b) = ({}, {}) must lie in the region [{}, {}] x [{}, {}]",
                self.a, self.b, region.a_min, region.a_max, region.b_min, region.b_max
            ),
        );

        match self.procedure {
            Procedure::B | Procedure::MleB => {
                push(
                    region.a_min == region.a_max,
                    "b-procedure treats a as known: the region must have a_min == a_max".into(),
                );
                if self.procedure == Procedure::B {
                    push(
                        self.t_horizon >= 1.0,
                        format!(
                            "b-procedure bound requires T >= 1 (got T = {})",
                            self.t_horizon
                        ),
                    );
                }
            }
            Procedure::A | Procedure::MleA => {
                push(
                    region.b_min == region.b_max,
                    "a-procedure treats b as known: the region must have b_min == b_max".into(),
                );
                push(
                    region.a_min > self.sigma / 2.0,
                    format!(
                        "a-procedure requires a_min > sigma/2 (got a_min = {}, sigma/2 = {})",
                        region.a_min,
                        self.sigma / 2.0
                    ),
                );
            }
            Procedure::TwoDim => {
                push(
                    region.a_min > self.sigma / 2.0,
                    format!(
                        "two-step procedure requires a_min > sigma/2 (got a_min = {}, sigma/2 = {})",
                        region.a_min,
                        self.sigma / 2.0
                    ),
                );
            }
        }
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }

        // Params are safe to build now.
        let params = ModelParams::new(self.a, self.b, self.sigma, self.x0)
            .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;

        // Clamp level for the inverse-moment machinery.
        let r = match self.procedure {
            Procedure::A | Procedure::MleA => bounds::r_threshold(
                &region,
                region.known_b(),
                self.t_horizon.max(1.0),
                self.delta,
            )
            .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?,
            Procedure::TwoDim => {
                bounds::r_threshold(&region, region.b_min, self.t_horizon.max(1.0), self.delta)
                    .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?
            }
            _ => 1.0,
        };

        // Threshold: explicit override or the solved optimum.
        let (h, h_is_optimal) = match (self.h, self.procedure.kind()) {
            (Some(h), _) => (h, false),
            (None, Some(kind)) if self.procedure.is_sequential() => {
                let solved = threshold::optimal_threshold(kind, &region, self.t_horizon, self.m, r)
                    .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
                (solved.h, true)
            }
            _ => (0.0, false), // MLE runs need no threshold.
        };

        // Domain of the matching bound, named as inequalities.
        let mut errs = Vec::new();
        let mut push = |cond: bool, msg: String| {
            if !cond {
                errs.push(msg);
            }
        };
        match self.procedure {
            Procedure::B => {
                let hi = region.a_star() * self.t_horizon;
                push(
                    h > 0.0 && h < hi,
                    format!("b-procedure bound requires 0 < H < a_*·T = {hi} (got H = {h})"),
                );
            }
            Procedure::A => {
                let mu = bounds::mu_star_a(&region, r)
                    .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
                let hi = mu * self.t_horizon;
                push(
                    h > 0.0 && h < hi,
                    format!("a-procedure bound requires 0 < H < mu_a*·T = {hi} (got H = {h})"),
                );
            }
            Procedure::TwoDim => {
                let mu = bounds::mu_star_2d(&region, r)
                    .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
                push(
                    self.t_horizon > 1.0 / mu,
                    format!(
                        "two-step bound requires T > 1/mu_* = {} (got T = {})",
                        1.0 / mu,
                        self.t_horizon
                    ),
                );
                let hi = mu * self.t_horizon;
                push(
                    h >= 1.0 && h < hi,
                    format!("two-step bound requires 1 <= H < mu_*·T = {hi} (got H = {h})"),
                );
            }
            _ => {}
        }
        if !errs.is_empty() {
            return Err(ConfigError::Invalid(errs));
        }

        let (u_star, schedule) = if self.procedure == Procedure::TwoDim {
            let u =
                bounds::u_star(&region).map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
            let schedule = KappaSchedule::new(h, self.varpi, u)
                .map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
            (Some(u), Some(schedule))
        } else {
            (None, None)
        };

        Ok(Resolved {
            cfg: self.clone(),
            params,
            region,
            r,
            h,
            h_is_optimal,
            u_star,
            schedule,
        })
    }
}
