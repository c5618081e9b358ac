//! Machine-readable experiment reports.
//!
//! Reports must reproduce byte-identically from (config, seed), so they
//! carry no wall-clock or host information; timing goes to stderr.

use cirseq_core::bounds::AccuracyBreakdown;
use cirseq_core::stats::MeanCi;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct CiSummary {
    pub estimate: f64,
    pub se: f64,
    pub lower99: f64,
    pub upper99: f64,
    pub n: u64,
    pub bootstrap_used: bool,
}

impl From<MeanCi> for CiSummary {
    fn from(ci: MeanCi) -> Self {
        Self {
            estimate: ci.estimate,
            se: ci.se,
            lower99: ci.lower99,
            upper99: ci.upper99,
            n: ci.n as u64,
            bootstrap_used: ci.bootstrap_used,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProportionSummary {
    pub count: u64,
    pub n: u64,
    pub rate: f64,
    pub wilson_upper99: f64,
}

impl ProportionSummary {
    pub fn new(count: u64, n: u64) -> Self {
        Self {
            count,
            n,
            rate: count as f64 / n as f64,
            wilson_upper99: cirseq_core::stats::wilson_upper99(count, n),
        }
    }
}

/// One pass/fail check against a closed bound.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub observed: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn upper_dominated(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            threshold,
            pass: observed <= threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSummary {
    pub statistical_term: f64,
    pub truncation_term: f64,
    pub stage_tail_term: f64,
    pub total: f64,
    /// Empirical replacement of the stage tail term (two-step runs):
    /// `theta_max * P_hat(upsilon_H > n*_H)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_stage_tail_term: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_with_empirical_stage_tail: Option<f64>,
}

impl BoundSummary {
    pub fn from_breakdown(b: &AccuracyBreakdown, empirical_stage_tail: Option<f64>) -> Self {
        Self {
            statistical_term: b.statistical_term,
            truncation_term: b.truncation_term,
            stage_tail_term: b.stage_tail_term,
            total: b.total,
            empirical_stage_tail_term: empirical_stage_tail,
            total_with_empirical_stage_tail: empirical_stage_tail
                .map(|e| b.statistical_term + b.truncation_term + e),
        }
    }
}

/// Every constant the bound machinery evaluated for a config, for audit
/// diffing. Seed-free by construction.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsDump {
    pub procedure: String,
    pub m: u32,
    pub t_horizon: f64,
    pub x_m: f64,
    pub x_2m: f64,
    pub l_m: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_star_sq: Option<f64>,
    pub r_clamp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_a_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho_star: Option<f64>,
    pub crossing_rate: f64,
    pub h_star: f64,
    pub h_star_residual: f64,
    pub h_used: f64,
    pub fisher_at_truth: f64,
    pub bound_at_h_used: BoundSummary,
}

/// Full experiment report (see the README for the field glossary).
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub constants: ConstantsDump,
    pub mse: CiSummary,
    pub mean_stop_time: CiSummary,
    pub mean_stop_over_t: f64,
    pub truncation: ProportionSummary,
    pub verdicts: Vec<Verdict>,
    pub replicates: u64,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Side-by-side sequential vs fixed-horizon comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub config: ExperimentConfig,
    pub h_used: f64,
    pub fixed_mle_mse: CiSummary,
    pub sequential_mse: CiSummary,
    pub mean_sequential_stop: CiSummary,
    pub t_horizon: f64,
    pub mean_stop_over_t: f64,
    /// `MSE * mean duration * Fisher(theta)`; 1 is the efficiency target.
    pub normalized_risk_sequential: f64,
    /// `MSE * T * Fisher(theta)` for the fixed-horizon MLE.
    pub normalized_risk_fixed: f64,
    /// "pass" / "inconclusive" (CIs too wide to compare).
    pub comparison: String,
}

/// Serialize any report deterministically (pretty JSON, stable key order).
pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(report: &T, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_json(report))
}

/// Write rows as CSV with a header; plain `Display` formatting of f64
/// (shortest round-trip representation, deterministic).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)
}

/// Print one pass/fail line per verdict (the acceptance suite format).
pub fn print_verdicts<W: Write>(mut w: W, verdicts: &[Verdict]) -> std::io::Result<()> {
    for v in verdicts {
        writeln!(
            w,
            "[{}] {}: observed {:.6e} vs threshold {:.6e}",
            if v.pass { "PASS" } else { "FAIL" },
            v.name,
            v.observed,
            v.threshold
        )?;
    }
    Ok(())
}
