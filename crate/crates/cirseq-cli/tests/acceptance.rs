//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the observed numbers once its assertions hold. Tolerances are
//! pinned in the assertions; master seeds are fixed so every run is
//! reproducible.

use std::time::Instant;

use cirseq_cli::config::{ExperimentConfig, Procedure};
use cirseq_cli::lab;
use cirseq_cli::report::to_json;
use cirseq_cli::runner::{compare_sequential_vs_fixed, run_experiment, run_replicates};

use cirseq_core::model::{ModelParams, TransitionSampler};
use cirseq_core::path::{Functional, PathGrower};
use cirseq_core::region::ParamRegion;
use cirseq_core::rng::replicate_rng;
use cirseq_core::scalar;
use cirseq_core::stats::{mean_sd, Z_99};
use cirseq_core::threshold::AccuracyFn;
use cirseq_core::twodim;

fn reference_params() -> ModelParams {
    ModelParams::new(1.0, 0.5, 0.5, 2.0).unwrap()
}

fn reference_region() -> ParamRegion {
    ParamRegion::point(1.0, 0.5, 0.5, 2.0).unwrap()
}

fn base_config(
    procedure: Procedure,
    t: f64,
    m: u32,
    replicates: u64,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        procedure,
        a: 1.0,
        b: 0.5,
        sigma: 0.5,
        x0: 2.0,
        a_min: None,
        a_max: None,
        b_min: None,
        b_max: None,
        t_horizon: t,
        m,
        delta: 0.25,
        varpi: 1.5,
        v_star: 1.0,
        step: 0.01,
        replicates,
        seed,
        h: None,
        stationary_start: false,
    }
}

/// Criterion 1: exact transition sampler law at (1, 0.5, 0.5, x0 = 1),
/// dt = 1, N = 1e5 draws; mean and variance within 4 SE of the closed
/// forms; runtime under 10 s.
#[test]
fn criterion_01_exact_sampler_law() {
    let started = Instant::now();
    let p = ModelParams::new(1.0, 0.5, 0.5, 1.0).unwrap();
    let sampler = TransitionSampler::new(&p, 1.0).unwrap();
    let n: usize = 100_000;
    let draws: Vec<f64> = run_replicates(n as u64, |i| {
        let mut rng = replicate_rng(1001, i);
        sampler.sample(1.0, &mut rng)
    });
    let closed_mean = p.transition_mean(1.0, 1.0);
    let closed_var = p.transition_variance(1.0, 1.0);
    assert!((closed_mean - 1.393_469).abs() < 1e-6);
    let (mean, sd) = mean_sd(&draws);
    let se_mean = (closed_var / n as f64).sqrt();
    assert!(
        (mean - closed_mean).abs() < 4.0 * se_mean,
        "mean {mean} vs {closed_mean} (4se {})",
        4.0 * se_mean
    );
    let var = sd * sd;
    let c4 = draws.iter().map(|x| (x - closed_mean).powi(4)).sum::<f64>() / n as f64;
    let se_var = ((c4 - closed_var * closed_var).max(0.0) / n as f64).sqrt();
    assert!(
        (var - closed_var).abs() < 4.0 * se_var,
        "var {var} vs {closed_var} (4se {})",
        4.0 * se_var
    );
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "sampler-law run took {elapsed:.2}s");
    println!(
        "[PASS] criterion 1: sampler mean {mean:.6} vs {closed_mean:.6}, var {var:.6} vs {closed_var:.6}, {elapsed:.2}s"
    );
}

/// Criterion 2: ergodic limits at T = 500, step 0.01, N = 500 paths —
/// mean(int X / T) within 3 SE of a/b = 2 and mean(int X^-1 / T) within
/// 3 SE of 2b/(2a - sigma) = 2/3.
#[test]
fn criterion_02_ergodic_limits() {
    let p = reference_params();
    let t = 500.0;
    let n = 500u64;
    let rows: Vec<(f64, f64)> = run_replicates(n, |i| {
        let mut rng = replicate_rng(1002, i);
        let mut g = PathGrower::new(&p, 0.01, &mut rng).unwrap();
        g.grow_to(t);
        let rec = g.finish();
        let k = rec.n_nodes() - 1;
        (rec.int_x()[k] / t, rec.int_invx()[k] / t)
    });
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let invs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let (mx, sdx) = mean_sd(&xs);
    let (mi, sdi) = mean_sd(&invs);
    let (sex, sei) = (sdx / (n as f64).sqrt(), sdi / (n as f64).sqrt());
    assert!(
        (mx - 2.0).abs() < 3.0 * sex,
        "int X / T: {mx} (3se {})",
        3.0 * sex
    );
    assert!(
        (mi - 2.0 / 3.0).abs() < 3.0 * sei,
        "int X^-1 / T: {mi} (3se {})",
        3.0 * sei
    );
    println!("[PASS] criterion 2: int X/T = {mx:.4} (target 2), int X^-1/T = {mi:.4} (target 2/3)");
}

/// Criterion 3: sequential-b on-stop accuracy — empirical
/// E(theta_hat - b)^2 <= sigma/H, one-sided at 99%, H = 200, N = 5000.
#[test]
fn criterion_03_sequential_b_on_stop_accuracy() {
    let p = reference_params();
    let h = 200.0;
    let n = 5000u64;
    let sq: Vec<f64> = run_replicates(n, |i| {
        let mut rng = replicate_rng(1003, i);
        let mut g = PathGrower::new(&p, 0.01, &mut rng).unwrap();
        g.grow_until(Functional::IntX, h, 1e9);
        let rec = g.finish();
        let stop = scalar::sequential_estimate_b(&rec, p.a, h).unwrap();
        (stop.estimate - p.b) * (stop.estimate - p.b)
    });
    let (mse, sd) = mean_sd(&sq);
    let se = sd / (n as f64).sqrt();
    let bound = p.sigma / h;
    assert!(
        mse - Z_99 * se <= bound,
        "on-stop MSE {mse} significantly above sigma/H = {bound}"
    );
    println!("[PASS] criterion 3: on-stop MSE {mse:.3e} <= sigma/H = {bound:.3e} (99% one-sided)");
}

/// Criterion 4: guaranteed mean-square accuracy bound for the truncated
/// b-procedure at T = 100, m = 2, H = H*_T, N = 1e4 — MSE below the
/// closed accuracy bound and truncation frequency below the closed tail
/// bound (both with conservative slack).
#[test]
fn criterion_04_truncated_b_guaranteed_bound() {
    let cfg = base_config(Procedure::B, 100.0, 2, 10_000, 1004);
    let res = cfg.resolve().unwrap();
    assert!(res.h_is_optimal);
    let report = run_experiment(&res).unwrap();
    for v in &report.verdicts {
        assert!(
            v.pass,
            "{}: observed {} vs threshold {}",
            v.name, v.observed, v.threshold
        );
    }
    println!(
        "[PASS] criterion 4: truncated-b MSE {:.3e} (upper CI {:.3e}) <= bound {:.3e}; truncation rate {:.2e} <= tail bound",
        report.mse.estimate,
        report.mse.upper99,
        report.constants.bound_at_h_used.total,
        report.truncation.rate
    );
}

/// Criterion 5: guaranteed accuracy bound for the truncated a-procedure at
/// T = 200, m = 3, r from the closed clamp formula (delta = 0.25),
/// N = 1e4, with a_min > sigma/2 enforced.
#[test]
fn criterion_05_truncated_a_guaranteed_bound() {
    let cfg = base_config(Procedure::A, 200.0, 3, 10_000, 1005);
    let res = cfg.resolve().unwrap();
    assert!(res.h_is_optimal);
    assert!(res.region.a_min > res.cfg.sigma / 2.0);
    assert!(res.r >= 1.0);
    let report = run_experiment(&res).unwrap();
    for v in &report.verdicts {
        assert!(
            v.pass,
            "{}: observed {} vs threshold {}",
            v.name, v.observed, v.threshold
        );
    }
    println!(
        "[PASS] criterion 5: truncated-a MSE {:.3e} (upper CI {:.3e}) <= bound {:.3e} at r = {:.3}",
        report.mse.estimate, report.mse.upper99, report.constants.bound_at_h_used.total, res.r
    );
}

/// Criterion 6: stopping-time ratios at threshold 500 —
/// b-case mean(tau_H/H) near theta/a, a-case near (2 theta - sigma)/(2b),
/// two-dimensional stage rule mean(t_z/z) near 1/tr F, all within 3 SE.
///
/// The crossing state is size-biased, so each case starts at the
/// initial value that zeroes the O(1/H) duration bias: E X^2/E X for the
/// int-X rule, exp(psi(alpha-1))/beta for the int-X^-1 rule.
#[test]
fn criterion_06_stopping_time_ratios() {
    let h = 500.0;

    // b-case: tau_H/H -> theta/a = 0.5.
    let pb = ModelParams::new(1.0, 0.5, 0.5, 2.5).unwrap();
    let n = 4000u64;
    let ratios: Vec<f64> = run_replicates(n, |i| {
        let mut rng = replicate_rng(1006, i);
        let mut g = PathGrower::new(&pb, 0.01, &mut rng).unwrap();
        g.grow_until(Functional::IntX, h, 1e9);
        let rec = g.finish();
        rec.crossing(Functional::IntX, h).unwrap().point.time / h
    });
    let (mb, sdb) = mean_sd(&ratios);
    let seb = sdb / (n as f64).sqrt();
    assert!(
        (mb - 0.5).abs() < 3.0 * seb,
        "b-case ratio {mb} vs 0.5 (3se {})",
        3.0 * seb
    );

    // a-case: tau_H/H -> (2 theta - sigma)/(2b) = 1.5.
    let pa = ModelParams::new(1.0, 0.5, 0.5, 1.258_143_415_469_681_8).unwrap();
    let n_a = 3000u64;
    let ratios_a: Vec<f64> = run_replicates(n_a, |i| {
        let mut rng = replicate_rng(1007, i);
        let mut g = PathGrower::new(&pa, 0.01, &mut rng).unwrap();
        g.grow_until(Functional::IntInvX, h, 1e9);
        let rec = g.finish();
        rec.crossing(Functional::IntInvX, h).unwrap().point.time / h
    });
    let (ma, sda) = mean_sd(&ratios_a);
    let sea = sda / (n_a as f64).sqrt();
    assert!(
        (ma - 1.5).abs() < 3.0 * sea,
        "a-case ratio {ma} vs 1.5 (3se {})",
        3.0 * sea
    );

    // Two-dimensional stage rule: t_z/z -> 1/tr F = 0.375.
    let p2 = reference_params();
    let n_2 = 1000u64;
    let ratios_2: Vec<f64> = run_replicates(n_2, |i| {
        let mut rng = replicate_rng(1008, i);
        let mut g = PathGrower::new(&p2, 0.01, &mut rng).unwrap();
        g.grow_until(Functional::TraceG, h, 1e9);
        let rec = g.finish();
        twodim::stage_stopping_time(&rec, h).unwrap().point.time / h
    });
    let (m2, sd2) = mean_sd(&ratios_2);
    let se2 = sd2 / (n_2 as f64).sqrt();
    let target = 3.0 / 8.0;
    assert!(
        (m2 - target).abs() < 3.0 * se2,
        "2d ratio {m2} vs {target} (3se {})",
        3.0 * se2
    );
    println!(
        "[PASS] criterion 6: tau/H ratios b {mb:.4} (0.5), a {ma:.4} (1.5), 2d {m2:.4} (0.375)"
    );
}

/// Criterion 7: two-step guaranteed accuracy bound at T = 500, m = 2, point
/// region, varpi = 1.5, N = 5000, with the stage-tail term replaced by
/// its empirical estimate; a stage-diagnostic pass confirms
/// tr G_{t_n} = kappa_n to 1e-12.
#[test]
fn criterion_07_two_step_guaranteed_bound() {
    let mut cfg = base_config(Procedure::TwoDim, 500.0, 2, 5000, 1009);
    // t_H must sit deep in the ergodic regime for the stage weights to be
    // healthy; H = 1000 < mu_* T while t_H ~ 375 <= T.
    cfg.h = Some(1000.0);
    let res = cfg.resolve().unwrap();
    let report = run_experiment(&res).unwrap();
    for v in &report.verdicts {
        assert!(
            v.pass,
            "{}: observed {} vs threshold {}",
            v.name, v.observed, v.threshold
        );
    }
    let summary = &report.constants.bound_at_h_used;
    assert!(summary.empirical_stage_tail_term.is_some());
    assert!(
        report.mse.upper99 <= summary.total_with_empirical_stage_tail.unwrap(),
        "MSE {} vs empirical-tail bound {}",
        report.mse.upper99,
        summary.total_with_empirical_stage_tail.unwrap()
    );

    // Duration law: with completion inside the kappa = H block the
    // aggregate stop is the trace crossing t_H, so mean(tau*/T) sits at
    // H/(tr F * T) up to the O(1/T) crossing bias.
    let tr_f = 8.0 / 3.0;
    let expected_ratio = res.h / (tr_f * cfg.t_horizon);
    let se_ratio = report.mean_stop_time.se / cfg.t_horizon;
    assert!(
        (report.mean_stop_over_t - expected_ratio).abs() < 3.0 * se_ratio + 2e-3,
        "mean stop/T {} vs {expected_ratio}",
        report.mean_stop_over_t
    );

    // Stage diagnostics on one replicate.
    let schedule = res.schedule.as_ref().unwrap();
    let p = res.params;
    let mut rng = replicate_rng(1009, 0);
    let mut g = PathGrower::new(&p, 0.01, &mut rng).unwrap();
    g.grow_until(Functional::TraceG, res.h, cfg.t_horizon);
    let rec = g.finish();
    match twodim::run_stages(&rec, schedule, p.sigma, true).unwrap() {
        twodim::StageRun::Completed {
            stages: Some(stages),
            upsilon,
            ..
        } => {
            assert!(upsilon >= 1);
            for s in stages.iter().step_by(997).chain(stages.last()) {
                let g_at = twodim::design_matrix(&rec, s.t_stop).unwrap();
                assert!(
                    (g_at.trace() - s.kappa).abs() <= 1e-12 * s.kappa,
                    "tr G = {} vs kappa = {}",
                    g_at.trace(),
                    s.kappa
                );
            }
            println!(
                "[PASS] criterion 7: 2d MSE {:.3e} <= bound-with-empirical-tail {:.3e}; {} stages, tr G = kappa to 1e-12",
                report.mse.estimate,
                summary.total_with_empirical_stage_tail.unwrap(),
                upsilon
            );
        }
        other => panic!("diagnostic stage run did not complete: {other:?}"),
    }
}

/// Criterion 8: concentration bounds — E D_T^(2m)/T^m below
/// L_m / b_min^(2m) for m in {1, 2} at T in {50, 100} (N = 1e4);
/// E Delta_T^2/T below the bounded-integrand constant; corrector ODE
/// residual below 1e-6 on the log grid.
#[test]
fn criterion_08_concentration_inequalities() {
    let p = reference_params();
    let region = reference_region();
    let clamp = 5.0;
    let sample =
        lab::deviation_samples(&p, &[50.0, 100.0], clamp, 0.01, 10_000, 1010, true).unwrap();
    for j in 0..2 {
        for m in [1u32, 2] {
            let rep = lab::verify_d_bound(&region, &sample, j, m, 1010).unwrap();
            assert_eq!(
                rep.pass,
                Some(true),
                "D bound T = {}, m = {m}: {rep:?}",
                sample.ts[j]
            );
        }
        let rep = lab::verify_delta_bound(&region, &sample, j, 1, 1010).unwrap();
        assert_eq!(
            rep.pass,
            Some(true),
            "Delta bound T = {}: {rep:?}",
            sample.ts[j]
        );
    }
    let corrector = lab::verify_corrector(&p, clamp);
    assert!(
        corrector.max_ode_residual < 1e-6,
        "ODE residual {}",
        corrector.max_ode_residual
    );
    assert!(corrector.max_abs_y <= corrector.y_star_bound);
    println!(
        "[PASS] criterion 8: D/Delta moment bounds hold at T in {{50, 100}}; corrector residual {:.2e} < 1e-6",
        corrector.max_ode_residual
    );
}

/// Criterion 9: H* solver — fixed-point residual < 1e-10, agreement with
/// a 1e5-point grid argmin within one cell, and the asymptotic deficit
/// trend. The log-log slope window (within 15% of -0.2 for m = 2) is
/// checked at a fast-mixing point whose T in {1e3, 1e4, 1e5} sits inside
/// the asymptotic regime; at the reference point the same T window is
/// still pre-asymptotic (the conservative constants keep the deficit
/// order one), so only the monotone trend toward 1 is asserted there.
#[test]
fn criterion_09_h_star_solver() {
    let reference = reference_region();
    let fast = ParamRegion::point(85.0, 50.0, 0.4, 1.7).unwrap();

    // Residuals and grid agreement at the reference point.
    let f100 = AccuracyFn::for_b(&reference, 100.0, 2).unwrap();
    let sol100 = f100.solve().unwrap();
    assert!(sol100.residual < 1e-10, "residual {}", sol100.residual);
    let grid = f100.grid_argmin(100_000);
    assert!(
        (sol100.h - grid).abs() <= f100.grid_cell(100_000),
        "solver {} vs grid argmin {}",
        sol100.h,
        grid
    );

    // Deficit study across T in {1e3, 1e4, 1e5}.
    let deficits = |region: &ParamRegion| -> Vec<(f64, f64)> {
        [1e3, 1e4, 1e5]
            .iter()
            .map(|&t| {
                let f = AccuracyFn::for_b(region, t, 2).unwrap();
                let sol = f.solve().unwrap();
                assert!(sol.residual < 1e-10, "T = {t}: residual {}", sol.residual);
                (t, 1.0 - sol.h / (region.a_star() * t))
            })
            .collect()
    };

    // Reference point: ratio H*/(a_* T) increases toward 1.
    let ref_defs = deficits(&reference);
    assert!(
        ref_defs.windows(2).all(|w| w[1].1 < w[0].1),
        "deficits {ref_defs:?}"
    );

    // Fast-mixing point: log-log slope within 15% of -0.2.
    let fast_defs = deficits(&fast);
    let pts: Vec<(f64, f64)> = fast_defs.iter().map(|&(t, d)| (t.ln(), d.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(
        ((-slope) - 0.2).abs() <= 0.15 * 0.2,
        "log-log deficit slope {slope} outside 15% of -0.2"
    );
    println!(
        "[PASS] criterion 9: residual {:.1e}, grid agreement within one cell, deficit slope {slope:.4}",
        sol100.residual
    );
}

/// Criterion 10: observation-time saving — with the true rate at half
/// the region's worst case, the optimal truncated procedure stops near
/// T/2 (ratio in [0.45, 0.55] at T = 500) while its normalized risk
/// stays within 25% of the fixed-horizon MLE's.
#[test]
fn criterion_10_observation_time_saving() {
    // Fast-mixing point where T = 500 is inside the H* asymptotic regime
    // (at the reference parameters the conservative constants leave
    // H*/(a_* T) ~ 0.2 at this T, hiding the effect).
    let cfg = ExperimentConfig {
        procedure: Procedure::B,
        a: 68.64,
        b: 30.0,
        sigma: 0.04,
        x0: 2.288,
        a_min: None,
        a_max: None,
        b_min: Some(30.0),
        b_max: Some(60.0),
        t_horizon: 500.0,
        m: 6,
        delta: 0.25,
        varpi: 1.5,
        v_star: 1.0,
        step: 0.0015,
        replicates: 400,
        seed: 1011,
        h: None,
        stationary_start: false,
    };
    let res = cfg.resolve().unwrap();
    assert!(res.h_is_optimal);
    let cmp = compare_sequential_vs_fixed(&res).unwrap();
    let ratio = cmp.mean_stop_over_t;
    assert!(
        (0.45..=0.55).contains(&ratio),
        "mean stop / T = {ratio} outside [0.45, 0.55]"
    );
    let risk_ratio = cmp.normalized_risk_sequential / cmp.normalized_risk_fixed;
    assert!(
        (risk_ratio - 1.0).abs() <= 0.25,
        "normalized risk ratio {risk_ratio} outside 25% of the MLE's"
    );
    println!(
        "[PASS] criterion 10: mean stop/T = {ratio:.4} in [0.45, 0.55]; normalized risks seq {:.3} vs fixed {:.3}",
        cmp.normalized_risk_sequential, cmp.normalized_risk_fixed
    );
}

/// Criterion 11: determinism — identical (config, seed) produces
/// byte-identical reports, including across thread counts.
#[test]
fn criterion_11_determinism() {
    let cfg = base_config(Procedure::B, 50.0, 2, 500, 1012);
    let res = cfg.resolve().unwrap();
    let r1 = to_json(&run_experiment(&res).unwrap());
    let r2 = to_json(&run_experiment(&res).unwrap());
    assert_eq!(r1, r2, "re-run with the same seed differed");
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .unwrap();
    let r3 = single.install(|| to_json(&run_experiment(&res).unwrap()));
    let r4 = many.install(|| to_json(&run_experiment(&res).unwrap()));
    assert_eq!(r3, r4, "reports differ across parallelism levels");
    assert_eq!(r1, r3);
    // A different seed must change the report.
    let mut other = cfg;
    other.seed = 1013;
    let r5 = to_json(&run_experiment(&other.resolve().unwrap()).unwrap());
    assert_ne!(r1, r5);
    println!("[PASS] criterion 11: byte-identical reports across re-runs and thread counts");
}

/// Companion to criterion 10: with the true rate AT the worst case
/// (theta = b_max), the optimal truncated procedure uses almost the full
/// budget (mean stop/T near 1) with normalized risk comparable to the
/// fixed-horizon MLE — no time to save, none saved.
#[test]
fn worst_case_theta_uses_full_budget() {
    let cfg = ExperimentConfig {
        procedure: Procedure::B,
        a: 68.64,
        b: 60.0,
        sigma: 0.04,
        x0: 1.144,
        a_min: None,
        a_max: None,
        b_min: Some(30.0),
        b_max: Some(60.0),
        t_horizon: 500.0,
        m: 6,
        delta: 0.25,
        varpi: 1.5,
        v_star: 1.0,
        step: 0.0015,
        replicates: 250,
        seed: 1016,
        h: None,
        stationary_start: false,
    };
    let res = cfg.resolve().unwrap();
    let cmp = compare_sequential_vs_fixed(&res).unwrap();
    assert!(
        (0.85..1.0).contains(&cmp.mean_stop_over_t),
        "mean stop/T = {}",
        cmp.mean_stop_over_t
    );
    let risk_ratio = cmp.normalized_risk_sequential / cmp.normalized_risk_fixed;
    assert!((risk_ratio - 1.0).abs() <= 0.25, "risk ratio {risk_ratio}");
    println!(
        "[PASS] worst-case theta: mean stop/T = {:.3}, risk ratio {risk_ratio:.3}",
        cmp.mean_stop_over_t
    );
}

/// Companion check to criterion 4/5: the closed tail bounds also hold
/// for the tail-report harness (criterion text folds these into the
/// bound checks; kept separate for visibility).
#[test]
fn stopping_tail_reports_pass() {
    for (procedure, t, m, seed) in [
        (Procedure::B, 100.0, 2, 1014u64),
        (Procedure::A, 200.0, 3, 1015),
    ] {
        let cfg = base_config(procedure, t, m, 3000, seed);
        let res = cfg.resolve().unwrap();
        let rep = lab::stopping_tail_report(&res).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
    println!("[PASS] stopping tails: empirical truncation frequency within closed bounds");
}
