//! End-to-end acceptance suite. Each test prints one `ACCEPTANCE n: PASS`
//! line (visible with `--nocapture`); a failing assertion carries the full
//! offending cell. Everything runs from fixed seeds, so the suite is
//! reproducible run to run on one platform.

use gppcov::analytic::{
    asymptotic_c1, coverage_analytic, coverage_analytic_verified, gamma_bound_check, ModelParams,
};
use gppcov::quadrature::NumericsPolicy;
use gppcov::simulator::{coverage_mc, sample_gpp_radii, stop_loss_curve, Method, PointModel};
use gppcov::specfun::gamma_fn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 12345;
const DB_GRID: [f64; 7] = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

fn lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn policy() -> NumericsPolicy {
    NumericsPolicy::default()
}

/// 1: the deterministic integral and the conditional Monte Carlo estimator
/// agree on the full (m, beta, theta) desk grid.
#[test]
fn acceptance_1_analytic_vs_monte_carlo_grid() {
    let policy = policy();
    for m in [1u32, 2, 3] {
        for beta in [1.25, 2.0] {
            for db in DB_GRID {
                let p = ModelParams { m, beta, theta: lin(db) };
                let det = coverage_analytic(&p, &policy).unwrap();
                let mc = coverage_mc(PointModel::Gpp, &p, Method::McFullMarg, 100_000, 512, SEED)
                    .unwrap();
                let diff = (det.value - mc.value).abs();
                let tol = (3.0 * mc.stderr).max(5e-3);
                assert!(
                    diff <= tol,
                    "m={m} beta={beta} theta_db={db}: |{:.7} - {:.7}| = {diff:.3e} > {tol:.3e}",
                    det.value,
                    mc.value
                );
            }
        }
    }
    println!("ACCEPTANCE 1: PASS (analytic vs conditional Monte Carlo on 42 cells)");
}

/// 2: the generic partition-based assembler reproduces the hand-coded
/// m = 2 and m = 3 expansions to near machine precision.
#[test]
fn acceptance_2_generic_assembler_matches_hand_coded_expansions() {
    let policy = policy();
    let mut worst = 0.0f64;
    for m in [2u32, 3] {
        for beta in [1.25, 1.5, 2.0, 2.5, 3.0] {
            for theta in [0.25, 0.5, 1.0, 2.0, 4.0] {
                let v = coverage_analytic_verified(&ModelParams { m, beta, theta }, &policy)
                    .unwrap();
                assert!(
                    v.max_rel_deviation <= 1e-9,
                    "m={m} beta={beta} theta={theta}: rel deviation {:.3e}",
                    v.max_rel_deviation
                );
                worst = worst.max(v.max_rel_deviation);
            }
        }
    }
    println!("ACCEPTANCE 2: PASS (expansion regression, worst rel deviation {worst:.2e})");
}

/// 3: vanishing threshold drives coverage to one; coverage is nonincreasing
/// in the threshold; values stay inside [0, 1] up to the reported error.
#[test]
fn acceptance_3_limits_and_monotonicity() {
    let policy = policy();
    for m in [1u32, 2, 3] {
        let tiny = coverage_analytic(&ModelParams { m, beta: 2.0, theta: 1e-6 }, &policy).unwrap();
        assert!(tiny.value >= 0.999, "m={m}: coverage at theta=1e-6 is {}", tiny.value);
    }
    for m in [1u32, 2, 3] {
        for beta in [1.25, 2.0] {
            let mut prev = f64::INFINITY;
            for db in DB_GRID {
                let est =
                    coverage_analytic(&ModelParams { m, beta, theta: lin(db) }, &policy).unwrap();
                let eps = est.stderr;
                assert!(
                    est.value >= -10.0 * eps && est.value <= 1.0 + 10.0 * eps,
                    "m={m} beta={beta} theta_db={db}: value {} outside [0,1] by > 10 eps",
                    est.value
                );
                assert!(
                    est.value <= prev + 10.0 * eps,
                    "m={m} beta={beta} theta_db={db}: coverage rose from {prev} to {}",
                    est.value
                );
                prev = est.value;
            }
        }
    }
    println!("ACCEPTANCE 3: PASS (theta -> 0 limit, monotonicity, range)");
}

/// 4: the repulsive deployment dominates the Poisson one across the grid.
#[test]
fn acceptance_4_ginibre_dominates_poisson() {
    let mut positive = 0usize;
    let mut total = 0usize;
    for m in [1u32, 2] {
        for beta in [1.25, 2.0] {
            for db in DB_GRID {
                let p = ModelParams { m, beta, theta: lin(db) };
                let g = coverage_mc(PointModel::Gpp, &p, Method::McFullMarg, 100_000, 512, SEED)
                    .unwrap();
                let q = coverage_mc(PointModel::Ppp, &p, Method::McFullMarg, 100_000, 512, SEED)
                    .unwrap();
                let diff = g.value - q.value;
                let sigma = (g.stderr * g.stderr + q.stderr * q.stderr).sqrt();
                assert!(
                    diff > -3.0 * sigma,
                    "m={m} beta={beta} theta_db={db}: Ginibre {} below Poisson {} by > 3 sigma",
                    g.value,
                    q.value
                );
                total += 1;
                if diff > 0.0 {
                    positive += 1;
                }
            }
        }
    }
    assert!(
        positive * 10 >= total * 9,
        "Ginibre strictly ahead at only {positive}/{total} grid points"
    );
    println!("ACCEPTANCE 4: PASS (Ginibre ahead at {positive}/{total} grid points)");
}

/// 5: the two tail constants satisfy the Gamma-factor inequality, and the
/// Gamma function itself is right where its minimum is.
#[test]
fn acceptance_5_gamma_factor_bound() {
    let policy = policy();
    for beta in [1.25, 2.0] {
        let r = gamma_bound_check(beta, &policy, 2_000, SEED).unwrap();
        assert!(
            r.holds,
            "beta={beta}: c1 {} < Gamma(1+1/beta) * (cinf {} - 3 stderr {})",
            r.c1, r.cinf, r.cinf_stderr
        );
    }
    let g = gamma_fn(1.4616321449);
    assert!(
        (g - 0.8856031944).abs() <= 1e-9,
        "Gamma at its minimum: {g}"
    );
    println!("ACCEPTANCE 5: PASS (tail-constant bound at beta 1.25 and 2, Gamma minimum)");
}

/// 6: at a 40 dB threshold the scaled coverage has converged to within 10%
/// of its limit constant.
#[test]
fn acceptance_6_tail_scaling() {
    let policy = policy();
    let theta = lin(40.0);
    let cov = coverage_analytic(&ModelParams { m: 1, beta: 2.0, theta }, &policy).unwrap();
    let scaled = theta.sqrt() * cov.value;
    let c1 = asymptotic_c1(2.0, &policy).unwrap();
    let rel = (scaled / c1 - 1.0).abs();
    assert!(rel <= 0.10, "scaled coverage {scaled:.6} vs limit {c1:.6}: off by {rel:.3}");
    println!("ACCEPTANCE 6: PASS (scaled 40 dB coverage within {:.1}% of the limit)", rel * 100.0);
}

/// 7: the three Monte Carlo estimators agree pairwise and their standard
/// errors decrease as more fading is integrated out.
#[test]
fn acceptance_7_estimator_consistency_and_variance_ordering() {
    let p = ModelParams { m: 2, beta: 2.0, theta: 1.0 };
    let n = 100_000;
    let raw = coverage_mc(PointModel::Gpp, &p, Method::McRaw, n, 512, SEED).unwrap();
    let serving = coverage_mc(PointModel::Gpp, &p, Method::McServingMarg, n, 512, SEED).unwrap();
    let full = coverage_mc(PointModel::Gpp, &p, Method::McFullMarg, n, 512, SEED).unwrap();
    for (name, a, b) in [
        ("raw vs serving", &raw, &serving),
        ("raw vs full", &raw, &full),
        ("serving vs full", &serving, &full),
    ] {
        let sigma = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        assert!(
            (a.value - b.value).abs() <= 3.0 * sigma,
            "{name}: {} vs {} beyond 3 sigma {sigma:.2e}",
            a.value,
            b.value
        );
    }
    assert!(
        full.stderr <= 1.2 * serving.stderr && serving.stderr <= 1.2 * raw.stderr,
        "variance ordering violated: raw {:.3e}, serving {:.3e}, full {:.3e}",
        raw.stderr,
        serving.stderr,
        full.stderr
    );
    println!("ACCEPTANCE 7: PASS (pairwise agreement and variance ordering at n = {n})");
}

/// 8: conditional on each of 50 fixed configurations, the stop-loss curve
/// under heavier fading dominates the one under milder fading.
#[test]
fn acceptance_8_stop_loss_order_in_fading_shape() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let a_grid: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
    for cfg in 0..50 {
        let radii = sample_gpp_radii(128, &mut rng).unwrap();
        let heavy = stop_loss_curve(&radii, 1, 2.0, &a_grid, 4_000, SEED).unwrap();
        let light = stop_loss_curve(&radii, 4, 2.0, &a_grid, 4_000, SEED).unwrap();
        for (h, l) in heavy.iter().zip(&light) {
            let sigma = (h.stderr * h.stderr + l.stderr * l.stderr).sqrt();
            assert!(
                h.estimate - l.estimate >= -3.0 * sigma,
                "config {cfg}, a={}: m=1 stop-loss {} below m=4 {} by > 3 sigma",
                h.a,
                h.estimate,
                l.estimate
            );
        }
    }
    println!("ACCEPTANCE 8: PASS (stop-loss dominance on 50 configurations)");
}

/// 9: at a moderate threshold, coverage is nondecreasing in the fading
/// shape m.
#[test]
fn acceptance_9_coverage_nondecreasing_in_m() {
    let policy = policy();
    let mut prev: Option<(f64, f64)> = None;
    for m in [1u32, 2, 3] {
        let est = coverage_analytic(&ModelParams { m, beta: 2.0, theta: 1.0 }, &policy).unwrap();
        if let Some((pv, pe)) = prev {
            assert!(
                est.value >= pv - 2.0 * (pe + est.stderr),
                "coverage fell from {pv} to {} at m={m}",
                est.value
            );
        }
        prev = Some((est.value, est.stderr));
    }
    println!("ACCEPTANCE 9: PASS (coverage nondecreasing across m = 1, 2, 3)");
}
