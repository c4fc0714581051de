//! Acceptance suite: one test per criterion, each printing a PASS line and
//! enforcing its runtime budget. Run with `cargo test --test acceptance`
//! (add `-- --nocapture` to see the lines).

use qverif::analysis::{
    adaptive_region_deltas, chernoff_delta, copies_for_confidence, epsilon_at, fit_exp_decay,
    fit_loglog_slope, kl_divergence, Region, Side, TaskAResult,
};
use qverif::config::{ExperimentConfig, Task};
use qverif::device::{DeviceKind, DeviceModel, Simulator, TaskAOutcome};
use qverif::experiments::{
    linear_region_slope, run_experiment, simulated_epsilon_curve, LINEAR_REGION_EPS_CAP,
};
use qverif::linalg::{herm_eigen, projector, trace_product, C64, DensityMatrix, HermMat4};
use qverif::state::{Frame, TargetParams};
use qverif::strategy::{
    required_copies, BellVariant, Strategy, StrategyFamily,
};
use qverif::tomography::{bootstrap_df, fidelity_linear, simulate_tomography, tomo_confidence, Assertion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

const K2_THETA: f64 = 0.6419;
const K2_PHI: f64 = 3.2034;

fn k2_params() -> TargetParams {
    TargetParams::new(K2_THETA, K2_PHI).unwrap()
}

fn k2_nonadaptive() -> Strategy {
    Strategy::nonadaptive(k2_params(), Frame::Experimental).unwrap()
}

fn k2_adaptive() -> Strategy {
    Strategy::adaptive(k2_params(), Frame::Experimental).unwrap()
}

/// Device whose exact pass rate under `strategy` is `rate` (diagonal, and
/// for the adaptive family a calibrated EOM flip on top of F = 0.9964).
fn device_with_pass_rate(strategy: &Strategy, rate: f64) -> DeviceModel {
    match strategy.family() {
        StrategyFamily::Adaptive => {
            let base = DeviceModel::from_fidelity(0.9964);
            let sim = Simulator::new(strategy.clone(), &base).unwrap();
            let flip = 1.0 - rate / sim.expected_pass_rate();
            base.with_eom_flip(flip)
        }
        _ => {
            let lambda2 = strategy.spectrum().lambda2;
            DeviceModel::from_fidelity(1.0 - (1.0 - rate) / (1.0 - lambda2))
        }
    }
}

fn random_density(rng: &mut impl Rng) -> DensityMatrix {
    let mut g = [[C64::new(0.0, 0.0); 4]; 4];
    for row in &mut g {
        for e in row.iter_mut() {
            *e = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let mut raw = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..4 {
                acc += g[i][k] * g[j][k].conj();
            }
            raw[i][j] = acc;
        }
    }
    let tr: f64 = (0..4).map(|i| raw[i][i].re).sum();
    for row in &mut raw {
        for e in row.iter_mut() {
            *e /= tr;
        }
    }
    DensityMatrix::new(HermMat4::new(raw).unwrap()).unwrap()
}

fn finish(criterion: u32, start: Instant, budget: Duration, detail: &str) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion}: runtime {elapsed:?} over budget {budget:?}"
    );
    println!("criterion {criterion}: PASS ({elapsed:.2?}) — {detail}");
}

#[test]
fn criterion_1_spectral_formulas() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..100 {
        let theta = rng.random_range(1e-3..std::f64::consts::FRAC_PI_4 - 1e-3);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let p = TargetParams::new(theta, phi).unwrap();
        let s2 = (2.0 * theta).sin();
        let c2 = theta.cos().powi(2);

        let non = Strategy::nonadaptive(p, Frame::Experimental).unwrap();
        let e = herm_eigen(&non.omega());
        assert!((e.values[1] - (2.0 + s2) / (4.0 + s2)).abs() < 1e-10);

        let adp = Strategy::adaptive(p, Frame::Experimental).unwrap();
        let e = herm_eigen(&adp.omega());
        assert!((e.values[1] - c2 / (1.0 + c2)).abs() < 1e-10);
        assert!((e.values[3] - (1.0 - c2) / (1.0 + c2)).abs() < 1e-10);
    }
    for variant in [BellVariant::PhiPlus, BellVariant::PhiMinus] {
        let e = herm_eigen(&Strategy::bell(variant).omega());
        for i in 1..4 {
            assert!((e.values[i] - 1.0 / 3.0).abs() < 1e-12);
        }
    }
    finish(1, start, Duration::from_secs(1), "numeric spectra match closed forms at 1e-10");
}

#[test]
fn criterion_2_closed_form_pass_probability() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let strategies = [
        k2_nonadaptive(),
        k2_adaptive(),
        Strategy::bell(BellVariant::PhiMinus),
        Strategy::product(),
    ];
    let n = 1_000_000u64;
    for strategy in strategies {
        for d in 0..10 {
            // half random diagonal mixtures, half full random densities
            let model = if d % 2 == 0 {
                let mut w = [0.0; 4];
                // keep some weight on the target so rates stay near physical ones
                w[0] = rng.random_range(0.5..1.0);
                let mut rest: f64 = 1.0 - w[0];
                for slot in 1..3 {
                    w[slot] = rng.random_range(0.0..rest);
                    rest -= w[slot];
                }
                w[3] = rest;
                DeviceModel::new(DeviceKind::DiagonalMixture(w))
            } else {
                DeviceModel::new(DeviceKind::Explicit(*random_density(&mut rng).matrix()))
            };
            let sim = Simulator::new(strategy.clone(), &model).unwrap();
            let expect = sim.expected_pass_rate();
            // closed form agrees with the assembled operator
            assert!(
                (expect - trace_product(&strategy.omega(), sim.sigma().matrix())).abs() < 1e-10
            );
            let m = sim.run_task_b(&mut rng, n);
            let tol = 4.0 * (expect * (1.0 - expect) / n as f64).sqrt();
            assert!(
                (m as f64 / n as f64 - expect).abs() < tol,
                "{:?} device {d}: rate {} vs closed form {expect}",
                strategy.family(),
                m as f64 / n as f64
            );
        }
    }
    finish(2, start, Duration::from_secs(30), "1e6-copy Monte Carlo matches closed forms (4σ)");
}

#[test]
fn criterion_3_task_a_reproduction() {
    let start = Instant::now();
    let strategy = k2_nonadaptive();
    let spectrum = *strategy.spectrum();
    let sim = Simulator::new(strategy, &DeviceModel::from_fidelity(0.9966)).unwrap();

    let rounds = 10_000u64;
    let max_copies = 6_000u64;
    let outcomes: Vec<TaskAOutcome> = (0..rounds)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(303);
            rng.set_stream(r);
            sim.run_task_a(&mut rng, max_copies)
        })
        .collect();
    let result = TaskAResult::analyze(&outcomes, max_copies, &spectrum, 0.99).unwrap();

    // MLE recovers ε = 0.0034 within 2 standard errors
    assert!(
        (result.fit.epsilon_hat - 0.0034).abs() < 2.0 * result.fit.epsilon_se,
        "ε̂ = {} ± {}",
        result.fit.epsilon_hat,
        result.fit.epsilon_se
    );

    // analytic n for 99% confidence: exact form lands within the spec's
    // first-order 3358 (±5 covers the exact-vs-approx rounding)
    let n99 = copies_for_confidence(
        qverif::strategy::failure_probability(&spectrum, 0.0034),
        0.99,
    );
    assert!((n99 as i64 - 3358).unsigned_abs() <= 5, "analytic n99 = {n99}");
    assert_eq!(required_copies(0.0034, 0.01, &spectrum).unwrap(), n99);

    // MLE-based copy count sits within 4 propagated standard errors of 3358
    let sigma_n = n99 as f64 * result.fit.delta_eps_se / result.fit.delta_eps_hat;
    assert!(
        (result.n_for_confidence as f64 - 3358.0).abs() < 4.0 * sigma_n,
        "MLE n99 = {} (σ_n = {sigma_n:.1})",
        result.n_for_confidence
    );

    // paper's experimental 3283 lies within 5% of the analytic value
    assert!((3283.0 - n99 as f64).abs() / n99 as f64 <= 0.05);

    // adaptive analog: analytic 625 (first-order; exact 623) vs paper 536
    let adp = k2_adaptive();
    let n_adp = required_copies(0.0121, 0.01, adp.spectrum()).unwrap();
    assert!((n_adp as i64 - 625).unsigned_abs() <= 5, "adaptive analytic = {n_adp}");
    assert!((536.0 - n_adp as f64).abs() / n_adp as f64 <= 0.25);

    finish(
        3,
        start,
        Duration::from_secs(120),
        &format!(
            "ε̂ = {:.4e} ± {:.1e}, n99 = {} (analytic {n99}), adaptive {n_adp}",
            result.fit.epsilon_hat, result.fit.epsilon_se, result.n_for_confidence
        ),
    );
}

#[test]
fn criterion_4_task_b_nonadaptive_copy_counts() {
    let start = Instant::now();
    let strategy = k2_nonadaptive();
    let spectrum = *strategy.spectrum();
    let rate = 0.9986;
    let ln100 = 100f64.ln();

    let mu_min = 1.0 - spectrum.delta_eps_coefficient() * 0.001;
    let n_case2 = (ln100 / kl_divergence(rate, mu_min)).ceil() as u64;
    assert!((n_case2 as f64 - 6159.0).abs() / 6159.0 < 0.01, "case-2 N = {n_case2}");
    assert!((6000.0 - n_case2 as f64).abs() / n_case2 as f64 <= 0.05);

    let mu_max = 1.0 - spectrum.delta_eps_coefficient() * 0.006;
    let n_case1 = (ln100 / kl_divergence(rate, mu_max)).ceil() as u64;
    assert!((n_case1 as f64 - 18138.0).abs() / 18138.0 < 0.01, "case-1 N = {n_case1}");
    assert!((17905.0 - n_case1 as f64).abs() / n_case1 as f64 <= 0.03);

    // simulated confirmation: a device calibrated to this pass rate
    // reproduces it within 4σ of the 100-round mean at both copy counts,
    // and the analytic δ at the true rate hits the 0.01 target
    let model = device_with_pass_rate(&strategy, rate);
    let sim = Simulator::new(strategy, &model).unwrap();
    assert!((sim.expected_pass_rate() - rate).abs() < 1e-12);
    for (n, mu, delta_expect) in [(n_case2, mu_min, 0.01), (n_case1, mu_max, 0.01)] {
        let rounds = 100u64;
        let mut total = 0u64;
        for r in 0..rounds {
            let mut rng = ChaCha8Rng::seed_from_u64(404);
            rng.set_stream(n * 1000 + r);
            total += sim.run_task_b(&mut rng, n);
        }
        let mean_rate = total as f64 / (rounds * n) as f64;
        let sigma_mean = (rate * (1.0 - rate) / (rounds * n) as f64).sqrt();
        assert!(
            (mean_rate - rate).abs() < 4.0 * sigma_mean,
            "mean rate {mean_rate} at N = {n}"
        );
        let delta_true = (-(n as f64) * kl_divergence(rate, mu)).exp();
        assert!((delta_true - delta_expect).abs() < 5e-4, "δ(N={n}) = {delta_true}");
        let (delta_emp, _) = chernoff_delta(total / rounds, n, mu);
        assert!(delta_emp > 0.0 && delta_emp < 0.15, "empirical δ = {delta_emp}");
    }

    finish(
        4,
        start,
        Duration::from_secs(120),
        &format!("N(δ=0.01): case-2 {n_case2}, case-1 {n_case1}"),
    );
}

#[test]
fn criterion_5_task_b_adaptive_copy_counts() {
    let start = Instant::now();
    let strategy = k2_adaptive();
    let spectrum = *strategy.spectrum();
    let rate = 0.9914;
    let ln100 = 100f64.ln();
    let (eps_min, eps_max) = (0.008, 0.017);

    let mu_s = 1.0 - (1.0 - spectrum.lambda4) * eps_min;
    let mu_l = 1.0 - (1.0 - spectrum.lambda2) * eps_max;
    let n_s = (ln100 / kl_divergence(rate, mu_s)).ceil() as u64;
    let n_l = (ln100 / kl_divergence(rate, mu_l)).ceil() as u64;
    assert!((n_s as f64 - 11629.0).abs() / 11629.0 < 0.01, "δ_s N = {n_s}");
    assert!((n_l as f64 - 28963.0).abs() / 28963.0 < 0.01, "δ_l N = {n_l}");
    // paper values within 25% (unpublished per-run pass rates)
    assert!((10429.0 - n_s as f64).abs() / n_s as f64 <= 0.25);
    assert!((23645.0 - n_l as f64).abs() / n_l as f64 <= 0.25);

    // both regions valid simultaneously at the observed rate
    let deltas =
        adaptive_region_deltas((rate * 1e6) as u64, 1_000_000, &spectrum, eps_min, eps_max)
            .unwrap();
    assert_eq!(deltas.region, Region::Both);

    // simulated stream confirmation at both copy counts
    let model = device_with_pass_rate(&strategy, rate);
    let sim = Simulator::new(strategy, &model).unwrap();
    assert!((sim.expected_pass_rate() - rate).abs() < 1e-12);
    for n in [n_s, n_l] {
        let rounds = 100u64;
        let mut total = 0u64;
        for r in 0..rounds {
            let mut rng = ChaCha8Rng::seed_from_u64(505);
            rng.set_stream(n * 1000 + r);
            total += sim.run_task_b(&mut rng, n);
        }
        let mean_rate = total as f64 / (rounds * n) as f64;
        let sigma_mean = (rate * (1.0 - rate) / (rounds * n) as f64).sqrt();
        assert!(
            (mean_rate - rate).abs() < 4.0 * sigma_mean,
            "mean rate {mean_rate} at N = {n}"
        );
    }

    finish(
        5,
        start,
        Duration::from_secs(120),
        &format!("N(δ=0.01): small {n_s}, large {n_l}"),
    );
}

#[test]
fn criterion_6_scaling_slopes() {
    let start = Instant::now();
    let cases = [
        ("nonadaptive 0.9986", k2_nonadaptive(), 0.9986, -0.93, -0.83),
        ("adaptive 0.9914", k2_adaptive(), 0.9914, -0.85, -0.71),
        ("product 0.9992", Strategy::product(), 0.9992, -1.08, -0.90),
    ];
    let mut report = String::new();
    for (label, strategy, rate, lo, hi) in cases {
        let model = match strategy.family() {
            // the product strategy's pass rate is the fidelity itself
            StrategyFamily::Product => DeviceModel::from_fidelity(0.9992),
            _ => device_with_pass_rate(&strategy, rate),
        };
        let sim = Simulator::new(strategy, &model).unwrap();
        let points = simulated_epsilon_curve(&sim, 606, 100, 100, 0.10, Side::Large);
        let (slope, se) =
            linear_region_slope(&points, (1.0, 100.0), LINEAR_REGION_EPS_CAP).unwrap();
        assert!(
            (lo..=hi).contains(&slope),
            "{label}: slope {slope:.4} ± {se:.4} outside [{lo}, {hi}]"
        );
        report.push_str(&format!("{label}: {slope:.3}; "));
    }

    // synthetic pure power-law control
    let pts: Vec<(f64, f64)> = (1..=100).map(|n| (n as f64, 2.0 / n as f64)).collect();
    let (slope, _) = fit_loglog_slope(&pts, (1.0, 100.0)).unwrap();
    assert!((slope + 1.0).abs() <= 0.01, "control slope {slope}");

    finish(6, start, Duration::from_secs(120), report.trim_end_matches("; "));
}

#[test]
fn criterion_7_asymptotes() {
    let start = Instant::now();
    let cases = [
        ("k2", *k2_nonadaptive().spectrum(), 0.9986, 0.0036, 0.0002),
        ("Max", *Strategy::bell(BellVariant::PhiMinus).spectrum(), 0.9982, 0.0027, 0.0002),
        ("HV", *Strategy::product().spectrum(), 0.9992, 0.0008, 0.0001),
    ];
    let mut report = String::new();
    for (label, spectrum, rate, paper, bar) in cases {
        let analytic = (1.0 - rate) / (1.0 - spectrum.lambda2);
        let solved = epsilon_at(1_000_000_000, rate, 0.10, &spectrum, Side::Large).unwrap();
        assert!((solved - analytic).abs() < 1e-5, "{label}: {solved} vs {analytic}");
        assert!(
            (solved - paper).abs() <= bar,
            "{label}: asymptote {solved:.5} outside paper {paper} ± {bar}"
        );
        report.push_str(&format!("{label}: {solved:.5}; "));
    }
    finish(7, start, Duration::from_secs(10), report.trim_end_matches("; "));
}

#[test]
fn criterion_8_tomography_comparison() {
    let start = Instant::now();
    let strategy = k2_nonadaptive();
    let spectrum = *strategy.spectrum();
    // the k2 device of Table S1
    let model = DeviceModel::from_fidelity(0.9964);
    let sim = Simulator::new(strategy.clone(), &model).unwrap();
    let sigma = *sim.sigma();
    let target = *strategy.target();
    let rate_true = sim.expected_pass_rate();
    let eps_min = 0.001;
    let mu = 1.0 - spectrum.delta_eps_coefficient() * eps_min;

    let grid: Vec<u64> = (0..10)
        .map(|i| (1000f64 * (100f64).powf(i as f64 / 9.0)).round() as u64)
        .collect();
    let rounds = 100u64;

    let mut dt_curve = Vec::new();
    let mut dv_curve = Vec::new();
    let mut eps_tomo_stats = Vec::new(); // (n, mean, se)
    let mut eps_verif_curve = Vec::new();
    for (gi, &n) in grid.iter().enumerate() {
        let mut ln_dt = 0.0;
        let mut ln_dv = 0.0;
        let mut eps_t = Vec::new();
        let mut eps_v = Vec::new();
        for r in 0..rounds {
            let mut rng = ChaCha8Rng::seed_from_u64(808);
            rng.set_stream((gi as u64 * rounds + r) * 2);
            let data = simulate_tomography(&sigma, n, &mut rng).unwrap();
            let f = fidelity_linear(&data, &target).unwrap();
            let df = bootstrap_df(&data, &target, 100, &mut rng).unwrap();
            ln_dt += tomo_confidence(f, df, eps_min, Assertion::Bad).max(1e-300).ln();
            eps_t.push(1.0 - f);

            let mut rng = ChaCha8Rng::seed_from_u64(808);
            rng.set_stream((gi as u64 * rounds + r) * 2 + 1);
            let m = sim.run_task_b(&mut rng, n);
            let rate = m as f64 / n as f64;
            ln_dv += -(n as f64) * kl_divergence(rate, mu);
            if let Ok(e) = epsilon_at(n, rate, 0.10, &spectrum, Side::Large) {
                eps_v.push(e);
            }
        }
        let rf = rounds as f64;
        dt_curve.push((n as f64, (ln_dt / rf).exp()));
        dv_curve.push((n as f64, (ln_dv / rf).exp()));
        let mean_t = eps_t.iter().sum::<f64>() / rf;
        let var_t = eps_t.iter().map(|e| (e - mean_t).powi(2)).sum::<f64>() / (rf - 1.0);
        eps_tomo_stats.push((n, mean_t, (var_t / rf).sqrt()));
        if !eps_v.is_empty() {
            eps_verif_curve.push((n, eps_v.iter().sum::<f64>() / eps_v.len() as f64));
        }
    }

    let g_tomo = fit_exp_decay(&dt_curve).unwrap();
    let g_verif = fit_exp_decay(&dv_curve).unwrap();
    let ratio = (g_verif / g_tomo).abs();
    assert!(g_verif < 0.0 && g_tomo < 0.0, "g_verif {g_verif}, g_tomo {g_tomo}");
    assert!(ratio >= 5.0, "|g_verif/g_tomo| = {ratio:.2}");
    // the verification exponent matches the Chernoff prediction
    let d_pred = kl_divergence(rate_true, mu);
    assert!((g_verif.abs() - d_pred).abs() / d_pred < 0.25, "g_verif {g_verif} vs −D {d_pred}");

    // ε_tomo saturates at the true infidelity over the top decade while
    // ε_verif keeps falling
    let true_eps = 1.0 - 0.9964;
    for &(n, mean, se) in &eps_tomo_stats[eps_tomo_stats.len() - 4..] {
        assert!(
            (mean - true_eps).abs() < 4.0 * se + 1e-4,
            "ε_tomo (N={n}) = {mean:.5} ± {se:.5} not at {true_eps}"
        );
    }
    let (n_a, eps_a) = eps_verif_curve[eps_verif_curve.len() - 5];
    let (n_b, eps_b) = *eps_verif_curve.last().unwrap();
    assert!(n_b >= 7 * n_a, "grid spacing {n_a} → {n_b}");
    assert!(eps_b < 0.85 * eps_a, "ε_verif {eps_a:.5} (N={n_a}) → {eps_b:.5} (N={n_b})");
    assert!(eps_b > true_eps, "verification curve still above the true infidelity");

    finish(
        8,
        start,
        Duration::from_secs(300),
        &format!("|g_verif/g_tomo| = {ratio:.1}, ε_tomo saturated at {true_eps:.4}"),
    );
}

#[test]
fn criterion_9_property_suites_and_determinism() {
    let start = Instant::now();

    // 100-instance seeded sweep of the cross-module invariants
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let non = k2_nonadaptive();
    let adp = k2_adaptive();
    let omega_n = non.omega();
    let omega_a = adp.omega();
    for _ in 0..100 {
        let sigma = random_density(&mut rng);
        // closed forms equal operator traces
        assert!((non.pass_probability(&sigma) - trace_product(&omega_n, sigma.matrix())).abs() < 1e-10);
        assert!((adp.pass_probability(&sigma) - trace_product(&omega_a, sigma.matrix())).abs() < 1e-10);
        // Lemma bounds at ε = 1 − F
        let f = sigma.fidelity(&non.basis().psi);
        let eps = 1.0 - f;
        assert!(trace_product(&omega_n, sigma.matrix()) <= 1.0 - (1.0 - non.spectrum().lambda2) * eps + 1e-10);
        assert!(trace_product(&omega_a, sigma.matrix()) >= 1.0 - (1.0 - adp.spectrum().lambda4) * eps - 1e-10);
        // spectral reconstruction
        let e = herm_eigen(sigma.matrix());
        assert!(e.reconstruct().max_dev(sigma.matrix()) < 1e-10);
        let mut resolution = HermMat4::zero();
        for v in &e.vectors {
            resolution = &resolution + &projector(v);
        }
        assert!(resolution.max_dev(&HermMat4::identity()) < 1e-10);
    }

    // byte-identical CSV artifacts across reruns and worker counts
    let mut cfg = ExperimentConfig::default();
    cfg.run.task = Task::TaskB;
    cfg.run.rounds = Some(20);
    cfg.run.n_copies = Some(3000);
    cfg.run.records = true;
    cfg.device.fidelity = Some(0.9964);
    cfg.analysis.eps_min = 0.001;
    cfg.analysis.eps_max = 0.006;

    let run_with_threads = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| run_experiment(&cfg).unwrap())
    };
    let single = run_with_threads(1);
    let multi = run_with_threads(4);
    let again = run_with_threads(1);
    assert_eq!(single.files, multi.files, "worker count changed the bytes");
    assert_eq!(single.files, again.files, "rerun changed the bytes");
    assert_eq!(single.summary, multi.summary);

    finish(9, start, Duration::from_secs(120), "invariant sweep + byte-identical reruns");
}
