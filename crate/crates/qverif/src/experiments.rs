//! End-to-end experiment drivers: each produces CSV artifacts (returned as
//! in-memory strings, written to disk by the CLI) plus a human-readable
//! summary.
//!
//! Reproducibility: every Monte Carlo round draws from its own ChaCha stream
//! derived from (seed, stream index), rounds are fanned out with rayon, and
//! aggregation runs in fixed round order — so output bytes depend only on the
//! config, never on the worker count.

use crate::analysis::{
    epsilon_at, fit_exp_decay, fit_loglog_slope, kl_divergence, Side, TaskAResult, TaskBResult,
};
use crate::config::{ExperimentConfig, Task};
use crate::device::{Simulator, TaskAOutcome};
use crate::error::Result;
use crate::strategy::{Strategy, StrategyFamily, Test};
use crate::tomography::{bootstrap_df, fidelity_linear, simulate_tomography, Assertion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::fmt::Write as _;

/// In-memory experiment artifacts: (file name, contents) pairs and a summary.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

/// Points where the scaling fit treats the curve as linear: the log-log
/// curve flattens toward ε ~ 1, so the head above this value is excluded
/// (mirrors fitting only the linear scaling region).
pub const LINEAR_REGION_EPS_CAP: f64 = 0.5;

/// Run the configured experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.run.task {
        Task::StrategyInfo => strategy_info(cfg),
        Task::TaskA => task_a(cfg),
        Task::TaskB => task_b(cfg),
        Task::Scaling => scaling(cfg),
        Task::TomoCompare => tomo_compare(cfg),
    }
}

fn build_strategy(cfg: &ExperimentConfig) -> Result<Strategy> {
    let params = cfg.validate()?;
    Strategy::for_family(cfg.strategy.family, params, cfg.target.frame)
}

fn round_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn fmt(x: f64) -> String {
    format!("{x:.10e}")
}

/// Geometrically spaced integer grid, deduplicated, endpoints included.
fn log_grid(lo: u64, hi: u64, points: usize) -> Vec<u64> {
    if hi <= lo || points < 2 {
        return vec![lo.max(1)];
    }
    let (a, b) = ((lo.max(1) as f64).ln(), (hi as f64).ln());
    let mut grid: Vec<u64> = (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            (a + t * (b - a)).exp().round() as u64
        })
        .collect();
    grid.dedup();
    grid
}

// ---------------------------------------------------------------------------
// strategy-info
// ---------------------------------------------------------------------------

fn strategy_info(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let strategy = build_strategy(cfg)?;
    let sp = strategy.spectrum();
    let mut s = String::new();
    writeln!(
        s,
        "strategy {:?} frame {:?} theta {:.6} phi {:.6}",
        strategy.family(),
        strategy.frame(),
        strategy.params().theta(),
        strategy.params().phi()
    )
    .unwrap();
    let weight_name = match strategy.family() {
        StrategyFamily::Nonadaptive => "alpha",
        StrategyFamily::Adaptive => "beta",
        _ => "weight",
    };
    writeln!(s, "{weight_name} = {:.6}", sp.weight).unwrap();
    writeln!(s, "lambda2 = {:.6}", sp.lambda2).unwrap();
    writeln!(s, "lambda4 = {:.6}", sp.lambda4).unwrap();
    writeln!(s, "delta_eps coefficient (1-lambda2) = {:.6}", sp.delta_eps_coefficient()).unwrap();
    for t in strategy.tests() {
        match t {
            Test::Binary(b) => {
                writeln!(
                    s,
                    "test {}: p = {:.6} — {}",
                    b.label, b.selection_probability, b.description
                )
                .unwrap();
            }
            Test::Adaptive(a) => {
                let overlap = a.bob_accept[0].inner(&a.bob_accept[1]).norm();
                writeln!(
                    s,
                    "test {}: p = {:.6} — feed-forward (Bob accept overlap {:.6})",
                    a.label, a.selection_probability, overlap
                )
                .unwrap();
                for (alice, bob) in a.alice_basis.iter().zip(&a.bob_accept) {
                    writeln!(
                        s,
                        "  Alice {} → Bob accepts {}",
                        crate::strategy::format_ket2(alice),
                        crate::strategy::format_ket2(bob)
                    )
                    .unwrap();
                }
            }
        }
    }

    let mut csv = String::from("label,selection_probability,kind\n");
    for t in strategy.tests() {
        let kind = match t {
            Test::Binary(_) => "binary",
            Test::Adaptive(_) => "adaptive",
        };
        writeln!(csv, "{},{},{}", t.label(), fmt(t.selection_probability()), kind).unwrap();
    }
    Ok(ExperimentOutput {
        files: vec![("strategy_tests.csv".into(), csv)],
        summary: s,
    })
}

// ---------------------------------------------------------------------------
// task-a
// ---------------------------------------------------------------------------

fn task_a(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let strategy = build_strategy(cfg)?;
    let sim = Simulator::new(strategy, &cfg.device_model())?;
    let rounds = cfg.rounds_or_default();
    let max_copies = cfg.n_copies_or_default();
    let seed = cfg.run.seed;

    let outcomes: Vec<TaskAOutcome> = (0..rounds)
        .into_par_iter()
        .map(|r| sim.run_task_a(&mut round_rng(seed, r), max_copies))
        .collect();

    let spectrum = *sim.strategy().spectrum();
    let result = TaskAResult::analyze(&outcomes, max_copies, &spectrum, cfg.analysis.confidence)?;

    let mut csv = String::from("n_first,count\n");
    for (n, c) in &result.histogram {
        writeln!(csv, "{n},{c}").unwrap();
    }

    let true_delta = 1.0 - sim.expected_pass_rate();
    let mut s = String::new();
    writeln!(s, "task-a: {rounds} rounds, censored at {max_copies} copies").unwrap();
    writeln!(
        s,
        "delta_eps_hat = {:.6e} +- {:.2e} (device value {:.6e})",
        result.fit.delta_eps_hat, result.fit.delta_eps_se, true_delta
    )
    .unwrap();
    writeln!(
        s,
        "epsilon_hat = {:.6e} +- {:.2e}",
        result.fit.epsilon_hat, result.fit.epsilon_se
    )
    .unwrap();
    writeln!(s, "censored rounds = {}", result.fit.censored).unwrap();
    writeln!(
        s,
        "n for {:.0}% confidence = {} (from device value: {})",
        100.0 * result.confidence_level,
        result.n_for_confidence,
        crate::analysis::copies_for_confidence(true_delta, result.confidence_level)
    )
    .unwrap();

    Ok(ExperimentOutput {
        files: vec![("task_a_histogram.csv".into(), csv)],
        summary: s,
    })
}

// ---------------------------------------------------------------------------
// task-b
// ---------------------------------------------------------------------------

fn task_b(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let strategy = build_strategy(cfg)?;
    let sim = Simulator::new(strategy, &cfg.device_model())?;
    let rounds = cfg.rounds_or_default();
    let n_max = cfg.n_copies_or_default();
    let seed = cfg.run.seed;
    let spectrum = *sim.strategy().spectrum();
    let (eps_min, eps_max) = (cfg.analysis.eps_min, cfg.analysis.eps_max);

    let grid = log_grid(10, n_max, 24);
    let jobs: Vec<(usize, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(gi, _)| (0..rounds).map(move |r| (gi, r)))
        .collect();
    let rows: Vec<TaskBResult> = jobs
        .par_iter()
        .map(|&(gi, r)| {
            let stream = gi as u64 * rounds + r;
            let m = sim.run_task_b(&mut round_rng(seed, stream), grid[gi]);
            TaskBResult::evaluate(m, grid[gi], &spectrum, eps_min, eps_max)
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("n,m_pass,delta,delta_s,delta_l,region\n");
    let mut rate_at_max = 0.0;
    for row in &rows {
        let opt = |d: Option<f64>| d.map(fmt).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.n,
            row.m_pass,
            fmt(row.delta),
            opt(row.regions.delta_s),
            opt(row.regions.delta_l),
            row.regions.region.as_str()
        )
        .unwrap();
        if row.n == grid[grid.len() - 1] {
            rate_at_max += row.m_pass as f64 / row.n as f64 / rounds as f64;
        }
    }

    let mu_s = 1.0 - (1.0 - spectrum.lambda4) * eps_min;
    let mu_l = 1.0 - (1.0 - spectrum.lambda2) * eps_max;
    let ln_inv_target = (1.0 / cfg.analysis.delta_target).ln();
    let mut s = String::new();
    writeln!(s, "task-b: grid up to {n_max} copies, {rounds} rounds per point").unwrap();
    writeln!(s, "stable pass rate (largest point) = {rate_at_max:.6}").unwrap();
    writeln!(s, "mu_s (eps_min {eps_min}) = {mu_s:.6}, mu_l (eps_max {eps_max}) = {mu_l:.6}").unwrap();
    if rate_at_max <= mu_s {
        let d = kl_divergence(rate_at_max, mu_s);
        writeln!(
            s,
            "copies to push delta_s below {}: {}",
            cfg.analysis.delta_target,
            (ln_inv_target / d).ceil() as u64
        )
        .unwrap();
    }
    if rate_at_max >= mu_l {
        let d = kl_divergence(rate_at_max, mu_l);
        writeln!(
            s,
            "copies to push delta_l below {}: {}",
            cfg.analysis.delta_target,
            (ln_inv_target / d).ceil() as u64
        )
        .unwrap();
    }

    let mut files = vec![("task_b.csv".into(), csv)];
    if cfg.run.records {
        let mut rng = round_rng(seed, u64::MAX - 1);
        let (_, records) = sim.run_task_b_recorded(&mut rng, grid[grid.len() - 1]);
        let mut rec_csv = String::from("copy_index,setting,alice,passed\n");
        for r in records {
            let alice = r.alice.map(|a| (a as u8).to_string()).unwrap_or_default();
            writeln!(
                rec_csv,
                "{},{},{},{}",
                r.copy_index,
                sim.strategy().tests()[r.setting as usize].label(),
                alice,
                r.passed as u8
            )
            .unwrap();
        }
        files.push(("records.csv".into(), rec_csv));
    }

    Ok(ExperimentOutput { files, summary: s })
}

// ---------------------------------------------------------------------------
// scaling
// ---------------------------------------------------------------------------

/// One point of the simulated ε(N) curve.
#[derive(Debug, Clone, Copy)]
pub struct ScalingPoint {
    pub n: u64,
    pub epsilon: f64,
    pub stderr: f64,
    pub solvable: u64,
}

/// Simulate the ε(N) curve at fixed δ: per copy count, `rounds` independent
/// rounds each contribute ε from their own pass rate; a grid point is kept
/// when at least half the rounds admit a solution.
pub fn simulated_epsilon_curve(
    sim: &Simulator,
    seed: u64,
    n_max: u64,
    rounds: u64,
    delta_target: f64,
    side: Side,
) -> Vec<ScalingPoint> {
    let spectrum = *sim.strategy().spectrum();
    let per_n: Vec<Vec<f64>> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let gi = n - 1;
            (0..rounds)
                .filter_map(|r| {
                    let mut rng = round_rng(seed, gi * rounds + r);
                    let m = sim.run_task_b(&mut rng, n);
                    if m == 0 {
                        return None;
                    }
                    epsilon_at(n, m as f64 / n as f64, delta_target, &spectrum, side).ok()
                })
                .collect()
        })
        .collect();

    per_n
        .into_iter()
        .enumerate()
        .filter_map(|(i, eps)| {
            let n = i as u64 + 1;
            if (eps.len() as u64) * 2 < rounds {
                return None;
            }
            let count = eps.len() as f64;
            let mean = eps.iter().sum::<f64>() / count;
            let var = eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
                / (count - 1.0).max(1.0);
            Some(ScalingPoint {
                n,
                epsilon: mean,
                stderr: (var / count).sqrt(),
                solvable: eps.len() as u64,
            })
        })
        .collect()
}

/// Log-log slope of the curve's linear region (points with ε ≤ cap).
pub fn linear_region_slope(
    points: &[ScalingPoint],
    window: (f64, f64),
    eps_cap: f64,
) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.epsilon <= eps_cap)
        .map(|p| (p.n as f64, p.epsilon))
        .collect();
    fit_loglog_slope(&pts, window)
}

fn scaling(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let strategy = build_strategy(cfg)?;
    let sim = Simulator::new(strategy, &cfg.device_model())?;
    let n_max = cfg.n_copies_or_default();
    let rounds = cfg.rounds_or_default();
    let points = simulated_epsilon_curve(
        &sim,
        cfg.run.seed,
        n_max,
        rounds,
        cfg.analysis.delta_target,
        cfg.analysis.region,
    );

    let mut csv = String::from("n,epsilon,stderr\n");
    for p in &points {
        writeln!(csv, "{},{},{}", p.n, fmt(p.epsilon), fmt(p.stderr)).unwrap();
    }

    let lambda = match cfg.analysis.region {
        Side::Large => sim.strategy().spectrum().lambda2,
        Side::Small => sim.strategy().spectrum().lambda4,
    };
    let asym = (1.0 - sim.expected_pass_rate()) / (1.0 - lambda);
    let mut s = String::new();
    writeln!(
        s,
        "scaling: delta = {}, N in [1, {n_max}], {rounds} rounds per N, {} usable points",
        cfg.analysis.delta_target,
        points.len()
    )
    .unwrap();
    writeln!(s, "epsilon asymptote (device rate, {:?} region) = {:.6e}", cfg.analysis.region, asym)
        .unwrap();
    match linear_region_slope(&points, (1.0, n_max as f64), LINEAR_REGION_EPS_CAP) {
        Ok((slope, se)) => {
            writeln!(s, "log-log slope (linear region, eps <= {LINEAR_REGION_EPS_CAP}) = {slope:.4} +- {se:.4}")
                .unwrap();
        }
        Err(e) => writeln!(s, "log-log slope unavailable: {e}").unwrap(),
    }

    Ok(ExperimentOutput {
        files: vec![("scaling.csv".into(), csv)],
        summary: s,
    })
}

// ---------------------------------------------------------------------------
// tomo-compare
// ---------------------------------------------------------------------------

struct TomoRound {
    ln_delta_tomo: f64,
    eps_tomo: f64,
    fidelity: f64,
    df: f64,
    ln_delta_verif: f64,
    eps_verif: Option<f64>,
}

fn tomo_compare(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let strategy = build_strategy(cfg)?;
    let sim = Simulator::new(strategy, &cfg.device_model())?;
    let sigma = *sim.sigma();
    let target = *sim.strategy().target();
    let spectrum = *sim.strategy().spectrum();
    let rounds = cfg.rounds_or_default();
    let n_max = cfg.n_copies_or_default();
    let eps_min = cfg.analysis.eps_min;
    let mu = 1.0 - spectrum.delta_eps_coefficient() * eps_min;
    let seed = cfg.run.seed;

    let grid = log_grid(1000.min(n_max), n_max, 10);
    let jobs: Vec<(usize, u64)> = grid
        .iter()
        .enumerate()
        .flat_map(|(gi, _)| (0..rounds).map(move |r| (gi, r)))
        .collect();

    let results: Vec<Result<TomoRound>> = jobs
        .par_iter()
        .map(|&(gi, r)| {
            let n = grid[gi];
            let base = 2 * (gi as u64 * rounds + r);
            let mut tomo_rng = round_rng(seed, base);
            let data = simulate_tomography(&sigma, n, &mut tomo_rng)?;
            let f = fidelity_linear(&data, &target)?;
            let df = bootstrap_df(&data, &target, 100, &mut tomo_rng)?;
            let delta_tomo = crate::tomography::tomo_confidence(f, df, eps_min, Assertion::Bad);

            let mut verif_rng = round_rng(seed, base + 1);
            let m = sim.run_task_b(&mut verif_rng, n);
            let rate = m as f64 / n as f64;
            let ln_delta_verif = -(n as f64) * kl_divergence(rate, mu);
            let eps_verif = if m == 0 {
                None
            } else {
                epsilon_at(n, rate, cfg.analysis.delta_target, &spectrum, Side::Large).ok()
            };
            Ok(TomoRound {
                ln_delta_tomo: delta_tomo.max(1e-300).ln(),
                eps_tomo: 1.0 - f,
                fidelity: f,
                df,
                ln_delta_verif,
                eps_verif,
            })
        })
        .collect();

    let mut compare_csv = String::from("n,delta_tomo,eps_tomo,delta_verif,eps_verif\n");
    let mut detail_csv = String::from("n,delta_tomo,epsilon_tomo,F,dF\n");
    let mut dt_points = Vec::new();
    let mut dv_points = Vec::new();
    let mut eps_t_curve = Vec::new();
    let mut eps_v_curve = Vec::new();
    for (gi, &n) in grid.iter().enumerate() {
        let mut ln_dt = 0.0;
        let mut ln_dv = 0.0;
        let mut eps_t = 0.0;
        let mut f_sum = 0.0;
        let mut df_sum = 0.0;
        let mut eps_v = Vec::new();
        for j in 0..rounds as usize {
            let row = results[gi * rounds as usize + j].as_ref().map_err(|e| {
                crate::error::QvError::FitFailed { reason: e.to_string() }
            })?;
            ln_dt += row.ln_delta_tomo;
            ln_dv += row.ln_delta_verif;
            eps_t += row.eps_tomo;
            f_sum += row.fidelity;
            df_sum += row.df;
            if let Some(e) = row.eps_verif {
                eps_v.push(e);
            }
        }
        let rf = rounds as f64;
        let delta_tomo = (ln_dt / rf).exp();
        let delta_verif = (ln_dv / rf).exp();
        let eps_tomo = eps_t / rf;
        let eps_verif = (!eps_v.is_empty())
            .then(|| eps_v.iter().sum::<f64>() / eps_v.len() as f64);
        writeln!(
            compare_csv,
            "{n},{},{},{},{}",
            fmt(delta_tomo),
            fmt(eps_tomo),
            fmt(delta_verif),
            eps_verif.map(fmt).unwrap_or_default()
        )
        .unwrap();
        writeln!(
            detail_csv,
            "{n},{},{},{},{}",
            fmt(delta_tomo),
            fmt(eps_tomo),
            fmt(f_sum / rf),
            fmt(df_sum / rf)
        )
        .unwrap();
        dt_points.push((n as f64, delta_tomo));
        dv_points.push((n as f64, delta_verif));
        eps_t_curve.push((n, eps_tomo));
        if let Some(e) = eps_verif {
            eps_v_curve.push((n, e));
        }
    }

    let g_tomo = fit_exp_decay(&dt_points)?;
    let g_verif = fit_exp_decay(&dv_points)?;
    let mut s = String::new();
    writeln!(s, "tomo-compare: grid {:?}, {rounds} rounds per point", grid).unwrap();
    writeln!(s, "g_tomo  = {g_tomo:.4e}").unwrap();
    writeln!(s, "g_verif = {g_verif:.4e}").unwrap();
    writeln!(s, "|g_verif / g_tomo| = {:.2}", (g_verif / g_tomo).abs()).unwrap();
    if let (Some(first), Some(last)) = (eps_t_curve.first(), eps_t_curve.last()) {
        writeln!(
            s,
            "eps_tomo: {:.4e} (N={}) -> {:.4e} (N={})",
            first.1, first.0, last.1, last.0
        )
        .unwrap();
    }
    if let (Some(first), Some(last)) = (eps_v_curve.first(), eps_v_curve.last()) {
        writeln!(
            s,
            "eps_verif: {:.4e} (N={}) -> {:.4e} (N={})",
            first.1, first.0, last.1, last.0
        )
        .unwrap();
    }

    Ok(ExperimentOutput {
        files: vec![
            ("tomo_compare.csv".into(), compare_csv),
            ("tomo_detail.csv".into(), detail_csv),
        ],
        summary: s,
    })
}
