//! Statistical layer: geometric Task A analysis, Chernoff-bound Task B
//! confidences, ε(N) solving at fixed δ, and the scaling-law fits.
//!
//! The Kullback–Leibler divergence here uses natural logarithms throughout:
//! only e-based D reproduces the copy counts that go with
//! δ = e^{−N·D(m/N‖μ)} (log₂ would understate them by a factor ln 2).

use crate::device::TaskAOutcome;
use crate::error::{QvError, Result};
use crate::strategy::StrategySpectrum;

/// Binary KL divergence x·ln(x/y) + (1−x)·ln((1−x)/(1−y)), in nats.
///
/// Conventions: 0·ln 0 ≡ 0; a degenerate y ∈ {0, 1} with x ≠ y returns +∞.
pub fn kl_divergence(x: f64, y: f64) -> f64 {
    if y <= 0.0 || y >= 1.0 {
        return if x == y { 0.0 } else { f64::INFINITY };
    }
    let t1 = if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    let t2 = if x == 1.0 {
        0.0
    } else {
        (1.0 - x) * ((1.0 - x) / (1.0 - y)).ln()
    };
    t1 + t2
}

/// Pr(N_first = n) = (1−Δ_ε)^{n−1}·Δ_ε, for n ≥ 1.
pub fn geometric_pmf(delta_eps: f64, n: u64) -> f64 {
    (1.0 - delta_eps).powf(n as f64 - 1.0) * delta_eps
}

/// δ_A = 1 − (1−Δ_ε)^n: confidence accumulated after n failure-free tests.
pub fn cumulative_confidence(delta_eps: f64, n: u64) -> f64 {
    1.0 - (1.0 - delta_eps).powf(n as f64)
}

/// Which side of the expected pass rate the data sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// m/n ≤ μ: the bound limits the Case-1 (good-device) probability.
    Small,
    /// m/n ≥ μ: the bound limits the Case-2 (bad-device) probability.
    Large,
}

/// δ = e^{−n·D(m/n‖μ)} with the side tag; m/n = μ gives δ = 1.
pub fn chernoff_delta(m_pass: u64, n: u64, mu: f64) -> (f64, Side) {
    let rate = m_pass as f64 / n as f64;
    let delta = (-(n as f64) * kl_divergence(rate, mu)).exp();
    let side = if rate >= mu { Side::Large } else { Side::Small };
    (delta, side)
}

/// Validity region of the two adaptive Task B bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Only the small-region bound (δ_s, Case-2 assertion) applies.
    Small,
    /// Only the large-region bound (δ_l, Case-1 assertion) applies.
    Large,
    /// Both apply: μ_l ≤ m/n ≤ μ_s, which happens when ε_min and ε_max are
    /// chosen on opposite sides of the device's actual infidelity.
    Both,
    /// Neither applies (μ_s < m/n < μ_l); no δ is fabricated.
    Indeterminate,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Small => "small",
            Region::Large => "large",
            Region::Both => "both",
            Region::Indeterminate => "indeterminate",
        }
    }
}

/// Output of the adaptive two-threshold Task B analysis.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveDeltas {
    pub mu_s: f64,
    pub mu_l: f64,
    /// e^{−n·D(m/n‖μ_s)}, present only when m/n ≤ μ_s.
    pub delta_s: Option<f64>,
    /// e^{−n·D(m/n‖μ_l)}, present only when m/n ≥ μ_l.
    pub delta_l: Option<f64>,
    pub region: Region,
}

/// Adaptive Task B: μ_s = 1−(1−λ₄)·ε_min gates the Case-2 assertion,
/// μ_l = 1−(1−λ₂)·ε_max the Case-1 assertion.
pub fn adaptive_region_deltas(
    m_pass: u64,
    n: u64,
    spectrum: &StrategySpectrum,
    eps_min: f64,
    eps_max: f64,
) -> Result<AdaptiveDeltas> {
    for (name, v) in [("eps_min", eps_min), ("eps_max", eps_max)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(QvError::OutOfRange { name, value: v, range: "(0, 1)" });
        }
    }
    if eps_min > eps_max {
        return Err(QvError::Config(format!(
            "eps_min {eps_min} > eps_max {eps_max}: thresholds inverted"
        )));
    }
    let mu_s = 1.0 - (1.0 - spectrum.lambda4) * eps_min;
    let mu_l = 1.0 - (1.0 - spectrum.lambda2) * eps_max;
    let rate = m_pass as f64 / n as f64;
    let delta_s =
        (rate <= mu_s).then(|| (-(n as f64) * kl_divergence(rate, mu_s)).exp());
    let delta_l =
        (rate >= mu_l).then(|| (-(n as f64) * kl_divergence(rate, mu_l)).exp());
    let region = match (delta_s.is_some(), delta_l.is_some()) {
        (true, true) => Region::Both,
        (true, false) => Region::Small,
        (false, true) => Region::Large,
        (false, false) => Region::Indeterminate,
    };
    Ok(AdaptiveDeltas { mu_s, mu_l, delta_s, delta_l, region })
}

/// Smallest ε with e^{−n·D(pass_rate‖1−(1−λ)ε)} = δ_target, found by
/// bisection to 1e-12 in ε.
///
/// The side tag picks λ: `Large` uses λ₂ and brackets [ε_asymptote, 1) where
/// δ falls from 1 toward its ε→1 value; `Small` uses λ₄ and brackets
/// (0, min(ε_asymptote, 1)] where δ rises from 0 to 1. A pass rate of
/// exactly 1 is admitted (all-pass rounds at small n) via the 0·ln 0
/// convention.
pub fn epsilon_at(
    n: u64,
    pass_rate: f64,
    delta_target: f64,
    spectrum: &StrategySpectrum,
    side: Side,
) -> Result<f64> {
    if !(pass_rate > 0.0 && pass_rate <= 1.0) {
        return Err(QvError::OutOfRange {
            name: "pass_rate",
            value: pass_rate,
            range: "(0, 1]",
        });
    }
    if !(delta_target > 0.0 && delta_target <= 1.0) {
        return Err(QvError::OutOfRange {
            name: "delta_target",
            value: delta_target,
            range: "(0, 1]",
        });
    }
    let lambda = match side {
        Side::Large => spectrum.lambda2,
        Side::Small => spectrum.lambda4,
    };
    let asym = (1.0 - pass_rate) / (1.0 - lambda);
    if delta_target == 1.0 {
        // D = 0 root: μ(ε) = pass_rate exactly
        return if asym <= 1.0 {
            Ok(asym)
        } else {
            Err(QvError::NoRootInBracket { lo: 0.0, hi: 1.0 })
        };
    }
    let delta_of = |eps: f64| {
        let mu = 1.0 - (1.0 - lambda) * eps;
        (-(n as f64) * kl_divergence(pass_rate, mu)).exp()
    };
    let (mut lo, mut hi, increasing) = match side {
        Side::Large => {
            if asym >= 1.0 {
                return Err(QvError::NoRootInBracket { lo: asym, hi: 1.0 });
            }
            if delta_of(1.0 - 1e-15) > delta_target {
                return Err(QvError::NoRootInBracket { lo: asym, hi: 1.0 });
            }
            (asym, 1.0 - 1e-15, false)
        }
        Side::Small => {
            let hi = asym.min(1.0);
            if delta_of(hi) < delta_target {
                return Err(QvError::NoRootInBracket { lo: 0.0, hi });
            }
            (0.0, hi, true)
        }
    };
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let above = delta_of(mid) > delta_target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Censored maximum-likelihood fit of the geometric failure law.
#[derive(Debug, Clone, Copy)]
pub struct GeometricFit {
    pub delta_eps_hat: f64,
    pub delta_eps_se: f64,
    pub epsilon_hat: f64,
    pub epsilon_se: f64,
    pub failures: u64,
    pub censored: u64,
}

/// MLE Δ̂_ε = failures / total copies consumed, censored rounds contributing
/// `max_copies` each; the standard error comes from the observed Fisher
/// information. All-censored data has no MLE — the error carries a one-sided
/// 95% upper bound on Δ_ε instead.
pub fn fit_geometric(
    outcomes: &[TaskAOutcome],
    max_copies: u64,
    spectrum: &StrategySpectrum,
) -> Result<GeometricFit> {
    let mut failures = 0u64;
    let mut censored = 0u64;
    let mut total: u64 = 0;
    let mut uncensored_prior: u64 = 0; // Σ (n_i − 1)
    for o in outcomes {
        match o {
            TaskAOutcome::FirstFail(n) => {
                failures += 1;
                total += n;
                uncensored_prior += n - 1;
            }
            TaskAOutcome::Censored => {
                censored += 1;
                total += max_copies;
            }
        }
    }
    if failures == 0 {
        let cm = (censored * max_copies) as f64;
        return Err(QvError::AllCensored {
            rounds: censored,
            max_copies,
            delta_eps_upper: if cm > 0.0 { 1.0 - 0.05f64.powf(1.0 / cm) } else { 1.0 },
        });
    }
    let d = failures as f64 / total as f64;
    let fisher = uncensored_prior as f64 / (1.0 - d).powi(2)
        + failures as f64 / d.powi(2)
        + (censored * max_copies) as f64 / (1.0 - d).powi(2);
    let se = fisher.sqrt().recip();
    let coeff = spectrum.delta_eps_coefficient();
    Ok(GeometricFit {
        delta_eps_hat: d,
        delta_eps_se: se,
        epsilon_hat: d / coeff,
        epsilon_se: se / coeff,
        failures,
        censored,
    })
}

/// Smallest n with cumulative confidence ≥ `level` at failure rate Δ_ε.
pub fn copies_for_confidence(delta_eps: f64, level: f64) -> u64 {
    ((1.0 - level).ln() / (1.0 - delta_eps).ln()).ceil() as u64
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let m = xs.len() as f64;
    if xs.len() < 3 {
        return Err(QvError::FitFailed {
            reason: format!("{} points, need at least 3", xs.len()),
        });
    }
    let xm = xs.iter().sum::<f64>() / m;
    let ym = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(QvError::FitFailed { reason: "degenerate x range".into() });
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let se = (ss_res / (m - 2.0) / sxx).sqrt();
    Ok((slope, intercept, se))
}

/// Least-squares slope of log ε vs log n over the points inside `window`
/// (inclusive n-range). Returns (slope, standard error).
pub fn fit_loglog_slope(points: &[(f64, f64)], window: (f64, f64)) -> Result<(f64, f64)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(n, eps) in points {
        if n >= window.0 && n <= window.1 {
            if eps <= 0.0 || n <= 0.0 {
                return Err(QvError::FitFailed {
                    reason: format!("non-positive point ({n}, {eps})"),
                });
            }
            xs.push(n.ln());
            ys.push(eps.ln());
        }
    }
    let (slope, _, se) = linear_fit(&xs, &ys)?;
    Ok((slope, se))
}

/// Least-squares slope g of ln δ vs n (the δ = e^{g·n} model).
pub fn fit_exp_decay(points: &[(f64, f64)]) -> Result<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(n, delta) in points {
        if delta <= 0.0 || delta > 1.0 {
            return Err(QvError::FitFailed {
                reason: format!("delta {delta} outside (0, 1]"),
            });
        }
        xs.push(n);
        ys.push(delta.ln());
    }
    let (slope, _, _) = linear_fit(&xs, &ys)?;
    Ok(slope)
}

/// Task A analysis bundle: first-fail histogram plus the fitted infidelity
/// and the copy count for the requested confidence.
#[derive(Debug, Clone)]
pub struct TaskAResult {
    /// (n_first, count), ascending in n_first.
    pub histogram: Vec<(u64, u64)>,
    pub fit: GeometricFit,
    pub n_for_confidence: u64,
    pub confidence_level: f64,
}

impl TaskAResult {
    pub fn analyze(
        outcomes: &[TaskAOutcome],
        max_copies: u64,
        spectrum: &StrategySpectrum,
        confidence_level: f64,
    ) -> Result<Self> {
        let fit = fit_geometric(outcomes, max_copies, spectrum)?;
        let mut hist = std::collections::BTreeMap::new();
        for o in outcomes {
            if let TaskAOutcome::FirstFail(n) = o {
                *hist.entry(*n).or_insert(0u64) += 1;
            }
        }
        Ok(Self {
            histogram: hist.into_iter().collect(),
            fit,
            n_for_confidence: copies_for_confidence(fit.delta_eps_hat, confidence_level),
            confidence_level,
        })
    }
}

/// One Task B evaluation at a fixed copy count.
///
/// `delta` is the single-threshold Chernoff value at the primary threshold
/// ε_min; `regions` carries the two-threshold analysis (for nonadaptive
/// spectra λ₄ = λ₂, so μ_s is the ε_min threshold and μ_l the ε_max one).
#[derive(Debug, Clone, Copy)]
pub struct TaskBResult {
    pub n: u64,
    pub m_pass: u64,
    /// Expected pass rate 1−(1−λ₂)·ε_min at the primary threshold.
    pub mu: f64,
    pub delta: f64,
    pub side: Side,
    pub regions: AdaptiveDeltas,
}

impl TaskBResult {
    pub fn evaluate(
        m_pass: u64,
        n: u64,
        spectrum: &StrategySpectrum,
        eps_min: f64,
        eps_max: f64,
    ) -> Result<Self> {
        if n == 0 || m_pass > n {
            return Err(QvError::Config(format!(
                "inconsistent counts: m_pass {m_pass}, n {n}"
            )));
        }
        let mu = 1.0 - spectrum.delta_eps_coefficient() * eps_min;
        let (delta, side) = chernoff_delta(m_pass, n, mu);
        let regions = adaptive_region_deltas(m_pass, n, spectrum, eps_min, eps_max)?;
        Ok(Self { n, m_pass, mu, delta, side, regions })
    }
}
