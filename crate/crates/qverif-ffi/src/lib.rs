//! C ABI for the two-qubit state-verification library.
//!
//! Strategies are opaque handles created with [`qv_strategy_new`] and
//! released with [`qv_strategy_free`]. Every fallible call returns a
//! [`QvStatus`] and writes its result through out-pointers; pure scalar
//! functions return the value directly. The generated header lives at
//! `include/qverif.h`.
//!
//! Simulation entry points take a `(fidelity, eom_flip, seed)` device
//! description and are deterministic in the seed.

use qverif::analysis::{self, Side};
use qverif::device::{DeviceModel, Simulator, TaskAOutcome};
use qverif::error::QvError;
use qverif::state::{Frame, TargetParams};
use qverif::strategy::{self, Strategy, StrategyFamily};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Call outcome; `QV_OK` means the out-parameters were written.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvStatus {
    QvOk = 0,
    /// A parameter was outside its documented range.
    QvInvalidArgument = 1,
    /// θ is outside the regime of the requested strategy family.
    QvRegimeError = 2,
    /// The ε(N) equation has no root in the admissible bracket.
    QvNoRoot = 3,
    /// A required pointer was null.
    QvNullPointer = 4,
    /// Any other failure (fit, simulation, internal).
    QvRuntimeError = 5,
}

/// Strategy family selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvFamily {
    QvFamilyNonadaptive = 0,
    QvFamilyAdaptive = 1,
    QvFamilyBell = 2,
    QvFamilyProduct = 3,
}

/// Target-state frame selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvFrame {
    QvFrameTheoretical = 0,
    QvFrameExperimental = 1,
}

/// Which side of the expected pass rate an analysis sits on.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QvSide {
    QvSideSmall = 0,
    QvSideLarge = 1,
}

/// Analytic spectral data of a strategy.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QvSpectrum {
    pub lambda2: f64,
    pub lambda4: f64,
    /// α(θ), β(θ), 1/3, or 1 depending on the family.
    pub weight: f64,
    /// 1 − λ₂.
    pub delta_eps_coefficient: f64,
}

/// Opaque strategy handle.
pub struct QvStrategy {
    inner: Strategy,
}

fn status_of(err: &QvError) -> QvStatus {
    match err {
        QvError::OutOfRange { .. } | QvError::InvalidProbability { .. } => {
            QvStatus::QvInvalidArgument
        }
        QvError::Regime { .. } => QvStatus::QvRegimeError,
        QvError::NoRootInBracket { .. } => QvStatus::QvNoRoot,
        _ => QvStatus::QvRuntimeError,
    }
}

fn side_of(side: QvSide) -> Side {
    match side {
        QvSide::QvSideSmall => Side::Small,
        QvSide::QvSideLarge => Side::Large,
    }
}

/// Build a strategy. On success writes a heap handle to `out`; free it with
/// `qv_strategy_free`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qv_strategy_new(
    family: QvFamily,
    theta: f64,
    phi: f64,
    frame: QvFrame,
    out: *mut *mut QvStrategy,
) -> QvStatus {
    if out.is_null() {
        return QvStatus::QvNullPointer;
    }
    let params = match TargetParams::new(theta, phi) {
        Ok(p) => p,
        Err(e) => return status_of(&e),
    };
    let frame = match frame {
        QvFrame::QvFrameTheoretical => Frame::Theoretical,
        QvFrame::QvFrameExperimental => Frame::Experimental,
    };
    let family = match family {
        QvFamily::QvFamilyNonadaptive => StrategyFamily::Nonadaptive,
        QvFamily::QvFamilyAdaptive => StrategyFamily::Adaptive,
        QvFamily::QvFamilyBell => StrategyFamily::Bell,
        QvFamily::QvFamilyProduct => StrategyFamily::Product,
    };
    match Strategy::for_family(family, params, frame) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(QvStrategy { inner }));
            QvStatus::QvOk
        }
        Err(e) => status_of(&e),
    }
}

/// Release a strategy handle. A null pointer is a no-op.
///
/// # Safety
/// `strategy` must have come from `qv_strategy_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qv_strategy_free(strategy: *mut QvStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}

/// Number of binary tests in the strategy.
///
/// # Safety
/// `strategy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qv_strategy_test_count(strategy: *const QvStrategy) -> usize {
    if strategy.is_null() {
        return 0;
    }
    (*strategy).inner.tests().len()
}

/// Analytic spectrum of the strategy operator.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_strategy_spectrum(
    strategy: *const QvStrategy,
    out: *mut QvSpectrum,
) -> QvStatus {
    if strategy.is_null() || out.is_null() {
        return QvStatus::QvNullPointer;
    }
    let sp = (*strategy).inner.spectrum();
    *out = QvSpectrum {
        lambda2: sp.lambda2,
        lambda4: sp.lambda4,
        weight: sp.weight,
        delta_eps_coefficient: sp.delta_eps_coefficient(),
    };
    QvStatus::QvOk
}

/// Copies needed for confidence 1−δ against ε-far states,
/// ceil(ln δ / ln(1 − (1−λ₂)ε)).
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_required_copies(
    strategy: *const QvStrategy,
    epsilon: f64,
    delta: f64,
    out: *mut u64,
) -> QvStatus {
    if strategy.is_null() || out.is_null() {
        return QvStatus::QvNullPointer;
    }
    match strategy::required_copies(epsilon, delta, (*strategy).inner.spectrum()) {
        Ok(n) => {
            *out = n;
            QvStatus::QvOk
        }
        Err(e) => status_of(&e),
    }
}

/// Worst-case single-test failure probability Δ_ε = (1−λ₂)·ε.
///
/// # Safety
/// `strategy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qv_failure_probability(
    strategy: *const QvStrategy,
    epsilon: f64,
) -> f64 {
    if strategy.is_null() {
        return f64::NAN;
    }
    strategy::failure_probability((*strategy).inner.spectrum(), epsilon)
}

/// Closed-form pass probability from a fidelity and (adaptive only) the
/// weight p₄ on the fourth verifier-basis vector.
///
/// # Safety
/// `strategy` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qv_pass_probability(
    strategy: *const QvStrategy,
    fidelity: f64,
    p4: f64,
) -> f64 {
    if strategy.is_null() {
        return f64::NAN;
    }
    let sp = (*strategy).inner.spectrum();
    sp.lambda2 + (1.0 - sp.lambda2) * fidelity - (sp.lambda2 - sp.lambda4) * p4
}

/// Binary KL divergence in nats (0·ln 0 ≡ 0; ±∞ conventions as documented).
#[no_mangle]
pub extern "C" fn qv_kl_divergence(x: f64, y: f64) -> f64 {
    analysis::kl_divergence(x, y)
}

/// δ_A = 1 − (1−Δ_ε)^n.
#[no_mangle]
pub extern "C" fn qv_cumulative_confidence(delta_eps: f64, n: u64) -> f64 {
    analysis::cumulative_confidence(delta_eps, n)
}

/// Chernoff bound δ = e^{−n·D(m/n‖μ)}; `side_out` reports which case the
/// bound applies to.
///
/// # Safety
/// Out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_chernoff_delta(
    m_pass: u64,
    n: u64,
    mu: f64,
    delta_out: *mut f64,
    side_out: *mut QvSide,
) -> QvStatus {
    if delta_out.is_null() || side_out.is_null() {
        return QvStatus::QvNullPointer;
    }
    if n == 0 || m_pass > n || !(0.0..1.0).contains(&mu) || mu <= 0.0 {
        return QvStatus::QvInvalidArgument;
    }
    let (delta, side) = analysis::chernoff_delta(m_pass, n, mu);
    *delta_out = delta;
    *side_out = match side {
        Side::Small => QvSide::QvSideSmall,
        Side::Large => QvSide::QvSideLarge,
    };
    QvStatus::QvOk
}

/// Solve ε from e^{−n·D(pass_rate‖1−(1−λ)ε)} = δ; the side picks λ₂ or λ₄.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_epsilon_at(
    strategy: *const QvStrategy,
    n: u64,
    pass_rate: f64,
    delta_target: f64,
    side: QvSide,
    out: *mut f64,
) -> QvStatus {
    if strategy.is_null() || out.is_null() {
        return QvStatus::QvNullPointer;
    }
    match analysis::epsilon_at(
        n,
        pass_rate,
        delta_target,
        (*strategy).inner.spectrum(),
        side_of(side),
    ) {
        Ok(e) => {
            *out = e;
            QvStatus::QvOk
        }
        Err(e) => status_of(&e),
    }
}

fn simulator_for(
    strategy: &Strategy,
    fidelity: f64,
    eom_flip: f64,
) -> Result<Simulator, QvError> {
    let model = DeviceModel::from_fidelity(fidelity).with_eom_flip(eom_flip);
    Simulator::new(strategy.clone(), &model)
}

/// Task B on a diagonal-mixture device of the given fidelity: returns the
/// pass count over `n_copies` copies. Deterministic in `seed`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_simulate_task_b(
    strategy: *const QvStrategy,
    fidelity: f64,
    eom_flip: f64,
    seed: u64,
    n_copies: u64,
    m_pass_out: *mut u64,
) -> QvStatus {
    if strategy.is_null() || m_pass_out.is_null() {
        return QvStatus::QvNullPointer;
    }
    if !(0.0..=1.0).contains(&fidelity) || n_copies == 0 {
        return QvStatus::QvInvalidArgument;
    }
    match simulator_for(&(*strategy).inner, fidelity, eom_flip) {
        Ok(sim) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            *m_pass_out = sim.run_task_b(&mut rng, n_copies);
            QvStatus::QvOk
        }
        Err(e) => status_of(&e),
    }
}

/// Task A on a diagonal-mixture device: writes the 1-based index of the
/// first failed copy, or 0 when censored at `max_copies`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qv_simulate_task_a(
    strategy: *const QvStrategy,
    fidelity: f64,
    eom_flip: f64,
    seed: u64,
    max_copies: u64,
    n_first_out: *mut u64,
) -> QvStatus {
    if strategy.is_null() || n_first_out.is_null() {
        return QvStatus::QvNullPointer;
    }
    if !(0.0..=1.0).contains(&fidelity) || max_copies == 0 {
        return QvStatus::QvInvalidArgument;
    }
    match simulator_for(&(*strategy).inner, fidelity, eom_flip) {
        Ok(sim) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            *n_first_out = match sim.run_task_a(&mut rng, max_copies) {
                TaskAOutcome::FirstFail(n) => n,
                TaskAOutcome::Censored => 0,
            };
            QvStatus::QvOk
        }
        Err(e) => status_of(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn new_strategy(family: QvFamily, theta: f64, phi: f64) -> *mut QvStrategy {
        let mut handle: *mut QvStrategy = std::ptr::null_mut();
        let status = unsafe {
            qv_strategy_new(family, theta, phi, QvFrame::QvFrameExperimental, &mut handle)
        };
        assert_eq!(status, QvStatus::QvOk);
        handle
    }

    #[test]
    fn strategy_lifecycle_and_spectrum() {
        let s = new_strategy(QvFamily::QvFamilyNonadaptive, 0.6419, 3.2034);
        let mut sp = QvSpectrum {
            lambda2: 0.0,
            lambda4: 0.0,
            weight: 0.0,
            delta_eps_coefficient: 0.0,
        };
        assert_eq!(unsafe { qv_strategy_spectrum(s, &mut sp) }, QvStatus::QvOk);
        assert!((sp.lambda2 - 0.596700888942299).abs() < 1e-12);
        assert!((sp.weight - 0.209897333173103).abs() < 1e-12);
        assert_eq!(unsafe { qv_strategy_test_count(s) }, 4);
        unsafe { qv_strategy_free(s) };
    }

    #[test]
    fn regime_and_argument_errors() {
        let mut handle: *mut QvStrategy = std::ptr::null_mut();
        // Bell point rejected for the nonadaptive family
        let status = unsafe {
            qv_strategy_new(
                QvFamily::QvFamilyNonadaptive,
                std::f64::consts::FRAC_PI_4,
                0.0,
                QvFrame::QvFrameTheoretical,
                &mut handle,
            )
        };
        assert_eq!(status, QvStatus::QvRegimeError);

        let status = unsafe {
            qv_strategy_new(
                QvFamily::QvFamilyNonadaptive,
                7.0,
                0.0,
                QvFrame::QvFrameTheoretical,
                &mut handle,
            )
        };
        assert_eq!(status, QvStatus::QvInvalidArgument);

        let s = new_strategy(QvFamily::QvFamilyNonadaptive, 0.6419, 3.2034);
        let mut n = 0u64;
        assert_eq!(
            unsafe { qv_required_copies(s, 1.5, 0.01, &mut n) },
            QvStatus::QvInvalidArgument
        );
        assert_eq!(
            unsafe { qv_required_copies(std::ptr::null(), 0.01, 0.01, &mut n) },
            QvStatus::QvNullPointer
        );
        unsafe { qv_strategy_free(s) };
    }

    #[test]
    fn copy_counts_match_library() {
        let s = new_strategy(QvFamily::QvFamilyNonadaptive, 0.6419, 3.2034);
        let mut n = 0u64;
        assert_eq!(unsafe { qv_required_copies(s, 0.0034, 0.01, &mut n) }, QvStatus::QvOk);
        assert_eq!(n, 3357);
        unsafe { qv_strategy_free(s) };

        let s = new_strategy(QvFamily::QvFamilyAdaptive, 0.6419, 3.2034);
        assert_eq!(unsafe { qv_required_copies(s, 0.0121, 0.01, &mut n) }, QvStatus::QvOk);
        assert_eq!(n, 623);
        unsafe { qv_strategy_free(s) };

        let s = new_strategy(QvFamily::QvFamilyProduct, 0.6419, 0.0);
        assert_eq!(unsafe { qv_required_copies(s, 0.01, 0.01, &mut n) }, QvStatus::QvOk);
        assert_eq!(n, 459);
        unsafe { qv_strategy_free(s) };
    }

    #[test]
    fn statistics_functions() {
        assert!((qv_kl_divergence(0.9986, 0.999597) - 7.469047054e-4).abs() < 1e-12);
        assert!(qv_kl_divergence(0.5, 0.5) == 0.0);
        assert!((qv_cumulative_confidence(1.371216977596e-3, 3357) - 0.990012).abs() < 1e-6);

        let mut delta = 0.0;
        let mut side = QvSide::QvSideSmall;
        let st = unsafe { qv_chernoff_delta(9986, 10_000, 0.9986, &mut delta, &mut side) };
        assert_eq!(st, QvStatus::QvOk);
        assert!((delta - 1.0).abs() < 1e-12);
        assert_eq!(side, QvSide::QvSideLarge);
        assert_eq!(
            unsafe { qv_chernoff_delta(11, 10, 0.5, &mut delta, &mut side) },
            QvStatus::QvInvalidArgument
        );
    }

    #[test]
    fn epsilon_solver_through_abi() {
        let s = new_strategy(QvFamily::QvFamilyNonadaptive, 0.6419, 3.2034);
        let mut eps = 0.0;
        let st = unsafe { qv_epsilon_at(s, 1_000_000_000, 0.9986, 0.10, QvSide::QvSideLarge, &mut eps) };
        assert_eq!(st, QvStatus::QvOk);
        assert!((eps - 0.003471369).abs() < 1e-5);
        // no root at n = 1 for this pass rate
        let st = unsafe { qv_epsilon_at(s, 1, 0.9986, 0.10, QvSide::QvSideLarge, &mut eps) };
        assert_eq!(st, QvStatus::QvNoRoot);
        unsafe { qv_strategy_free(s) };
    }

    #[test]
    fn simulation_deterministic_in_seed() {
        let s = new_strategy(QvFamily::QvFamilyAdaptive, 0.6419, 3.2034);
        let mut m1 = 0u64;
        let mut m2 = 0u64;
        unsafe {
            assert_eq!(
                qv_simulate_task_b(s, 0.9964, 0.0062, 42, 100_000, &mut m1),
                QvStatus::QvOk
            );
            assert_eq!(
                qv_simulate_task_b(s, 0.9964, 0.0062, 42, 100_000, &mut m2),
                QvStatus::QvOk
            );
        }
        assert_eq!(m1, m2);
        let rate = m1 as f64 / 100_000.0;
        assert!((rate - 0.9914).abs() < 0.002, "rate {rate}");

        let mut n_first = 0u64;
        unsafe {
            assert_eq!(
                qv_simulate_task_a(s, 1.0, 0.0, 7, 500, &mut n_first),
                QvStatus::QvOk
            );
        }
        assert_eq!(n_first, 0, "exact target never fails");
        unsafe { qv_strategy_free(s) };
    }

    #[test]
    fn header_generated() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qverif.h");
        let text = std::fs::read_to_string(header).expect("cbindgen header exists");
        for symbol in [
            "qv_strategy_new",
            "qv_strategy_free",
            "qv_required_copies",
            "qv_chernoff_delta",
            "qv_epsilon_at",
            "QvSpectrum",
            "QvStatus",
        ] {
            assert!(text.contains(symbol), "header missing {symbol}");
        }
    }
}
