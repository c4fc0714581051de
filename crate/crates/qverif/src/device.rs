//! Fake-state device models and per-copy measurement simulation.
//!
//! A device emits i.i.d. copies of a fixed state σ. Each copy is measured
//! with a randomly drawn setting of the chosen strategy: nonadaptive settings
//! are plain Born-rule binary tests; adaptive settings measure Alice first
//! and select Bob's accept vector from her outcome (feed-forward). One
//! simulated measurement corresponds to one coincidence count — the
//! timetag/coincidence-window machinery of a real photonic setup is
//! abstracted away.
//!
//! The EOM imperfection of the adaptive measurement chain is modeled as a
//! post-measurement pass→fail flip with a fixed probability, applied to
//! every adaptive-strategy measurement.

use crate::error::{QvError, Result};
use crate::linalg::{
    projector, projector2, tensor_ket, tensor_mat, trace_product, DensityMatrix, HermMat4,
    Mat2,
};
use crate::strategy::{AdaptiveTest, BinaryTest, Strategy, StrategyFamily, Test};
use rand::Rng;

/// What state the device emits.
#[derive(Debug, Clone)]
pub enum DeviceKind {
    /// The target state itself.
    ExactTarget,
    /// Σ pᵢ |bᵢ⟩⟨bᵢ| over the verifier basis (ψ, ψ⊥, hv, vh); fidelity is
    /// exactly p₁.
    DiagonalMixture([f64; 4]),
    /// v·|ψ⟩⟨ψ| + (1−v)·𝟙/4.
    Werner(f64),
    /// Any explicitly given density matrix.
    Explicit(HermMat4),
}

/// Device model: emitted state plus the adaptive-only EOM flip probability.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    pub kind: DeviceKind,
    pub eom_flip: f64,
}

impl DeviceModel {
    pub fn new(kind: DeviceKind) -> Self {
        Self { kind, eom_flip: 0.0 }
    }

    /// Diagonal mixture with the infidelity budget split evenly over the
    /// three orthogonal directions.
    pub fn from_fidelity(fidelity: f64) -> Self {
        let rest = (1.0 - fidelity) / 3.0;
        Self::new(DeviceKind::DiagonalMixture([fidelity, rest, rest, rest]))
    }

    pub fn with_eom_flip(mut self, flip: f64) -> Self {
        self.eom_flip = flip;
        self
    }

    /// The emitted density matrix, in the strategy's frame.
    pub fn realize(&self, strategy: &Strategy) -> Result<DensityMatrix> {
        match &self.kind {
            DeviceKind::ExactTarget => Ok(DensityMatrix::from_pure(strategy.target())),
            DeviceKind::DiagonalMixture(p) => {
                let sum: f64 = p.iter().sum();
                if p.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-10 {
                    return Err(QvError::NotDensityMatrix {
                        reason: format!("mixture weights {p:?} (sum {sum})"),
                    });
                }
                let b = strategy.basis();
                let m = &(&(&projector(&b.psi) * p[0]) + &(&projector(&b.psi_perp) * p[1]))
                    + &(&(&projector(&b.hv) * p[2]) + &(&projector(&b.vh) * p[3]));
                DensityMatrix::new(m)
            }
            DeviceKind::Werner(v) => {
                if !(0.0..=1.0).contains(v) {
                    return Err(QvError::OutOfRange {
                        name: "visibility",
                        value: *v,
                        range: "[0, 1]",
                    });
                }
                let m = &(&projector(strategy.target()) * *v)
                    + &(&HermMat4::identity() * ((1.0 - v) / 4.0));
                DensityMatrix::new(m)
            }
            DeviceKind::Explicit(m) => DensityMatrix::new(*m),
        }
    }
}

/// Per-copy trace of one measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunRecord {
    pub copy_index: u64,
    /// Index into the strategy's test list.
    pub setting: u8,
    /// Alice's outcome; present exactly for the feed-forward settings.
    pub alice: Option<bool>,
    pub passed: bool,
}

/// Outcome of a Task A round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskAOutcome {
    /// 1-based index of the first failed copy.
    FirstFail(u64),
    /// No failure within the copy budget.
    Censored,
}

/// Single-shot Born sampling of a binary test. One uniform draw.
pub fn measure_nonadaptive(
    sigma: &DensityMatrix,
    test: &BinaryTest,
    rng: &mut impl Rng,
) -> Result<bool> {
    let p = born_probability(trace_product(&test.pass_projector, sigma.matrix()))?;
    Ok(rng.random::<f64>() < p)
}

/// Two-stage feed-forward sampling: Alice's outcome, then Bob's pass bit.
///
/// The unconditional pass probability equals tr(T̃σ) with T̃ the effective
/// projector of the test; a vanishing Alice branch is treated as a direct
/// fail (no division by zero).
pub fn measure_adaptive(
    sigma: &DensityMatrix,
    test: &AdaptiveTest,
    rng: &mut impl Rng,
) -> Result<(bool, bool)> {
    let (p0, cond) = adaptive_branch_probabilities(sigma, test)?;
    let alice_second = !(rng.random::<f64>() < p0);
    let p_pass = cond[alice_second as usize];
    let passed = rng.random::<f64>() < p_pass;
    Ok((alice_second, passed))
}

/// (P(Alice = first outcome), [P(pass | outcome)]) for an adaptive test.
fn adaptive_branch_probabilities(
    sigma: &DensityMatrix,
    test: &AdaptiveTest,
) -> Result<(f64, [f64; 2])> {
    let mut marginals = [0.0; 2];
    let mut joint = [0.0; 2];
    for a in 0..2 {
        let alice_proj = tensor_mat(&projector2(&test.alice_basis[a]), &Mat2::identity());
        let alice_proj =
            HermMat4::new(alice_proj.0).expect("projector tensor identity is Hermitian");
        marginals[a] = born_probability(trace_product(&alice_proj, sigma.matrix()))?;
        let accept = projector(&tensor_ket(&test.alice_basis[a], &test.bob_accept[a]));
        joint[a] = born_probability(trace_product(&accept, sigma.matrix()))?;
    }
    let cond = [
        if marginals[0] > 1e-15 { (joint[0] / marginals[0]).min(1.0) } else { 0.0 },
        if marginals[1] > 1e-15 { (joint[1] / marginals[1]).min(1.0) } else { 0.0 },
    ];
    Ok((marginals[0], cond))
}

fn born_probability(p: f64) -> Result<f64> {
    if !(-1e-10..=1.0 + 1e-10).contains(&p) {
        return Err(QvError::InvalidProbability { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

enum Sampler {
    Binary { p_pass: f64 },
    Adaptive { p_first: f64, p_pass_given: [f64; 2] },
}

/// Strategy × device with all Born probabilities precomputed, so that one
/// copy costs a couple of uniform draws regardless of the state.
pub struct Simulator {
    strategy: Strategy,
    sigma: DensityMatrix,
    eom_flip: f64,
    cumulative: Vec<f64>,
    samplers: Vec<Sampler>,
}

impl Simulator {
    pub fn new(strategy: Strategy, model: &DeviceModel) -> Result<Self> {
        if model.eom_flip != 0.0 {
            if !(0.0..=1.0).contains(&model.eom_flip) {
                return Err(QvError::OutOfRange {
                    name: "eom_flip",
                    value: model.eom_flip,
                    range: "[0, 1]",
                });
            }
            if strategy.family() != StrategyFamily::Adaptive {
                return Err(QvError::Config(
                    "eom_flip models the adaptive feed-forward chain; \
                     set it only with the adaptive family"
                        .into(),
                ));
            }
        }
        let sigma = model.realize(&strategy)?;
        let mut cumulative = Vec::with_capacity(strategy.tests().len());
        let mut samplers = Vec::with_capacity(strategy.tests().len());
        let mut acc = 0.0;
        for test in strategy.tests() {
            acc += test.selection_probability();
            cumulative.push(acc);
            samplers.push(match test {
                Test::Binary(t) => Sampler::Binary {
                    p_pass: born_probability(trace_product(&t.pass_projector, sigma.matrix()))?,
                },
                Test::Adaptive(t) => {
                    let (p_first, p_pass_given) = adaptive_branch_probabilities(&sigma, t)?;
                    Sampler::Adaptive { p_first, p_pass_given }
                }
            });
        }
        debug_assert!((acc - 1.0).abs() < 1e-9);
        Ok(Self { strategy, sigma, eom_flip: model.eom_flip, cumulative, samplers })
    }

    pub fn strategy(&self) -> &Strategy {
        &self.strategy
    }

    pub fn sigma(&self) -> &DensityMatrix {
        &self.sigma
    }

    /// Closed-form pass probability of this device, EOM flip included.
    pub fn expected_pass_rate(&self) -> f64 {
        self.strategy.pass_probability(&self.sigma) * (1.0 - self.eom_flip)
    }

    /// Draw a setting index from the selection probabilities.
    pub fn sample_setting(&self, rng: &mut impl Rng) -> usize {
        let u = rng.random::<f64>();
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.cumulative.len() - 1)
    }

    /// Measure one copy: draw a setting, measure, apply the EOM flip.
    pub fn measure_copy(&self, copy_index: u64, rng: &mut impl Rng) -> RunRecord {
        let setting = self.sample_setting(rng);
        let (alice, mut passed) = match &self.samplers[setting] {
            Sampler::Binary { p_pass } => (None, rng.random::<f64>() < *p_pass),
            Sampler::Adaptive { p_first, p_pass_given } => {
                let second = !(rng.random::<f64>() < *p_first);
                let passed = rng.random::<f64>() < p_pass_given[second as usize];
                (Some(second), passed)
            }
        };
        if passed && self.eom_flip > 0.0 && rng.random::<f64>() < self.eom_flip {
            passed = false;
        }
        RunRecord { copy_index, setting: setting as u8, alice, passed }
    }

    /// Task A: copies until the first failure, censored at `max_copies`.
    pub fn run_task_a(&self, rng: &mut impl Rng, max_copies: u64) -> TaskAOutcome {
        for i in 1..=max_copies {
            if !self.measure_copy(i, rng).passed {
                return TaskAOutcome::FirstFail(i);
            }
        }
        TaskAOutcome::Censored
    }

    /// Task B: fixed number of copies, returns the pass count.
    pub fn run_task_b(&self, rng: &mut impl Rng, n_copies: u64) -> u64 {
        (1..=n_copies)
            .filter(|&i| self.measure_copy(i, rng).passed)
            .count() as u64
    }

    /// Task B with the full per-copy record stream.
    pub fn run_task_b_recorded(&self, rng: &mut impl Rng, n_copies: u64) -> (u64, Vec<RunRecord>) {
        let mut records = Vec::with_capacity(n_copies as usize);
        let mut m_pass = 0;
        for i in 1..=n_copies {
            let r = self.measure_copy(i, rng);
            m_pass += r.passed as u64;
            records.push(r);
        }
        (m_pass, records)
    }
}
