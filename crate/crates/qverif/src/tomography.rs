//! Nine-setting Pauli tomography baseline.
//!
//! Copies are split evenly across the 3×3 Pauli settings (remainder to the
//! earliest settings), outcomes sampled by the Born rule. Reconstruction is
//! linear inversion ρ̂ = ¼ Σ Êᵢⱼ σᵢ⊗σⱼ followed by a physicality projection
//! (clip negative eigenvalues, renormalize the trace).
//!
//! Fidelity estimates — including the bootstrap spread and the ε_tomo curve —
//! use the raw linear-inversion expectation values: the fidelity is linear in
//! the measured frequencies, so that estimator is exactly unbiased, whereas
//! fidelities taken through the clipping projection are biased low for
//! near-pure states until the per-setting noise drops below the smallest
//! eigenvalues.

use crate::error::{QvError, Result};
use crate::linalg::{herm_eigen, projector, tensor_ket, C64, DensityMatrix, HermMat4, Ket2, Ket4};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Measurement axes, in setting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

pub const AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Eigenbasis of a Pauli axis, +1 eigenvector first.
pub fn axis_basis(axis: Axis) -> [Ket2; 2] {
    let inv = 1.0 / 2f64.sqrt();
    let i = C64::new(0.0, 1.0);
    let c = |re: f64| C64::new(re, 0.0);
    match axis {
        Axis::X => [
            Ket2::new([c(inv), c(inv)]).unwrap(),
            Ket2::new([c(inv), c(-inv)]).unwrap(),
        ],
        Axis::Y => [
            Ket2::new([c(inv), i * inv]).unwrap(),
            Ket2::new([c(inv), -i * inv]).unwrap(),
        ],
        Axis::Z => [Ket2::h(), Ket2::v()],
    }
}

/// Counts per setting (a, b) and outcome pair; outcome index is
/// 2·(Alice −) + (Bob −), i.e. 0 → (+,+), 1 → (+,−), 2 → (−,+), 3 → (−,−).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomoDataset {
    pub counts: [[[u64; 4]; 3]; 3],
    pub copies_total: u64,
}

impl TomoDataset {
    pub fn setting_total(&self, i: usize, j: usize) -> u64 {
        self.counts[i][j].iter().sum()
    }
}

fn outcome_probabilities(sigma: &DensityMatrix, i: usize, j: usize) -> [f64; 4] {
    let ba = axis_basis(AXES[i]);
    let bb = axis_basis(AXES[j]);
    let mut p = [0.0; 4];
    for (o, slot) in p.iter_mut().enumerate() {
        let ket = tensor_ket(&ba[o / 2], &bb[o % 2]);
        *slot = sigma.fidelity(&ket).clamp(0.0, 1.0);
    }
    p
}

fn sample_multinomial(n: u64, probs: &[f64; 4], rng: &mut impl Rng) -> [u64; 4] {
    let mut counts = [0u64; 4];
    let mut remaining = n;
    let mut p_rest: f64 = probs.iter().sum();
    for o in 0..3 {
        if remaining == 0 {
            break;
        }
        let p_cond = if p_rest > 0.0 { (probs[o] / p_rest).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, p_cond)
            .expect("conditional probability in [0,1]")
            .sample(rng);
        counts[o] = draw;
        remaining -= draw;
        p_rest -= probs[o];
    }
    counts[3] = remaining;
    counts
}

/// Born-rule sampling of the 9-setting dataset; copies are allocated
/// ⌊n/9⌋ per setting with the remainder going to the earliest settings.
pub fn simulate_tomography(
    sigma: &DensityMatrix,
    n_copies: u64,
    rng: &mut impl Rng,
) -> Result<TomoDataset> {
    if n_copies < 9 {
        return Err(QvError::OutOfRange {
            name: "n_copies",
            value: n_copies as f64,
            range: "[9, ∞)",
        });
    }
    let base = n_copies / 9;
    let rem = (n_copies % 9) as usize;
    let mut counts = [[[0u64; 4]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let k = 3 * i + j;
            let alloc = base + (k < rem) as u64;
            let probs = outcome_probabilities(sigma, i, j);
            counts[i][j] = sample_multinomial(alloc, &probs, rng);
        }
    }
    Ok(TomoDataset { counts, copies_total: n_copies })
}

/// Empirical Pauli expectation values Êᵢⱼ (index 0 = identity).
///
/// Correlators come from their own setting; single-qubit marginals pool the
/// three settings that measure that Pauli on that side.
pub fn expectations(data: &TomoDataset) -> Result<[[f64; 4]; 4]> {
    let mut e = [[0.0; 4]; 4];
    e[0][0] = 1.0;
    for i in 0..3 {
        for j in 0..3 {
            let c = &data.counts[i][j];
            let n = data.setting_total(i, j);
            if n == 0 {
                return Err(QvError::FitFailed {
                    reason: format!("empty tomography setting ({i}, {j})"),
                });
            }
            e[i + 1][j + 1] =
                (c[0] as f64 - c[1] as f64 - c[2] as f64 + c[3] as f64) / n as f64;
        }
    }
    for a in 0..3 {
        let (mut num_a, mut num_b, mut den) = (0.0, 0.0, 0.0);
        for other in 0..3 {
            let ca = &data.counts[a][other];
            num_a += (ca[0] + ca[1]) as f64 - (ca[2] + ca[3]) as f64;
            let cb = &data.counts[other][a];
            num_b += (cb[0] + cb[2]) as f64 - (cb[1] + cb[3]) as f64;
            den += data.setting_total(a, other) as f64;
        }
        e[a + 1][0] = num_a / den;
        e[0][a + 1] = num_b / den;
    }
    Ok(e)
}

/// ¼ Σ Eᵢⱼ σᵢ⊗σⱼ, assembled from Pauli eigenprojectors. Hermitian but not
/// necessarily positive.
pub fn linear_inversion(e: &[[f64; 4]; 4]) -> HermMat4 {
    // σ_a = P₊ − P₋ per axis; identity = P₊ + P₋ of any axis
    let mut single = Vec::with_capacity(4);
    let z = axis_basis(Axis::Z);
    let id2: [(Ket2, f64); 2] = [(z[0], 1.0), (z[1], 1.0)];
    single.push(id2);
    for axis in AXES {
        let b = axis_basis(axis);
        single.push([(b[0], 1.0), (b[1], -1.0)]);
    }
    let mut acc = HermMat4::zero();
    for i in 0..4 {
        for j in 0..4 {
            if e[i][j] == 0.0 {
                continue;
            }
            for (ka, sa) in &single[i] {
                for (kb, sb) in &single[j] {
                    let w = 0.25 * e[i][j] * sa * sb;
                    acc = &acc + &(&projector(&tensor_ket(ka, kb)) * w);
                }
            }
        }
    }
    acc
}

/// Physicality projection: clip negative eigenvalues to zero and renormalize
/// the trace to one.
pub fn project_physical(m: &HermMat4) -> Result<DensityMatrix> {
    let eig = herm_eigen(m);
    let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total <= 0.0 {
        return Err(QvError::NotDensityMatrix {
            reason: "all eigenvalues non-positive after clipping".into(),
        });
    }
    let mut acc = HermMat4::zero();
    for (w, vec) in clipped.iter().zip(&eig.vectors) {
        acc = &acc + &(&projector(vec) * (w / total));
    }
    DensityMatrix::new(acc)
}

/// Linear inversion + physicality projection.
pub fn reconstruct(data: &TomoDataset) -> Result<DensityMatrix> {
    project_physical(&linear_inversion(&expectations(data)?))
}

/// Reconstruction from exactly known expectation values (no sampling step).
pub fn reconstruct_from_expectations(e: &[[f64; 4]; 4]) -> Result<DensityMatrix> {
    project_physical(&linear_inversion(e))
}

/// Unbiased fidelity estimate ⟨ψ|ρ̂_lin|ψ⟩ from the raw linear inversion.
pub fn fidelity_linear(data: &TomoDataset, target: &Ket4) -> Result<f64> {
    Ok(linear_inversion(&expectations(data)?).expectation(target))
}

/// Bootstrap standard deviation of the linear fidelity estimate over
/// multinomial resamples of the per-setting counts.
///
/// A dataset whose settings are all single-outcome has zero bootstrap
/// spread; the result is floored at 1/(2·copies_total) so downstream
/// Gaussian tails stay defined.
pub fn bootstrap_df(
    data: &TomoDataset,
    target: &Ket4,
    n_resamples: u32,
    rng: &mut impl Rng,
) -> Result<f64> {
    if n_resamples < 50 {
        return Err(QvError::OutOfRange {
            name: "n_resamples",
            value: n_resamples as f64,
            range: "[50, ∞)",
        });
    }
    let mut fs = Vec::with_capacity(n_resamples as usize);
    let mut resampled = data.clone();
    for _ in 0..n_resamples {
        for i in 0..3 {
            for j in 0..3 {
                let n = data.setting_total(i, j);
                let mut probs = [0.0; 4];
                for (o, p) in probs.iter_mut().enumerate() {
                    *p = data.counts[i][j][o] as f64 / n as f64;
                }
                resampled.counts[i][j] = sample_multinomial(n, &probs, rng);
            }
        }
        fs.push(fidelity_linear(&resampled, target)?);
    }
    let mean = fs.iter().sum::<f64>() / fs.len() as f64;
    let var = fs.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (fs.len() - 1) as f64;
    Ok(var.sqrt().max(0.5 / data.copies_total as f64))
}

/// Which case the tomographic confidence asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Assertion {
    /// Case 1 — fidelity above 1−ε; δ is the mass below the threshold.
    Good,
    /// Case 2 — fidelity at or below 1−ε; δ is the mass above it.
    Bad,
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Gaussian-tail failure probability of the asserted case under
/// Normal(F, ΔF): the mass on the wrong side of 1−ε.
pub fn tomo_confidence(f: f64, df: f64, epsilon: f64, assertion: Assertion) -> f64 {
    let z = (f - (1.0 - epsilon)) / df;
    match assertion {
        Assertion::Good => normal_cdf(-z),
        Assertion::Bad => normal_cdf(z),
    }
}
