//! Exact complex linear algebra for 2- and 4-dimensional quantum objects.
//!
//! Everything in this crate lives in a fixed computational basis:
//! single-qubit order (H, V), two-qubit order (HH, HV, VH, VV). All modules
//! share this convention; no basis permutation happens anywhere.
//!
//! Matrices are dense 2×2 / 4×4 arrays of `Complex64`. The Hermitian
//! eigensolver is a cyclic Jacobi iteration, which is exact enough (residuals
//! ~1e-14) and keeps the crate free of large-matrix dependencies.

use crate::error::{QvError, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

pub type C64 = Complex64;

/// Normalization / Hermiticity validation tolerance.
pub const NORM_TOL: f64 = 1e-12;
/// Spectral contracts: eigen reconstruction residual, orthonormality.
pub const HERM_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

// ---------------------------------------------------------------------------
// Kets
// ---------------------------------------------------------------------------

/// Normalized single-qubit state in the (H, V) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket2(pub(crate) [C64; 2]);

/// Normalized two-qubit state in the (HH, HV, VH, VV) basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ket4(pub(crate) [C64; 4]);

fn normalize<const N: usize>(mut a: [C64; N]) -> std::result::Result<[C64; N], QvError> {
    let n2: f64 = a.iter().map(|c| c.norm_sqr()).sum();
    if n2 <= 0.0 || !n2.is_finite() {
        return Err(QvError::ZeroVector);
    }
    let inv = 1.0 / n2.sqrt();
    for c in &mut a {
        *c *= inv;
    }
    Ok(a)
}

impl Ket2 {
    /// Normalizes the amplitudes; errors on the zero vector.
    pub fn new(amplitudes: [C64; 2]) -> Result<Self> {
        Ok(Self(normalize(amplitudes)?))
    }

    pub fn h() -> Self {
        Self([ONE, ZERO])
    }

    pub fn v() -> Self {
        Self([ZERO, ONE])
    }

    pub fn amplitudes(&self) -> &[C64; 2] {
        &self.0
    }

    /// ⟨self|other⟩ (conjugate-linear in `self`).
    pub fn inner(&self, other: &Ket2) -> C64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }
}

impl Ket4 {
    /// Normalizes the amplitudes; errors on the zero vector.
    pub fn new(amplitudes: [C64; 4]) -> Result<Self> {
        Ok(Self(normalize(amplitudes)?))
    }

    /// Basis ket: 0 → |HH⟩, 1 → |HV⟩, 2 → |VH⟩, 3 → |VV⟩.
    pub fn basis(index: usize) -> Self {
        let mut a = [ZERO; 4];
        a[index] = ONE;
        Self(a)
    }

    pub fn amplitudes(&self) -> &[C64; 4] {
        &self.0
    }

    /// ⟨self|other⟩ (conjugate-linear in `self`).
    pub fn inner(&self, other: &Ket4) -> C64 {
        (0..4).map(|i| self.0[i].conj() * other.0[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Kronecker product of kets in the fixed basis order.
pub fn tensor_ket(a: &Ket2, b: &Ket2) -> Ket4 {
    Ket4([
        a.0[0] * b.0[0],
        a.0[0] * b.0[1],
        a.0[1] * b.0[0],
        a.0[1] * b.0[1],
    ])
}

// ---------------------------------------------------------------------------
// Plain matrices (not necessarily Hermitian)
// ---------------------------------------------------------------------------

/// Plain 2×2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn identity() -> Self {
        Self([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn apply(&self, k: &Ket2) -> Ket2 {
        Ket2([
            self.0[0][0] * k.0[0] + self.0[0][1] * k.0[1],
            self.0[1][0] * k.0[0] + self.0[1][1] * k.0[1],
        ])
    }
}

/// Plain 4×4 complex matrix, row major. Used for the frame-change unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat4 {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self(m)
    }

    pub fn dagger(&self) -> Mat4 {
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = self.0[j][i].conj();
            }
        }
        Mat4(m)
    }

    pub fn matmul(&self, other: &Mat4) -> Mat4 {
        let mut m = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
                for (k, row) in other.0.iter().enumerate() {
                    acc += self.0[i][k] * row[j];
                }
                m[i][j] = acc;
            }
        }
        Mat4(m)
    }

    pub fn apply(&self, k: &Ket4) -> Ket4 {
        let mut a = [ZERO; 4];
        for (i, out) in a.iter_mut().enumerate() {
            for j in 0..4 {
                *out += self.0[i][j] * k.0[j];
            }
        }
        Ket4(a)
    }

    /// Max-norm deviation from unitarity, ‖U†U − 𝟙‖∞.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.dagger().matmul(self);
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { ONE } else { ZERO };
                dev = dev.max((p.0[i][j] - expect).norm());
            }
        }
        dev
    }
}

/// Kronecker product of 2×2 matrices in the fixed basis order.
pub fn tensor_mat(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = [[ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    Mat4(m)
}

// ---------------------------------------------------------------------------
// Hermitian 4×4
// ---------------------------------------------------------------------------

/// 4×4 Hermitian matrix in the (HH, HV, VH, VV) basis.
///
/// Constructors validate Hermiticity to `NORM_TOL` and symmetrize, so every
/// value of this type is exactly equal to its conjugate transpose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermMat4 {
    m: [[C64; 4]; 4],
}

impl HermMat4 {
    /// Validates ‖m − m†‖∞ < `NORM_TOL`, then symmetrizes exactly.
    pub fn new(raw: [[C64; 4]; 4]) -> Result<Self> {
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                dev = dev.max((raw[i][j] - raw[j][i].conj()).norm());
            }
        }
        if dev > NORM_TOL || !dev.is_finite() {
            return Err(QvError::NotHermitian { deviation: dev });
        }
        let mut m = raw;
        for i in 0..4 {
            m[i][i] = C64::new(raw[i][i].re, 0.0);
            for j in (i + 1)..4 {
                let avg = 0.5 * (raw[i][j] + raw[j][i].conj());
                m[i][j] = avg;
                m[j][i] = avg.conj();
            }
        }
        Ok(Self { m })
    }

    pub fn zero() -> Self {
        Self { m: [[ZERO; 4]; 4] }
    }

    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Self { m }
    }

    pub fn entries(&self) -> &[[C64; 4]; 4] {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.m[i][i].re).sum()
    }

    pub fn apply(&self, k: &Ket4) -> [C64; 4] {
        let mut a = [ZERO; 4];
        for (i, out) in a.iter_mut().enumerate() {
            for j in 0..4 {
                *out += self.m[i][j] * k.0[j];
            }
        }
        a
    }

    /// ⟨k|M|k⟩; real for Hermitian M.
    pub fn expectation(&self, k: &Ket4) -> f64 {
        let mk = self.apply(k);
        (0..4)
            .map(|i| (k.0[i].conj() * mk[i]).re)
            .sum()
    }

    /// ‖a − b‖∞ over entries.
    pub fn max_dev(&self, other: &HermMat4) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                dev = dev.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        dev
    }
}

impl Add for &HermMat4 {
    type Output = HermMat4;
    fn add(self, rhs: &HermMat4) -> HermMat4 {
        let mut m = self.m;
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += rhs.m[i][j];
            }
        }
        HermMat4 { m }
    }
}

impl Sub for &HermMat4 {
    type Output = HermMat4;
    fn sub(self, rhs: &HermMat4) -> HermMat4 {
        let mut m = self.m;
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] -= rhs.m[i][j];
            }
        }
        HermMat4 { m }
    }
}

impl Mul<f64> for &HermMat4 {
    type Output = HermMat4;
    fn mul(self, rhs: f64) -> HermMat4 {
        let mut m = self.m;
        for row in &mut m {
            for e in row {
                *e *= rhs;
            }
        }
        HermMat4 { m }
    }
}

/// Rank-one projector |k⟩⟨k|. Idempotent and Hermitian by construction.
pub fn projector(k: &Ket4) -> HermMat4 {
    let mut m = [[ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = k.0[i] * k.0[j].conj();
        }
    }
    HermMat4 { m }
}

/// Single-qubit projector |k⟩⟨k| as a `Mat2`.
pub fn projector2(k: &Ket2) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = k.0[i] * k.0[j].conj();
        }
    }
    Mat2(m)
}

/// Re tr(ab). For Hermitian a, b the product trace is real; the imaginary
/// residue stays below `NORM_TOL`.
pub fn trace_product(a: &HermMat4, b: &HermMat4) -> f64 {
    let mut acc = ZERO;
    for i in 0..4 {
        for j in 0..4 {
            acc += a.m[i][j] * b.m[j][i];
        }
    }
    debug_assert!(acc.im.abs() < NORM_TOL * acc.re.abs().max(1.0));
    acc.re
}

/// U M U†, validated back into `HermMat4`.
pub fn conjugate_by(u: &Mat4, m: &HermMat4) -> HermMat4 {
    let raw = u.matmul(&Mat4(m.m)).matmul(&u.dagger());
    HermMat4::new(raw.0).expect("unitary conjugation preserves Hermiticity")
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition (cyclic Jacobi)
// ---------------------------------------------------------------------------

/// Spectral decomposition: eigenvalues sorted descending, matching
/// orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen4 {
    pub values: [f64; 4],
    pub vectors: [Ket4; 4],
}

impl Eigen4 {
    /// Σ λᵢ |vᵢ⟩⟨vᵢ| — used to check the reconstruction contract.
    pub fn reconstruct(&self) -> HermMat4 {
        let mut acc = HermMat4::zero();
        for i in 0..4 {
            acc = &acc + &(&projector(&self.vectors[i]) * self.values[i]);
        }
        acc
    }
}

/// Eigendecomposition of a Hermitian 4×4 by cyclic Jacobi rotations.
///
/// Reconstruction residual is ~1e-14, comfortably inside the 1e-10 contract.
pub fn herm_eigen(m: &HermMat4) -> Eigen4 {
    let mut a = m.m;
    let mut v = [[ZERO; 4]; 4];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = ONE;
    }

    for _sweep in 0..60 {
        let off: f64 = (0..4)
            .flat_map(|p| ((p + 1)..4).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q].norm_sqr())
            .sum();
        if off < 1e-28 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[p][q];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let theta = 0.5 * f64::atan2(2.0 * r, a[p][p].re - a[q][q].re);
                let (s, c) = theta.sin_cos();
                let sp = phase * s;
                let spc = phase.conj() * s;

                // A <- A·U (columns p, q)
                for k in 0..4 {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = akp * c + akq * spc;
                    a[k][q] = akq * c - akp * sp;
                }
                // A <- U†·A (rows p, q)
                for k in 0..4 {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = apk * c + aqk * sp;
                    a[q][k] = aqk * c - apk * spc;
                }
                a[p][q] = ZERO;
                a[q][p] = ZERO;
                a[p][p] = C64::new(a[p][p].re, 0.0);
                a[q][q] = C64::new(a[q][q].re, 0.0);

                // V <- V·U
                for k in 0..4 {
                    let vkp = v[k][p];
                    let vkq = v[k][q];
                    v[k][p] = vkp * c + vkq * spc;
                    v[k][q] = vkq * c - vkp * sp;
                }
            }
        }
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| a[j][j].re.partial_cmp(&a[i][i].re).unwrap());

    let mut values = [0.0; 4];
    let mut vectors = [Ket4::basis(0); 4];
    for (slot, &col) in order.iter().enumerate() {
        values[slot] = a[col][col].re;
        let mut amps = [ZERO; 4];
        for k in 0..4 {
            amps[k] = v[k][col];
        }
        vectors[slot] = Ket4::new(amps).expect("Jacobi columns stay unit norm");
    }
    Eigen4 { values, vectors }
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Validated density matrix: Hermitian, unit trace, positive semidefinite
/// (eigenvalues ≥ −`HERM_TOL`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    mat: HermMat4,
}

impl DensityMatrix {
    pub fn new(mat: HermMat4) -> Result<Self> {
        let tr = mat.trace();
        if (tr - 1.0).abs() > HERM_TOL {
            return Err(QvError::NotDensityMatrix {
                reason: format!("trace = {tr}"),
            });
        }
        let min = herm_eigen(&mat).values[3];
        if min < -HERM_TOL {
            return Err(QvError::NotDensityMatrix {
                reason: format!("minimum eigenvalue = {min:.3e}"),
            });
        }
        Ok(Self { mat })
    }

    pub fn from_pure(k: &Ket4) -> Self {
        Self { mat: projector(k) }
    }

    pub fn matrix(&self) -> &HermMat4 {
        &self.mat
    }

    /// Fidelity ⟨k|ρ|k⟩ to a pure target.
    pub fn fidelity(&self, k: &Ket4) -> f64 {
        self.mat.expectation(k)
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    pub(crate) fn random_hermitian(rng: &mut impl Rng) -> HermMat4 {
        let mut raw = [[ZERO; 4]; 4];
        for i in 0..4 {
            raw[i][i] = C64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in (i + 1)..4 {
                let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                raw[i][j] = z;
                raw[j][i] = z.conj();
            }
        }
        HermMat4::new(raw).unwrap()
    }

    /// Ginibre construction: G G† / tr.
    pub(crate) fn random_density(rng: &mut impl Rng) -> DensityMatrix {
        let mut g = [[ZERO; 4]; 4];
        for row in &mut g {
            for e in row.iter_mut() {
                *e = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            }
        }
        let mut raw = [[ZERO; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = ZERO;
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
}
