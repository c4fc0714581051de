//! Target-state family and the local frame change between its two forms.
//!
//! The theoretical form is sinθ|HH⟩ + cosθ|VV⟩; the experimentally natural
//! form is sinθ|HV⟩ + e^{iφ}cosθ|VH⟩. The two are related by the local
//! unitary 𝟙 ⊗ κ with κ = [[0, e^{iφ}], [1, 0]], and every strategy below
//! carries over by conjugation with that unitary.

use crate::error::{QvError, Result};
use crate::linalg::{projector, tensor_mat, C64, HermMat4, Ket4, Mat2, Mat4};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

/// Which form of the target state (and strategies) to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// sinθ|HH⟩ + cosθ|VV⟩; φ carried but unused.
    Theoretical,
    /// sinθ|HV⟩ + e^{iφ}cosθ|VH⟩.
    Experimental,
}

/// Target-state parameters θ ∈ [0, π/2], φ ∈ [0, 2π).
///
/// θ ∈ {0, π/4, π/2} are boundary cases: the four-setting strategy is not
/// defined there and strategy construction dispatches to the Bell / product
/// families instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetParams {
    theta: f64,
    phi: f64,
}

/// Tolerance for boundary-θ dispatch.
pub const BOUNDARY_TOL: f64 = 1e-9;

impl TargetParams {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&theta) || !theta.is_finite() {
            return Err(QvError::OutOfRange {
                name: "theta",
                value: theta,
                range: "[0, π/2]",
            });
        }
        if !(0.0..TAU).contains(&phi) || !phi.is_finite() {
            return Err(QvError::OutOfRange {
                name: "phi",
                value: phi,
                range: "[0, 2π)",
            });
        }
        Ok(Self { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn near_bell_point(&self) -> bool {
        (self.theta - FRAC_PI_4).abs() < BOUNDARY_TOL
    }

    pub fn near_product_point(&self) -> bool {
        self.theta < BOUNDARY_TOL || (FRAC_PI_2 - self.theta) < BOUNDARY_TOL
    }
}

/// sinθ|HH⟩ + cosθ|VV⟩ (φ ignored).
pub fn make_target_theoretical(p: &TargetParams) -> Ket4 {
    let (s, c) = p.theta.sin_cos();
    Ket4::new([
        C64::new(s, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(c, 0.0),
    ])
    .expect("sinθ, cosθ cannot both vanish")
}

/// sinθ|HV⟩ + e^{iφ}cosθ|VH⟩.
pub fn make_target_experimental(p: &TargetParams) -> Ket4 {
    let (s, c) = p.theta.sin_cos();
    let phase = C64::from_polar(1.0, p.phi);
    Ket4::new([
        C64::new(0.0, 0.0),
        C64::new(s, 0.0),
        phase * c,
        C64::new(0.0, 0.0),
    ])
    .expect("sinθ, cosθ cannot both vanish")
}

pub fn make_target(p: &TargetParams, frame: Frame) -> Ket4 {
    match frame {
        Frame::Theoretical => make_target_theoretical(p),
        Frame::Experimental => make_target_experimental(p),
    }
}

/// κ = [[0, e^{iφ}], [1, 0]] on Bob's qubit.
pub fn kappa(phi: f64) -> Mat2 {
    let zero = C64::new(0.0, 0.0);
    Mat2([
        [zero, C64::from_polar(1.0, phi)],
        [C64::new(1.0, 0.0), zero],
    ])
}

/// 𝟙 ⊗ κ: maps the theoretical target onto the experimental one.
pub fn frame_unitary(phi: f64) -> Mat4 {
    tensor_mat(&Mat2::identity(), &kappa(phi))
}

/// The orthonormal eigenbasis all closed forms are expressed in.
///
/// In the theoretical frame this is {|Ψ⟩, |Ψ⊥⟩, |HV⟩, |VH⟩} with
/// |Ψ⊥⟩ = cosθ|HH⟩ − sinθ|VV⟩; in the experimental frame every vector is
/// carried over by `frame_unitary`. The fourth vector is the one the
/// adaptive strategy's smallest eigenvalue λ₄ attaches to.
#[derive(Debug, Clone, Copy)]
pub struct VerifierBasis {
    pub psi: Ket4,
    pub psi_perp: Ket4,
    pub hv: Ket4,
    pub vh: Ket4,
}

impl VerifierBasis {
    pub fn new(p: &TargetParams, frame: Frame) -> Self {
        let (s, c) = p.theta.sin_cos();
        let psi = make_target_theoretical(p);
        let psi_perp = Ket4::new([
            C64::new(c, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-s, 0.0),
        ])
        .expect("cosθ, sinθ cannot both vanish");
        let hv = Ket4::basis(1);
        let vh = Ket4::basis(2);
        match frame {
            Frame::Theoretical => Self { psi, psi_perp, hv, vh },
            Frame::Experimental => {
                let u = frame_unitary(p.phi);
                Self {
                    psi: u.apply(&psi),
                    psi_perp: u.apply(&psi_perp),
                    hv: u.apply(&hv),
                    vh: u.apply(&vh),
                }
            }
        }
    }

    pub fn vectors(&self) -> [&Ket4; 4] {
        [&self.psi, &self.psi_perp, &self.hv, &self.vh]
    }

    /// Σᵢ |bᵢ⟩⟨bᵢ|, which must equal 𝟙.
    pub fn completeness(&self) -> HermMat4 {
        let mut acc = HermMat4::zero();
        for b in self.vectors() {
            acc = &acc + &projector(b);
        }
        acc
    }
}
