//! The four verification strategy families.
//!
//! A strategy is a probability-weighted list of binary tests. Each test
//! passes the target state with certainty; the strategy operator
//! Ω = Σ pₗ Mₗ then has the target as its top eigenvector with eigenvalue 1,
//! and its second-largest eigenvalue λ₂ controls how fast bad states are
//! caught: a state with fidelity ≤ 1−ε passes a random test with probability
//! at most 1 − (1−λ₂)ε.
//!
//! Families:
//! - nonadaptive: four local projective settings, α(θ) = (2−sin2θ)/(4+sin2θ),
//!   λ₂ = (2+sin2θ)/(4+sin2θ); optimal for θ ∈ (0,π/4)∪(π/4,π/2).
//! - adaptive (one-way feed-forward): three settings, β(θ) = cos²θ/(1+cos²θ),
//!   λ₂ = β, λ₄ = sin²θ/(1+cos²θ); Bob's conditioned accept vectors are
//!   deliberately non-orthogonal (overlap |cos2θ|).
//! - bell: three mutually unbiased local settings at θ=π/4, λ₂ = 1/3.
//! - product: the single projector onto |HV⟩, λ₂ = 0.
//!
//! All closed forms are cross-checked against the numeric spectrum of the
//! assembled Ω in the tests.

use crate::error::{QvError, Result};
use crate::linalg::{projector, tensor_ket, C64, DensityMatrix, HermMat4, Ket2, Ket4};
use crate::state::{kappa, make_target, Frame, TargetParams, VerifierBasis};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Strategy family tag, also carried inside `StrategySpectrum`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyFamily {
    Nonadaptive,
    Adaptive,
    Bell,
    Product,
}

/// Which Bell state the three-setting strategy is built for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BellVariant {
    /// (|HH⟩ + |VV⟩)/√2, theoretical frame.
    PhiPlus,
    /// (|HV⟩ − |VH⟩)/√2, experimental frame (θ=π/4, φ=π).
    PhiMinus,
}

/// Analytic spectral data of the assembled strategy operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySpectrum {
    pub family: StrategyFamily,
    /// Second-largest eigenvalue of Ω.
    pub lambda2: f64,
    /// Smallest eigenvalue of Ω (equals λ₂ except for the adaptive family).
    pub lambda4: f64,
    /// Selection weight of the ZZ-type setting: α(θ), β(θ), 1/3, or 1.
    pub weight: f64,
}

impl StrategySpectrum {
    /// 1 − λ₂: the coefficient in Δ_ε = (1−λ₂)·ε.
    pub fn delta_eps_coefficient(&self) -> f64 {
        1.0 - self.lambda2
    }
}

/// A local projective binary test: pass projector plus selection probability.
#[derive(Debug, Clone)]
pub struct BinaryTest {
    pub label: String,
    pub selection_probability: f64,
    pub pass_projector: HermMat4,
    /// Human-readable measurement bases (what each party dials in).
    pub description: String,
}

/// A feed-forward test: Alice measures in an orthogonal basis; her outcome
/// selects which (generally non-orthogonal) vector Bob must land on to pass.
#[derive(Debug, Clone)]
pub struct AdaptiveTest {
    pub label: String,
    pub selection_probability: f64,
    pub alice_basis: [Ket2; 2],
    pub bob_accept: [Ket2; 2],
}

impl AdaptiveTest {
    /// Σₐ |aₐ⟩⟨aₐ| ⊗ |bₐ⟩⟨bₐ| — the operator whose trace against σ is the
    /// unconditional pass probability of the two-stage measurement.
    pub fn effective_projector(&self) -> HermMat4 {
        let mut acc = HermMat4::zero();
        for a in 0..2 {
            let ket = tensor_ket(&self.alice_basis[a], &self.bob_accept[a]);
            acc = &acc + &projector(&ket);
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub enum Test {
    Binary(BinaryTest),
    Adaptive(AdaptiveTest),
}

impl Test {
    pub fn label(&self) -> &str {
        match self {
            Test::Binary(t) => &t.label,
            Test::Adaptive(t) => &t.label,
        }
    }

    pub fn selection_probability(&self) -> f64 {
        match self {
            Test::Binary(t) => t.selection_probability,
            Test::Adaptive(t) => t.selection_probability,
        }
    }

    pub fn pass_projector(&self) -> HermMat4 {
        match self {
            Test::Binary(t) => t.pass_projector,
            Test::Adaptive(t) => t.effective_projector(),
        }
    }
}

/// A fully constructed verification strategy.
#[derive(Debug, Clone)]
pub struct Strategy {
    family: StrategyFamily,
    frame: Frame,
    params: TargetParams,
    target: Ket4,
    basis: VerifierBasis,
    tests: Vec<Test>,
    spectrum: StrategySpectrum,
}

fn ket2(h: C64, v: C64) -> Ket2 {
    Ket2::new([h, v]).expect("strategy basis kets are nonzero")
}

/// "(a+bi)|H⟩ + (c+di)|V⟩" with four decimals.
pub fn format_ket2(k: &Ket2) -> String {
    let a = k.amplitudes();
    format!(
        "({:+.4}{:+.4}i)|H⟩ + ({:+.4}{:+.4}i)|V⟩",
        a[0].re, a[0].im, a[1].re, a[1].im
    )
}

/// |H⟩, |V⟩ component pair for the printed uₖ/vₖ vectors.
fn uv_component_amps(theta: f64) -> (f64, f64) {
    // 1/√(1+tanθ) and 1/√(1+cotθ)
    let t = theta.tan();
    ((1.0 + t).sqrt().recip(), (1.0 + t.recip()).sqrt().recip())
}

fn polar(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

impl Strategy {
    /// Four-setting locally projective strategy.
    ///
    /// θ must lie strictly inside (0,π/4) ∪ (π/4,π/2); at the boundaries the
    /// caller is directed to the `bell` / `product` families instead.
    pub fn nonadaptive(params: TargetParams, frame: Frame) -> Result<Self> {
        if params.near_product_point() {
            return Err(QvError::Regime {
                theta: params.theta(),
                family: "nonadaptive",
                hint: "product point: use the product strategy",
            });
        }
        if params.near_bell_point() {
            return Err(QvError::Regime {
                theta: params.theta(),
                family: "nonadaptive",
                hint: "maximally entangled point: use the bell strategy",
            });
        }

        let theta = params.theta();
        let s2 = (2.0 * theta).sin();
        let alpha = (2.0 - s2) / (4.0 + s2);
        let lambda2 = (2.0 + s2) / (4.0 + s2);

        let (ah, av) = uv_component_amps(theta);
        let one = C64::new(1.0, 0.0);
        let u_phases = [polar(2.0 * PI / 3.0), polar(4.0 * PI / 3.0), one];
        let v_phases = [polar(PI / 3.0), polar(5.0 * PI / 3.0), -one];

        let mut tests = vec![Test::Binary(BinaryTest {
            label: "P0".into(),
            selection_probability: alpha,
            pass_projector: zz_pass_projector(frame),
            description: zz_description(frame).into(),
        })];
        let kap = kappa(params.phi());
        for k in 0..3 {
            let u = ket2(C64::new(ah, 0.0), u_phases[k] * av);
            let v = ket2(C64::new(ah, 0.0), v_phases[k] * av);
            let v = match frame {
                Frame::Theoretical => v,
                Frame::Experimental => kap.apply(&v),
            };
            let reject = projector(&tensor_ket(&u, &v));
            tests.push(Test::Binary(BinaryTest {
                label: format!("P{}", k + 1),
                selection_probability: (1.0 - alpha) / 3.0,
                pass_projector: &HermMat4::identity() - &reject,
                description: format!(
                    "pass unless both land on u⊗v; u = {}, v = {}",
                    format_ket2(&u),
                    format_ket2(&v)
                ),
            }));
        }

        Ok(Self {
            family: StrategyFamily::Nonadaptive,
            frame,
            params,
            target: make_target(&params, frame),
            basis: VerifierBasis::new(&params, frame),
            tests,
            spectrum: StrategySpectrum {
                family: StrategyFamily::Nonadaptive,
                lambda2,
                lambda4: lambda2,
                weight: alpha,
            },
        })
    }

    /// Three-setting one-way adaptive strategy, θ ∈ (0, π/4].
    pub fn adaptive(params: TargetParams, frame: Frame) -> Result<Self> {
        let theta = params.theta();
        if params.near_product_point() || theta > FRAC_PI_4 + crate::state::BOUNDARY_TOL {
            return Err(QvError::Regime {
                theta,
                family: "adaptive",
                hint: "defined for θ ∈ (0, π/4]",
            });
        }

        let c2 = theta.cos().powi(2);
        let beta = c2 / (1.0 + c2);
        let lambda4 = (1.0 - c2) / (1.0 + c2);

        let (s, c) = theta.sin_cos();
        let inv = 1.0 / 2f64.sqrt();
        let i = C64::new(0.0, 1.0);
        // Alice bases (H, V) amplitudes; |+⟩ = (|V⟩+|H⟩)/√2 etc.
        let plus = ket2(C64::new(inv, 0.0), C64::new(inv, 0.0));
        let minus = ket2(C64::new(-inv, 0.0), C64::new(inv, 0.0));
        let r = ket2(i * inv, C64::new(inv, 0.0));
        let l = ket2(-i * inv, C64::new(inv, 0.0));
        // Bob accept vectors (theoretical frame)
        let v_plus = ket2(C64::new(s, 0.0), C64::new(c, 0.0));
        let v_minus = ket2(C64::new(-s, 0.0), C64::new(c, 0.0));
        let w_plus = ket2(-i * s, C64::new(c, 0.0));
        let w_minus = ket2(i * s, C64::new(c, 0.0));

        let kap = kappa(params.phi());
        let bob = |k: Ket2| match frame {
            Frame::Theoretical => k,
            Frame::Experimental => kap.apply(&k),
        };

        let tests = vec![
            Test::Binary(BinaryTest {
                label: "T0".into(),
                selection_probability: beta,
                pass_projector: zz_pass_projector(frame),
                description: zz_description(frame).into(),
            }),
            Test::Adaptive(AdaptiveTest {
                label: "T1".into(),
                selection_probability: (1.0 - beta) / 2.0,
                alice_basis: [plus, minus],
                bob_accept: [bob(v_plus), bob(v_minus)],
            }),
            Test::Adaptive(AdaptiveTest {
                label: "T2".into(),
                selection_probability: (1.0 - beta) / 2.0,
                alice_basis: [r, l],
                bob_accept: [bob(w_plus), bob(w_minus)],
            }),
        ];

        Ok(Self {
            family: StrategyFamily::Adaptive,
            frame,
            params,
            target: make_target(&params, frame),
            basis: VerifierBasis::new(&params, frame),
            tests,
            spectrum: StrategySpectrum {
                family: StrategyFamily::Adaptive,
                lambda2: beta,
                lambda4,
                weight: beta,
            },
        })
    }

    /// Three equally weighted mutually unbiased settings for a Bell state.
    pub fn bell(variant: BellVariant) -> Self {
        let inv = 1.0 / 2f64.sqrt();
        let i = C64::new(0.0, 1.0);
        let plus = ket2(C64::new(inv, 0.0), C64::new(inv, 0.0));
        let minus = ket2(C64::new(-inv, 0.0), C64::new(inv, 0.0));
        let r = ket2(i * inv, C64::new(inv, 0.0));
        let l = ket2(-i * inv, C64::new(inv, 0.0));
        let y_plus = ket2(C64::new(inv, 0.0), i * inv);
        let y_minus = ket2(C64::new(inv, 0.0), -i * inv);

        let rank2 = |a: (&Ket2, &Ket2), b: (&Ket2, &Ket2)| -> HermMat4 {
            &projector(&tensor_ket(a.0, a.1)) + &projector(&tensor_ket(b.0, b.1))
        };

        let (params, frame, projectors) = match variant {
            BellVariant::PhiPlus => {
                // P_XX⁺, P_YY⁻, P_ZZ⁺ for (|HH⟩+|VV⟩)/√2
                let p_xx = rank2((&plus, &plus), (&minus, &minus));
                let p_yy = rank2((&y_plus, &y_minus), (&y_minus, &y_plus));
                let params = TargetParams::new(FRAC_PI_4, 0.0).expect("valid Bell params");
                (
                    params,
                    Frame::Theoretical,
                    [
                        (p_xx, "± basis both sides; pass on correlated outcomes"),
                        (p_yy, "circular basis both sides; pass on anti-correlated outcomes"),
                        (zz_pass_projector(Frame::Theoretical), zz_description(Frame::Theoretical)),
                    ],
                )
            }
            BellVariant::PhiMinus => {
                // M₁–M₃ for (|HV⟩−|VH⟩)/√2
                let m1 = rank2((&minus, &plus), (&plus, &minus));
                let m2 = rank2((&l, &r), (&r, &l));
                let params = TargetParams::new(FRAC_PI_4, PI).expect("valid Bell params");
                (
                    params,
                    Frame::Experimental,
                    [
                        (m1, "± basis both sides; pass on anti-correlated outcomes"),
                        (m2, "circular basis both sides; pass on anti-correlated outcomes"),
                        (zz_pass_projector(Frame::Experimental), zz_description(Frame::Experimental)),
                    ],
                )
            }
        };

        let tests = projectors
            .into_iter()
            .enumerate()
            .map(|(k, (pass_projector, description))| {
                Test::Binary(BinaryTest {
                    label: format!("M{}", k + 1),
                    selection_probability: 1.0 / 3.0,
                    pass_projector,
                    description: description.into(),
                })
            })
            .collect();

        Self {
            family: StrategyFamily::Bell,
            frame,
            params,
            target: make_target(&params, frame),
            basis: VerifierBasis::new(&params, frame),
            tests,
            spectrum: StrategySpectrum {
                family: StrategyFamily::Bell,
                lambda2: 1.0 / 3.0,
                lambda4: 1.0 / 3.0,
                weight: 1.0 / 3.0,
            },
        }
    }

    /// The single-test strategy for the product state |HV⟩.
    ///
    /// Ω is a rank-one projector with eigenvalues {1, 0, 0, 0}, so λ₂ = 0 and
    /// the copy count reduces to (1/ε)·ln(1/δ).
    pub fn product() -> Self {
        let params = TargetParams::new(FRAC_PI_2, 0.0).expect("valid product params");
        let frame = Frame::Experimental;
        let target = make_target(&params, frame);
        let tests = vec![Test::Binary(BinaryTest {
            label: "HV".into(),
            selection_probability: 1.0,
            pass_projector: projector(&target),
            description: "computational basis both sides; pass on HV".into(),
        })];
        Self {
            family: StrategyFamily::Product,
            frame,
            params,
            target,
            basis: VerifierBasis::new(&params, frame),
            tests,
            spectrum: StrategySpectrum {
                family: StrategyFamily::Product,
                lambda2: 0.0,
                lambda4: 0.0,
                weight: 1.0,
            },
        }
    }

    /// Dispatch on θ: boundary values go to the bell/product families, the
    /// interior to the requested family.
    pub fn for_family(
        family: StrategyFamily,
        params: TargetParams,
        frame: Frame,
    ) -> Result<Self> {
        match family {
            StrategyFamily::Nonadaptive => Self::nonadaptive(params, frame),
            StrategyFamily::Adaptive => Self::adaptive(params, frame),
            StrategyFamily::Bell => Ok(Self::bell(match frame {
                Frame::Theoretical => BellVariant::PhiPlus,
                Frame::Experimental => BellVariant::PhiMinus,
            })),
            StrategyFamily::Product => Ok(Self::product()),
        }
    }

    pub fn family(&self) -> StrategyFamily {
        self.family
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn params(&self) -> &TargetParams {
        &self.params
    }

    pub fn target(&self) -> &Ket4 {
        &self.target
    }

    pub fn basis(&self) -> &VerifierBasis {
        &self.basis
    }

    pub fn tests(&self) -> &[Test] {
        &self.tests
    }

    pub fn spectrum(&self) -> &StrategySpectrum {
        &self.spectrum
    }

    /// Ω = Σ pₗ Mₗ assembled from the tests.
    pub fn omega(&self) -> HermMat4 {
        let mut acc = HermMat4::zero();
        for t in &self.tests {
            acc = &acc + &(&t.pass_projector() * t.selection_probability());
        }
        acc
    }

    /// Closed-form pass probability of σ under this strategy.
    pub fn pass_probability(&self, sigma: &DensityMatrix) -> f64 {
        pass_probability(&self.spectrum, sigma, &self.basis)
    }
}

/// Pass projector of the ZZ-type setting: |HH⟩⟨HH|+|VV⟩⟨VV| in the
/// theoretical frame, |HV⟩⟨HV|+|VH⟩⟨VH| in the experimental one.
fn zz_pass_projector(frame: Frame) -> HermMat4 {
    let (a, b) = match frame {
        Frame::Theoretical => (0, 3),
        Frame::Experimental => (1, 2),
    };
    &projector(&Ket4::basis(a)) + &projector(&Ket4::basis(b))
}

fn zz_description(frame: Frame) -> &'static str {
    match frame {
        Frame::Theoretical => "computational basis both sides; pass on HH or VV",
        Frame::Experimental => "computational basis both sides; pass on HV or VH",
    }
}

/// Closed-form pass probability tr(Ωσ).
///
/// Nonadaptive-shaped spectra (λ₄ = λ₂) give λ₂ + (1−λ₂)·F; the adaptive
/// spectrum subtracts (λ₂−λ₄)·p₄ where p₄ is the weight σ puts on the
/// fourth verifier-basis vector.
pub fn pass_probability(
    spectrum: &StrategySpectrum,
    sigma: &DensityMatrix,
    basis: &VerifierBasis,
) -> f64 {
    let f = sigma.fidelity(&basis.psi);
    let base = spectrum.lambda2 + (1.0 - spectrum.lambda2) * f;
    match spectrum.family {
        StrategyFamily::Adaptive => {
            let p4 = sigma.matrix().expectation(&basis.vh);
            base - (spectrum.lambda2 - spectrum.lambda4) * p4
        }
        _ => base,
    }
}

/// Worst-case single-test failure probability Δ_ε = (1−λ₂)·ε for a state
/// ε-far from the target.
pub fn failure_probability(spectrum: &StrategySpectrum, epsilon: f64) -> f64 {
    spectrum.delta_eps_coefficient() * epsilon
}

/// Copies needed for confidence 1−δ against ε-far states:
/// ceil( ln δ / ln(1 − (1−λ₂)ε) ).
pub fn required_copies(epsilon: f64, delta: f64, spectrum: &StrategySpectrum) -> Result<u64> {
    let d = validate_copies_args(epsilon, delta, spectrum)?;
    Ok((delta.ln() / (1.0 - d).ln()).ceil() as u64)
}

/// First-order form (1/Δ_ε)·ln(1/δ) of `required_copies`.
pub fn required_copies_approx(
    epsilon: f64,
    delta: f64,
    spectrum: &StrategySpectrum,
) -> Result<f64> {
    let d = validate_copies_args(epsilon, delta, spectrum)?;
    Ok((1.0 / delta).ln() / d)
}

fn validate_copies_args(epsilon: f64, delta: f64, spectrum: &StrategySpectrum) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(QvError::OutOfRange {
            name: "epsilon",
            value: epsilon,
            range: "(0, 1)",
        });
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(QvError::OutOfRange {
            name: "delta",
            value: delta,
            range: "(0, 1)",
        });
    }
    let d = failure_probability(spectrum, epsilon);
    if d >= 1.0 {
        return Err(QvError::OutOfRange {
            name: "(1-lambda2)*epsilon",
            value: d,
            range: "(0, 1)",
        });
    }
    Ok(d)
}
