//! Experiment configuration: a TOML file, CLI-flag overrides on top, and
//! validation of every range before a run starts. Unknown keys are rejected.

use crate::device::{DeviceKind, DeviceModel};
use crate::error::{QvError, Result};
use crate::state::{Frame, TargetParams};
use crate::strategy::StrategyFamily;
use serde::{Deserialize, Serialize};

/// Which experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    StrategyInfo,
    TaskA,
    TaskB,
    Scaling,
    TomoCompare,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::StrategyInfo => "strategy-info",
            Task::TaskA => "task-a",
            Task::TaskB => "task-b",
            Task::Scaling => "scaling",
            Task::TomoCompare => "tomo-compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetSection {
    pub theta: f64,
    pub phi: f64,
    pub frame: Frame,
}

impl Default for TargetSection {
    fn default() -> Self {
        // the k2 state of the reference experiment
        Self { theta: 0.6419, phi: 3.2034, frame: Frame::Experimental }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategySection {
    pub family: StrategyFamily,
}

impl Default for StrategySection {
    fn default() -> Self {
        Self { family: StrategyFamily::Nonadaptive }
    }
}

/// Device model. Exactly one of `fidelity`, `weights`, `werner`, `exact`
/// may be set; none means the exact target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub werner: Option<f64>,
    pub exact: bool,
    pub eom_flip: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub task: Task,
    /// Copy budget: max copies per Task A round, the largest grid point for
    /// task-b / scaling / tomo-compare.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_copies: Option<u64>,
    /// Monte Carlo rounds; defaults to 10000 for task-a, 100 per grid point
    /// elsewhere.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<u64>,
    pub seed: u64,
    /// 0 = use all available cores (or QVERIF_THREADS).
    pub threads: usize,
    pub output: String,
    /// task-b only: also write the per-copy record stream of one round.
    pub records: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            task: Task::StrategyInfo,
            n_copies: None,
            rounds: None,
            seed: 0,
            threads: 0,
            output: "out".into(),
            records: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    pub eps_min: f64,
    pub eps_max: f64,
    /// δ target for ε(N) solving and summary crossings.
    pub delta_target: f64,
    /// Task A confidence level.
    pub confidence: f64,
    /// Region side for ε(N): "large" (λ₂) or "small" (λ₄).
    pub region: crate::analysis::Side,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            eps_min: 0.001,
            eps_max: 0.006,
            delta_target: 0.10,
            confidence: 0.99,
            region: crate::analysis::Side::Large,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub target: TargetSection,
    pub strategy: StrategySection,
    pub device: DeviceSection,
    pub run: RunSection,
    pub analysis: AnalysisSection,
}

impl ExperimentConfig {
    /// Parse a TOML string, rejecting unknown keys.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| QvError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Range-check every field; returns the validated target parameters.
    pub fn validate(&self) -> Result<TargetParams> {
        let params = TargetParams::new(self.target.theta, self.target.phi)?;
        let d = &self.device;
        let set = [d.fidelity.is_some(), d.weights.is_some(), d.werner.is_some(), d.exact];
        if set.iter().filter(|&&b| b).count() > 1 {
            return Err(QvError::Config(
                "device: set at most one of fidelity / weights / werner / exact".into(),
            ));
        }
        if let Some(f) = d.fidelity {
            if !(0.0..=1.0).contains(&f) {
                return Err(QvError::OutOfRange {
                    name: "device.fidelity",
                    value: f,
                    range: "[0, 1]",
                });
            }
        }
        if let Some(v) = d.werner {
            if !(0.0..=1.0).contains(&v) {
                return Err(QvError::OutOfRange {
                    name: "device.werner",
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        if !(0.0..=1.0).contains(&d.eom_flip) {
            return Err(QvError::OutOfRange {
                name: "device.eom_flip",
                value: d.eom_flip,
                range: "[0, 1]",
            });
        }
        let a = &self.analysis;
        for (name, v) in [("analysis.eps_min", a.eps_min), ("analysis.eps_max", a.eps_max)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(QvError::OutOfRange { name, value: v, range: "(0, 1)" });
            }
        }
        if a.eps_min > a.eps_max {
            return Err(QvError::Config(format!(
                "analysis.eps_min {} > eps_max {}",
                a.eps_min, a.eps_max
            )));
        }
        if !(a.delta_target > 0.0 && a.delta_target <= 1.0) {
            return Err(QvError::OutOfRange {
                name: "analysis.delta_target",
                value: a.delta_target,
                range: "(0, 1]",
            });
        }
        if !(a.confidence > 0.0 && a.confidence < 1.0) {
            return Err(QvError::OutOfRange {
                name: "analysis.confidence",
                value: a.confidence,
                range: "(0, 1)",
            });
        }
        if self.run.n_copies == Some(0) || self.run.rounds == Some(0) {
            return Err(QvError::Config("run.n_copies / run.rounds must be ≥ 1".into()));
        }
        Ok(params)
    }

    pub fn device_model(&self) -> DeviceModel {
        let kind = if let Some(f) = self.device.fidelity {
            let rest = (1.0 - f) / 3.0;
            DeviceKind::DiagonalMixture([f, rest, rest, rest])
        } else if let Some(w) = self.device.weights {
            DeviceKind::DiagonalMixture(w)
        } else if let Some(v) = self.device.werner {
            DeviceKind::Werner(v)
        } else {
            DeviceKind::ExactTarget
        };
        DeviceModel { kind, eom_flip: self.device.eom_flip }
    }

    pub fn rounds_or_default(&self) -> u64 {
        self.run.rounds.unwrap_or(match self.run.task {
            Task::TaskA => 10_000,
            _ => 100,
        })
    }

    pub fn n_copies_or_default(&self) -> u64 {
        self.run.n_copies.unwrap_or(match self.run.task {
            Task::TaskA => 6_000,
            Task::TaskB => 30_000,
            Task::Scaling => 100,
            Task::TomoCompare => 100_000,
            Task::StrategyInfo => 0,
        })
    }
}
