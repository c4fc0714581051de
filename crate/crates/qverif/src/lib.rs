//! Optimal two-qubit state verification.
//!
//! This crate builds the optimal verification strategies for the two-qubit
//! pure-state family sinθ|HH⟩ + cosθ|VV⟩ (and its experimental-frame twin
//! sinθ|HV⟩ + e^{iφ}cosθ|VH⟩), simulates a noisy state-producing device
//! under nonadaptive and one-way adaptive (feed-forward) measurements, and
//! runs the two statistical certification tasks:
//!
//! - **Task A** — measure copy by copy until the first failure; geometric
//!   statistics give an infidelity estimate ε̂ and the copy count needed for
//!   a target confidence.
//! - **Task B** — measure a fixed number N of copies, count passes, and
//!   convert (N, m_pass) into a Chernoff-bound confidence δ that the device
//!   is good (Case 1) or bad (Case 2).
//!
//! A 9-setting Pauli tomography simulator serves as the baseline the
//! verification strategies are compared against.
//!
//! The `qverif` binary drives end-to-end experiments and writes CSV
//! artifacts; see the crate README for the subcommands.

pub mod analysis;
pub mod config;
pub mod device;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod state;
pub mod strategy;
pub mod tomography;

pub use error::{QvError, Result};
