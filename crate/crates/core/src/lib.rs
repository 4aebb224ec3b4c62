//! Phasor power oscillation damping laboratory.
//!
//! * [`grid`]: phasor-domain simulator (6th-order machines, SEXS, PSS,
//!   governors, TCSC) with a modified-Euler integrator.
//! * [`modal`]: linearization, eigen-structure and residues.
//! * [`pod`]: phasor estimators (LPF, Kalman filter with optional
//!   control-input model) and the damping controller.
//! * [`experiment`]: scenarios, cost/performance metrics, sweeps and
//!   result export.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod grid;
pub mod modal;
pub mod pod;

pub use error::{Error, Result};
pub use grid::{CaseData, PowerSystemModel};
