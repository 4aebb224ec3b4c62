//! Scenarios, metrics, sweeps and result export.

pub mod export;
pub mod metrics;
pub mod scenario;
pub mod study;

pub use metrics::{cost_performance, Metrics};
pub use scenario::{Scenario, ScenarioRun, ScenarioSummary};
pub use study::*;
