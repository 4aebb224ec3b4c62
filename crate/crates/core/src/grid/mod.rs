//! Phasor-domain electromechanical simulator.

pub mod case;
pub mod controls;
pub mod events;
pub mod integrator;
pub mod loadflow;
pub mod machine;
pub mod model;
pub mod network;
pub mod simulation;
pub mod state;

pub use case::CaseData;
pub use events::{Event, EventAction};
pub use integrator::step_modified_euler;
pub use model::{Conditions, Measurement, PowerSystemModel, Probe};
pub use network::{solve_network, NetworkModel, C64};
pub use simulation::{run_simulation, ControlHook, SimulationOptions, SimulationOutput};
pub use state::{DynamicState, StateLayout};
