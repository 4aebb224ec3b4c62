//! Disturbances and switching actions applied during a simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::model::{Conditions, PowerSystemModel};
use crate::grid::network::C64;

/// Admittance of a bolted fault, p.u.
pub const BOLTED_FAULT: [f64; 2] = [1.0e6, 0.0];

fn bolted() -> [f64; 2] {
    BOLTED_FAULT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventAction {
    /// Shunt fault at a bus, `[g, b]` p.u.
    BusFault {
        bus: usize,
        #[serde(default = "bolted")]
        admittance: [f64; 2],
    },
    BranchTrip { from: usize, to: usize },
    PssSwitch { gen: String, enabled: bool },
    PodSwitch { enabled: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    /// Application time, s.
    pub time: f64,
    /// Clearing time for faults, s.
    #[serde(default)]
    pub clear: Option<f64>,
    pub action: EventAction,
}

impl Event {
    pub fn bus_fault(bus: usize, time: f64, clear: f64) -> Self {
        Self {
            time,
            clear: Some(clear),
            action: EventAction::BusFault { bus, admittance: BOLTED_FAULT },
        }
    }

    pub fn branch_trip(from: usize, to: usize, time: f64) -> Self {
        Self {
            time,
            clear: None,
            action: EventAction::BranchTrip { from, to },
        }
    }

    /// Latest time this event touches.
    pub fn last_time(&self) -> f64 {
        self.clear.unwrap_or(self.time).max(self.time)
    }
}

#[derive(Debug, Clone)]
enum Resolved {
    Fault { bus: usize, y: C64 },
    Trip(usize),
    Pss { index: usize, enabled: bool },
    Pod(bool),
}

/// Events resolved against a model and snapped to the integration grid.
#[derive(Debug, Clone)]
pub struct EventSchedule {
    entries: Vec<(usize, Option<usize>, Resolved)>,
    pub warnings: Vec<String>,
}

fn snap(t: f64, dt: f64, what: &str, warnings: &mut Vec<String>) -> usize {
    let k = (t / dt).round().max(0.0);
    let snapped = k * dt;
    if (snapped - t).abs() > 1e-9 * t.abs().max(1.0) {
        warnings.push(format!("{what} at t = {t} s snapped to {snapped} s"));
    }
    k as usize
}

impl EventSchedule {
    pub fn new(model: &PowerSystemModel, events: &[Event], dt: f64) -> Result<Self> {
        let mut warnings = Vec::new();
        let mut entries = Vec::with_capacity(events.len());
        for ev in events {
            if !(ev.time >= 0.0 && ev.time.is_finite()) {
                return Err(Error::Scenario(format!("event time {} is invalid", ev.time)));
            }
            let on = snap(ev.time, dt, "event", &mut warnings);
            let resolved = match &ev.action {
                EventAction::BusFault { bus, admittance } => Resolved::Fault {
                    bus: model.network.bus_index(*bus)?,
                    y: C64::new(admittance[0], admittance[1]),
                },
                EventAction::BranchTrip { from, to } => Resolved::Trip(model.network.find_branch(*from, *to)?),
                EventAction::PssSwitch { gen, enabled } => {
                    let mi = model.machine_index(gen)?;
                    let index = model
                        .stabilizers
                        .iter()
                        .position(|s| s.machine == mi)
                        .ok_or_else(|| Error::Scenario(format!("no stabilizer on {gen}")))?;
                    Resolved::Pss { index, enabled: *enabled }
                }
                EventAction::PodSwitch { enabled } => Resolved::Pod(*enabled),
            };
            let off = match (&resolved, ev.clear) {
                (Resolved::Fault { .. }, Some(c)) => {
                    if c < ev.time {
                        return Err(Error::Scenario(format!("fault clears at {c} s before it starts")));
                    }
                    Some(snap(c, dt, "fault clearing", &mut warnings))
                }
                (Resolved::Fault { .. }, None) => None,
                (_, Some(_)) => {
                    return Err(Error::Scenario("only faults take a clearing time".into()));
                }
                _ => None,
            };
            entries.push((on, off, resolved));
        }
        entries.sort_by_key(|e| e.0);
        Ok(Self { entries, warnings })
    }

    /// Conditions in force during integration step `k` (from `k dt`) and
    /// whether the damping controller is enabled.
    pub fn conditions_at(&self, model: &PowerSystemModel, k: usize) -> (Conditions, bool) {
        let mut cond = model.base_conditions();
        let mut pod = true;
        for (on, off, r) in &self.entries {
            if k < *on {
                continue;
            }
            match r {
                Resolved::Fault { bus, y } => {
                    if off.is_none_or(|off| k < off) {
                        cond.faults.push((*bus, *y));
                    }
                }
                Resolved::Trip(b) => cond.branch_in_service[*b] = false,
                Resolved::Pss { index, enabled } => cond.pss_enabled[*index] = *enabled,
                Resolved::Pod(e) => pod = *e,
            }
        }
        (cond, pod)
    }
}
