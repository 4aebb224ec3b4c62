//! Layout of the flat differential-state vector.
//!
//! The vector is the concatenation, in this order, of
//! 1. six states per machine (`delta, dw, eq_t, ed_t, eq_st, ed_st`),
//! 2. two states per exciter (`x_ll, efd`),
//! 3. two states per stabilizer (`x_washout, x_ll`),
//! 4. one state per governor (`pm`),
//! 5. one state per TCSC (`comp`).
//!
//! Within each block devices appear in case-file order.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::controls::{Exciter, Governor, Stabilizer, Tcsc};
use crate::grid::machine::{MachineState, MACHINE_STATES, MACHINE_STATE_NAMES};
use crate::grid::network::C64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateLayout {
    pub n_machines: usize,
    pub n_avr: usize,
    pub n_pss: usize,
    pub n_gov: usize,
    pub n_tcsc: usize,
}

impl StateLayout {
    pub fn machine_offset(&self, i: usize) -> usize {
        i * MACHINE_STATES
    }

    pub fn avr_offset(&self, i: usize) -> usize {
        self.n_machines * MACHINE_STATES + i * Exciter::STATES
    }

    pub fn pss_offset(&self, i: usize) -> usize {
        self.avr_offset(self.n_avr) + i * Stabilizer::STATES
    }

    pub fn gov_offset(&self, i: usize) -> usize {
        self.pss_offset(self.n_pss) + i * Governor::STATES
    }

    pub fn tcsc_offset(&self, i: usize) -> usize {
        self.gov_offset(self.n_gov) + i * Tcsc::STATES
    }

    pub fn len(&self) -> usize {
        self.tcsc_offset(self.n_tcsc)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Human readable state labels, given device names for each block.
    pub fn labels(
        &self,
        machines: &[String],
        avrs: &[String],
        pss: &[String],
        govs: &[String],
        tcscs: &[String],
    ) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for m in machines {
            out.extend(MACHINE_STATE_NAMES.iter().map(|s| format!("{m}.{s}")));
        }
        for a in avrs {
            out.push(format!("avr[{a}].x_ll"));
            out.push(format!("avr[{a}].efd"));
        }
        for p in pss {
            out.push(format!("pss[{p}].x_washout"));
            out.push(format!("pss[{p}].x_ll"));
        }
        for g in govs {
            out.push(format!("gov[{g}].pm"));
        }
        for t in tcscs {
            out.push(format!("tcsc[{t}].comp"));
        }
        out
    }
}

/// Structured view of the differential states plus the bus voltages of the
/// last algebraic solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicState {
    pub machines: Vec<MachineState>,
    pub avr: Vec<[f64; 2]>,
    pub pss: Vec<[f64; 2]>,
    pub gov: Vec<f64>,
    pub tcsc: Vec<f64>,
    pub voltages: DVector<C64>,
}

impl DynamicState {
    pub fn layout(&self) -> StateLayout {
        StateLayout {
            n_machines: self.machines.len(),
            n_avr: self.avr.len(),
            n_pss: self.pss.len(),
            n_gov: self.gov.len(),
            n_tcsc: self.tcsc.len(),
        }
    }

    pub fn flatten(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.layout().len());
        for m in &self.machines {
            v.extend_from_slice(&m.to_array());
        }
        for a in &self.avr {
            v.extend_from_slice(a);
        }
        for p in &self.pss {
            v.extend_from_slice(p);
        }
        v.extend_from_slice(&self.gov);
        v.extend_from_slice(&self.tcsc);
        DVector::from_vec(v)
    }

    pub fn unflatten(layout: &StateLayout, x: &DVector<f64>, voltages: DVector<C64>) -> Result<Self> {
        if x.len() != layout.len() {
            return Err(Error::Dimension(format!(
                "state vector has {} entries, layout expects {}",
                x.len(),
                layout.len()
            )));
        }
        let s = x.as_slice();
        Ok(Self {
            machines: (0..layout.n_machines)
                .map(|i| MachineState::from_slice(&s[layout.machine_offset(i)..]))
                .collect(),
            avr: (0..layout.n_avr)
                .map(|i| {
                    let o = layout.avr_offset(i);
                    [s[o], s[o + 1]]
                })
                .collect(),
            pss: (0..layout.n_pss)
                .map(|i| {
                    let o = layout.pss_offset(i);
                    [s[o], s[o + 1]]
                })
                .collect(),
            gov: (0..layout.n_gov).map(|i| s[layout.gov_offset(i)]).collect(),
            tcsc: (0..layout.n_tcsc).map(|i| s[layout.tcsc_offset(i)]).collect(),
            voltages,
        })
    }
}
