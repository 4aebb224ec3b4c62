//! Sixth-order synchronous machine (subtransient model, no saturation,
//! no armature resistance, no stator transients).
//!
//! States per machine, in order: rotor angle `delta` (rad), speed deviation
//! `dw` (p.u.), transient EMFs `eq_t`, `ed_t` and subtransient EMFs `eq_st`,
//! `ed_st` (p.u.). The network sees the machine as a Norton source behind
//! the subtransient reactance.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::network::C64;

pub const MACHINE_STATES: usize = 6;
pub const MACHINE_STATE_NAMES: [&str; MACHINE_STATES] =
    ["delta", "dw", "eq_t", "ed_t", "eq_st", "ed_st"];

/// Electrical and mechanical parameters. Stored on the system base once a
/// case is loaded (see [`MachineParams::to_system_base`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MachineParams {
    pub h: f64,
    #[serde(default)]
    pub d: f64,
    pub xd: f64,
    pub xq: f64,
    pub xd_t: f64,
    pub xq_t: f64,
    pub xd_st: f64,
    pub xq_st: f64,
    pub td0_t: f64,
    pub tq0_t: f64,
    pub td0_st: f64,
    pub tq0_st: f64,
}

impl MachineParams {
    /// Rescale from a machine rating `s_n` to the system base `s_base`.
    pub fn to_system_base(&self, s_n: f64, s_base: f64) -> Self {
        let z = s_base / s_n;
        let m = s_n / s_base;
        Self {
            h: self.h * m,
            d: self.d * m,
            xd: self.xd * z,
            xq: self.xq * z,
            xd_t: self.xd_t * z,
            xq_t: self.xq_t * z,
            xd_st: self.xd_st * z,
            xq_st: self.xq_st * z,
            ..*self
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let positive = [
            ("h", self.h),
            ("xd", self.xd),
            ("xq", self.xq),
            ("xd_t", self.xd_t),
            ("xq_t", self.xq_t),
            ("xd_st", self.xd_st),
            ("xq_st", self.xq_st),
            ("td0_t", self.td0_t),
            ("tq0_t", self.tq0_t),
            ("td0_st", self.td0_st),
            ("tq0_st", self.tq0_st),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Case(format!("machine {name}: {field} must be positive")));
            }
        }
        // The Norton interface needs a round rotor in the subtransient period.
        if (self.xd_st - self.xq_st).abs() > 1e-12 {
            return Err(Error::Case(format!(
                "machine {name}: xd_st and xq_st must be equal (got {} and {})",
                self.xd_st, self.xq_st
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MachineState {
    pub delta: f64,
    pub dw: f64,
    pub eq_t: f64,
    pub ed_t: f64,
    pub eq_st: f64,
    pub ed_st: f64,
}

impl MachineState {
    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            delta: s[0],
            dw: s[1],
            eq_t: s[2],
            ed_t: s[3],
            eq_st: s[4],
            ed_st: s[5],
        }
    }

    pub fn to_array(&self) -> [f64; MACHINE_STATES] {
        [self.delta, self.dw, self.eq_t, self.ed_t, self.eq_st, self.ed_st]
    }
}

/// Rotate a network-frame phasor into the machine's (d, q) frame.
pub fn to_dq(x: C64, delta: f64) -> (f64, f64) {
    let r = x * C64::from_polar(1.0, FRAC_PI_2 - delta);
    (r.re, r.im)
}

pub fn from_dq(d: f64, q: f64, delta: f64) -> C64 {
    C64::new(d, q) * C64::from_polar(1.0, delta - FRAC_PI_2)
}

#[derive(Debug, Clone)]
pub struct SynchronousMachine {
    pub name: String,
    /// Internal bus index.
    pub bus: usize,
    pub params: MachineParams,
}

/// Electrical quantities at the machine terminal for a given network solution.
#[derive(Debug, Clone, Copy)]
pub struct MachineTerminal {
    pub current: C64,
    pub i_d: f64,
    pub i_q: f64,
    pub p_e: f64,
    pub v_t: f64,
}

impl SynchronousMachine {
    pub fn x_st(&self) -> f64 {
        self.params.xd_st
    }

    pub fn norton_admittance(&self) -> C64 {
        C64::new(0.0, -1.0 / self.x_st())
    }

    /// Subtransient EMF in the network frame.
    pub fn emf(&self, s: &MachineState) -> C64 {
        from_dq(s.ed_st, s.eq_st, s.delta)
    }

    pub fn norton_current(&self, s: &MachineState) -> C64 {
        self.emf(s) * self.norton_admittance()
    }

    pub fn terminal(&self, s: &MachineState, v: C64) -> MachineTerminal {
        let i = (self.emf(s) - v) * self.norton_admittance();
        let (i_d, i_q) = to_dq(i, s.delta);
        MachineTerminal {
            current: i,
            i_d,
            i_q,
            p_e: (v * i.conj()).re,
            v_t: v.norm(),
        }
    }

    /// Time derivatives given field voltage `efd` and mechanical power `pm`
    /// (system base).
    pub fn derivatives(
        &self,
        s: &MachineState,
        term: &MachineTerminal,
        efd: f64,
        pm: f64,
        omega_base: f64,
    ) -> [f64; MACHINE_STATES] {
        let p = &self.params;
        let (i_d, i_q) = (term.i_d, term.i_q);
        [
            omega_base * s.dw,
            (pm - term.p_e - p.d * s.dw) / (2.0 * p.h),
            (efd - s.eq_t - (p.xd - p.xd_t) * i_d) / p.td0_t,
            (-s.ed_t + (p.xq - p.xq_t) * i_q) / p.tq0_t,
            (s.eq_t - s.eq_st - (p.xd_t - p.xd_st) * i_d) / p.td0_st,
            (s.ed_t - s.ed_st + (p.xq_t - p.xq_st) * i_q) / p.tq0_st,
        ]
    }

    /// Steady state that delivers `s_gen` at terminal voltage `v`.
    /// Returns the state, field voltage and mechanical power.
    pub fn initialize(&self, v: C64, s_gen: C64) -> (MachineState, f64, f64) {
        let p = &self.params;
        let i = (s_gen / v).conj();
        let delta = (v + C64::new(0.0, p.xq) * i).arg();
        let (v_d, v_q) = to_dq(v, delta);
        let (i_d, i_q) = to_dq(i, delta);
        let ed_st = v_d - p.xq_st * i_q;
        let eq_st = v_q + p.xd_st * i_d;
        let ed_t = (p.xq - p.xq_t) * i_q;
        let eq_t = eq_st + (p.xd_t - p.xd_st) * i_d;
        let efd = eq_t + (p.xd - p.xd_t) * i_d;
        let pm = v_d * i_d + v_q * i_q;
        (
            MachineState {
                delta,
                dw: 0.0,
                eq_t,
                ed_t,
                eq_st,
                ed_st,
            },
            efd,
            pm,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kundur() -> SynchronousMachine {
        SynchronousMachine {
            name: "G".into(),
            bus: 0,
            params: MachineParams {
                h: 3.5,
                d: 0.0,
                xd: 1.81,
                xq: 1.76,
                xd_t: 0.3,
                xq_t: 0.65,
                xd_st: 0.23,
                xq_st: 0.23,
                td0_t: 8.0,
                tq0_t: 1.0,
                td0_st: 0.03,
                tq0_st: 0.07,
            },
        }
    }

    #[test]
    fn dq_roundtrip() {
        let z = C64::new(0.3, -0.8);
        let (d, q) = to_dq(z, 0.7);
        assert!((from_dq(d, q, 0.7) - z).norm() < 1e-15);
    }

    #[test]
    fn initialization_is_stationary() {
        let m = kundur();
        let v = C64::from_polar(1.0, 0.6);
        let (s, efd, pm) = m.initialize(v, C64::new(0.9, 0.3));
        let term = m.terminal(&s, v);
        let d = m.derivatives(&s, &term, efd, pm, 2.0 * std::f64::consts::PI * 60.0);
        assert!(d.iter().all(|x| x.abs() < 1e-12), "{d:?}");
        assert!((term.p_e - 0.9).abs() < 1e-12);
    }

    #[test]
    fn swing_kinematics() {
        let m = kundur();
        let v = C64::from_polar(1.0, 0.6);
        let (mut s, efd, pm) = m.initialize(v, C64::new(0.9, 0.3));
        s.dw = 0.01;
        let term = m.terminal(&s, v);
        let wb = 2.0 * std::f64::consts::PI * 60.0;
        let d = m.derivatives(&s, &term, efd, pm, wb);
        assert!((d[0] - 0.01 * wb).abs() < 1e-12);
    }

    #[test]
    fn base_conversion() {
        let p = kundur().params.to_system_base(2220.0, 100.0);
        assert!((p.h - 3.5 * 22.2).abs() < 1e-12);
        assert!((p.xd - 1.81 / 22.2).abs() < 1e-12);
        assert_eq!(p.td0_t, 8.0);
    }

    #[test]
    fn rejects_subtransient_saliency() {
        let mut p = kundur().params;
        p.xq_st = 0.25;
        assert!(p.validate("G").is_err());
    }
}
