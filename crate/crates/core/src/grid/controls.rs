//! Machine controllers (AVR, PSS, governor) and the TCSC actuator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simplified excitation system: lead-lag `(1 + s ta)/(1 + s tb)` followed
/// by a first-order exciter `k/(1 + s te)` with a non-windup output limit.
///
/// States: `[x_ll, efd]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sexs {
    pub gen: String,
    pub k: f64,
    pub ta: f64,
    pub tb: f64,
    pub te: f64,
    pub emin: f64,
    pub emax: f64,
}

/// Runtime exciter: parameters plus the machine index and voltage setpoint.
#[derive(Debug, Clone)]
pub struct Exciter {
    pub params: Sexs,
    pub machine: usize,
    pub v_ref: f64,
}

impl Sexs {
    pub fn validate(&self) -> Result<()> {
        if !(self.tb > 0.0 && self.te > 0.0 && self.ta >= 0.0 && self.emin < self.emax) {
            return Err(Error::Case(format!("avr on {}: invalid time constants or limits", self.gen)));
        }
        Ok(())
    }
}

impl Exciter {
    pub const STATES: usize = 2;

    /// Initialize for field voltage `efd0` at terminal voltage `vt0`.
    pub fn initialize(params: Sexs, machine: usize, vt0: f64, efd0: f64) -> Result<(Self, [f64; 2])> {
        if efd0 < params.emin || efd0 > params.emax {
            return Err(Error::Case(format!(
                "avr on {}: initial field voltage {efd0:.3} outside [{}, {}]",
                params.gen, params.emin, params.emax
            )));
        }
        let u0 = efd0 / params.k;
        Ok((
            Self {
                v_ref: vt0 + u0,
                params,
                machine,
            },
            [u0, efd0],
        ))
    }

    pub fn efd(&self, x: &[f64]) -> f64 {
        x[1].clamp(self.params.emin, self.params.emax)
    }

    pub fn derivatives(&self, x: &[f64], v_t: f64, v_pss: f64) -> [f64; 2] {
        let p = &self.params;
        let u = self.v_ref - v_t + v_pss;
        let dx_ll = (u - x[0]) / p.tb;
        let v = p.ta / p.tb * u + (1.0 - p.ta / p.tb) * x[0];
        let mut defd = (p.k * v - x[1]) / p.te;
        if (x[1] >= p.emax && defd > 0.0) || (x[1] <= p.emin && defd < 0.0) {
            defd = 0.0;
        }
        [dx_ll, defd]
    }
}

/// Power system stabilizer: gain, washout and one lead-lag stage on the
/// speed deviation, output limited to `±vmax`. States: `[x_washout, x_ll]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PssParams {
    pub gen: String,
    pub k: f64,
    pub tw: f64,
    pub t1: f64,
    pub t2: f64,
    pub vmax: f64,
    #[serde(default = "enabled")]
    pub enabled: bool,
}

fn enabled() -> bool {
    true
}

#[derive(Debug, Clone)]
pub struct Stabilizer {
    pub params: PssParams,
    pub machine: usize,
}

impl PssParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tw > 0.0 && self.t2 > 0.0 && self.t1 >= 0.0 && self.vmax > 0.0) {
            return Err(Error::Case(format!("pss on {}: invalid parameters", self.gen)));
        }
        Ok(())
    }
}

impl Stabilizer {
    pub const STATES: usize = 2;

    fn washout_out(&self, x: &[f64], dw: f64) -> f64 {
        self.params.k * dw - x[0]
    }

    pub fn output(&self, x: &[f64], dw: f64, enabled: bool) -> f64 {
        if !enabled {
            return 0.0;
        }
        let p = &self.params;
        let yw = self.washout_out(x, dw);
        let r = p.t1 / p.t2;
        (r * yw + (1.0 - r) * x[1]).clamp(-p.vmax, p.vmax)
    }

    pub fn derivatives(&self, x: &[f64], dw: f64) -> [f64; 2] {
        let p = &self.params;
        let yw = self.washout_out(x, dw);
        [(p.k * dw - x[0]) / p.tw, (yw - x[1]) / p.t2]
    }
}

/// First-order droop governor/turbine. State: `[pm]` (system base).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GovernorParams {
    pub gen: String,
    /// Droop on the machine base.
    pub r: f64,
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct Governor {
    pub params: GovernorParams,
    pub machine: usize,
    /// Droop gain on the system base: `s_n / (s_base r)`.
    pub gain: f64,
    pub p_ref: f64,
}

impl GovernorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.t > 0.0) {
            return Err(Error::Case(format!("governor on {}: invalid parameters", self.gen)));
        }
        Ok(())
    }
}

impl Governor {
    pub const STATES: usize = 1;

    pub fn derivatives(&self, x: &[f64], dw: f64) -> [f64; 1] {
        [(self.p_ref - self.gain * dw - x[0]) / self.params.t]
    }
}

/// Thyristor-controlled series capacitor on one branch.
///
/// The state is the compensation as a fraction of the branch reactance;
/// it follows `x_ref + u` through a first-order lag. The target is limited
/// to `[cmin, cmax]`, so the state and output stay inside the limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcscParams {
    pub from: usize,
    pub to: usize,
    pub x_ref: f64,
    pub t: f64,
    pub cmin: f64,
    pub cmax: f64,
}

#[derive(Debug, Clone)]
pub struct Tcsc {
    pub params: TcscParams,
    pub branch: usize,
}

impl TcscParams {
    pub fn validate(&self) -> Result<()> {
        let p = self;
        if !(p.t > 0.0 && p.cmin <= p.x_ref && p.x_ref <= p.cmax && p.cmax < 1.0) {
            return Err(Error::Case(format!("tcsc on {}-{}: invalid parameters", p.from, p.to)));
        }
        Ok(())
    }
}

impl Tcsc {
    pub const STATES: usize = 1;

    pub fn compensation(&self, x: &[f64]) -> f64 {
        x[0].clamp(self.params.cmin, self.params.cmax)
    }

    /// Reactance multiplier applied to the host branch.
    pub fn reactance_scale(&self, x: &[f64]) -> f64 {
        1.0 - self.compensation(x)
    }

    /// Modulation actually realised after the target limit.
    pub fn applied_modulation(&self, u: f64) -> f64 {
        let p = &self.params;
        (p.x_ref + u).clamp(p.cmin, p.cmax) - p.x_ref
    }

    pub fn derivatives(&self, x: &[f64], u: f64) -> [f64; 1] {
        let p = &self.params;
        let target = p.x_ref + self.applied_modulation(u);
        [(target - x[0]) / p.t]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tcsc() -> Tcsc {
        Tcsc {
            params: TcscParams { from: 1, to: 2, x_ref: 0.1, t: 0.1, cmin: 0.01, cmax: 0.5 },
            branch: 0,
        }
    }

    #[test]
    fn tcsc_first_order_lag() {
        let d = tcsc().derivatives(&[0.1], 0.05);
        assert!((d[0] - 0.05 / 0.1).abs() < 1e-12);
        assert_eq!(tcsc().derivatives(&[0.1], 0.0)[0], 0.0);
    }

    #[test]
    fn tcsc_limits() {
        let t = tcsc();
        assert!((t.applied_modulation(1.0) - 0.4).abs() < 1e-12);
        assert!((t.applied_modulation(-1.0) + 0.09).abs() < 1e-12);
        assert_eq!(t.compensation(&[0.7]), 0.5);
        // converges to the reference with zero modulation
        let mut x = 0.3;
        for _ in 0..2000 {
            x += 0.001 * t.derivatives(&[x], 0.0)[0];
        }
        assert!((x - 0.1).abs() < 1e-6);
    }

    #[test]
    fn exciter_equilibrium() {
        let p = Sexs { gen: "G".into(), k: 100.0, ta: 1.0, tb: 10.0, te: 0.05, emin: -3.0, emax: 3.0 };
        let (exc, x) = Exciter::initialize(p, 0, 1.0, 2.0).unwrap();
        let d = exc.derivatives(&x, 1.0, 0.0);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
        // a voltage dip raises the field voltage
        assert!(exc.derivatives(&x, 0.9, 0.0)[1] > 0.0);
    }

    #[test]
    fn exciter_rejects_out_of_range_start() {
        let p = Sexs { gen: "G".into(), k: 100.0, ta: 1.0, tb: 10.0, te: 0.05, emin: -3.0, emax: 3.0 };
        assert!(Exciter::initialize(p, 0, 1.0, 3.5).is_err());
    }

    #[test]
    fn pss_disabled_is_silent() {
        let s = Stabilizer {
            params: PssParams { gen: "G".into(), k: 20.0, tw: 10.0, t1: 0.5, t2: 0.05, vmax: 0.1, enabled: true },
            machine: 0,
        };
        assert_eq!(s.output(&[0.0, 0.0], 0.01, false), 0.0);
        assert!(s.output(&[0.0, 0.0], 0.001, true) > 0.0);
    }
}
