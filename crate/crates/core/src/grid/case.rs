//! Case file schema (TOML).
//!
//! ```toml
//! name = "smib"
//! s_base = 2220.0          # MVA
//! f_base = 60.0            # Hz
//!
//! [[bus]]
//! id = 1
//! base_kv = 24.0
//! v = 1.0                  # optional load-flow start
//! angle_deg = 0.0          # optional load-flow start
//!
//! [[branch]]
//! from = 1
//! to = 2
//! r = 0.0                  # p.u., system base
//! x = 0.15
//! b = 0.0                  # total charging susceptance
//! ratio = 1.0              # off-nominal tap on the from side
//! in_service = true
//!
//! [[load]]                 # constant impedance at the load-flow voltage
//! bus = 2
//! p = 0.5                  # p.u., system base
//! q = 0.1
//!
//! [[generator]]
//! name = "G1"
//! bus = 1
//! s_n = 2220.0             # machine rating, MVA
//! p = 0.9                  # active power set point, p.u. system base
//! v = 1.0                  # terminal voltage set point
//! slack = false            # load-flow slack (when no infinite bus)
//! h = 3.5                  # machine-base parameters from here on
//! d = 0.0
//! xd = 1.81
//! # xq, xd_t, xq_t, xd_st, xq_st, td0_t, tq0_t, td0_st, tq0_st
//!
//! [[infinite_bus]]
//! bus = 3
//! v = 0.995
//! angle_deg = 0.0
//!
//! [[avr]]                  # SEXS
//! gen = "G1"
//! # k, ta, tb, te, emin, emax
//!
//! [[pss]]
//! gen = "G1"
//! # k, tw, t1, t2, vmax, enabled
//!
//! [[governor]]
//! gen = "G1"
//! # r (droop, machine base), t
//!
//! [[tcsc]]
//! from = 2
//! to = 3
//! # x_ref, t, cmin, cmax  (fractions of the branch reactance)
//!
//! [pod]                    # default damping-controller channels
//! measurement = { kind = "speed_deviation", gen = "G1" }
//! tcsc = [2, 3]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::controls::{GovernorParams, PssParams, Sexs, TcscParams};
use crate::grid::machine::MachineParams;
use crate::grid::model::Measurement;
use crate::grid::network::{Branch, Load};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusData {
    pub id: usize,
    #[serde(default)]
    pub base_kv: f64,
    #[serde(default)]
    pub v: Option<f64>,
    #[serde(default)]
    pub angle_deg: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorData {
    pub name: String,
    pub bus: usize,
    pub s_n: f64,
    pub p: f64,
    pub v: f64,
    #[serde(default)]
    pub slack: bool,
    #[serde(flatten)]
    pub params: MachineParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfiniteBusData {
    pub bus: usize,
    pub v: f64,
    #[serde(default)]
    pub angle_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseData {
    pub name: String,
    pub s_base: f64,
    pub f_base: f64,
    #[serde(rename = "bus")]
    pub buses: Vec<BusData>,
    #[serde(rename = "branch")]
    pub branches: Vec<Branch>,
    #[serde(rename = "load", default)]
    pub loads: Vec<Load>,
    #[serde(rename = "generator", default)]
    pub generators: Vec<GeneratorData>,
    #[serde(rename = "infinite_bus", default)]
    pub infinite_buses: Vec<InfiniteBusData>,
    #[serde(rename = "avr", default)]
    pub avrs: Vec<Sexs>,
    #[serde(rename = "pss", default)]
    pub pss: Vec<PssParams>,
    #[serde(rename = "governor", default)]
    pub governors: Vec<GovernorParams>,
    #[serde(rename = "tcsc", default)]
    pub tcscs: Vec<TcscParams>,
    /// Default damping-controller channels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pod: Option<PodChannels>,
}

/// Measurement and actuator used by the damping controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PodChannels {
    pub measurement: Measurement,
    /// Branch `[from, to]` carrying the actuated TCSC.
    pub tcsc: [usize; 2],
}

/// The single-machine infinite-bus case shipped with the crate.
pub const SMIB_CASE: &str = include_str!("../../cases/smib.toml");
/// The 39-bus, 10-machine case shipped with the crate.
pub const IEEE39_CASE: &str = include_str!("../../cases/ieee39.toml");

impl CaseData {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::Case(format!("{}: {e}", path.display())))
    }

    pub fn smib() -> Self {
        Self::parse(SMIB_CASE).expect("bundled SMIB case parses")
    }

    pub fn ieee39() -> Self {
        Self::parse(IEEE39_CASE).expect("bundled 39-bus case parses")
    }

    /// Resolve a built-in case name (`smib`, `ieee39`) or a file path.
    pub fn from_name_or_path(name: &str) -> Result<Self> {
        match name {
            "smib" => Ok(Self::smib()),
            "ieee39" => Ok(Self::ieee39()),
            path => Self::load(path),
        }
    }

    /// Take a branch out of service before initialization.
    pub fn trip_branch(&mut self, a: usize, b: usize) -> Result<()> {
        let br = self
            .branches
            .iter_mut()
            .find(|br| (br.from == a && br.to == b) || (br.from == b && br.to == a))
            .ok_or_else(|| Error::Case(format!("no branch between buses {a} and {b}")))?;
        br.in_service = false;
        Ok(())
    }

    pub fn set_pss_enabled(&mut self, gen: &str, enabled: bool) -> Result<()> {
        let pss = self
            .pss
            .iter_mut()
            .find(|p| p.gen == gen)
            .ok_or_else(|| Error::Case(format!("no stabilizer on {gen}")))?;
        pss.enabled = enabled;
        Ok(())
    }

    /// Scale every load and every scheduled generator output by `factor`.
    /// The slack unit picks up the change in losses.
    pub fn scale_demand(&mut self, factor: f64) -> Result<()> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::Case(format!("demand scale must be positive, got {factor}")));
        }
        for load in &mut self.loads {
            load.p *= factor;
            load.q *= factor;
        }
        for gen in self.generators.iter_mut().filter(|g| !g.slack) {
            gen.p *= factor;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_scaling() {
        let mut case = CaseData::ieee39();
        let before: f64 = case.loads.iter().map(|l| l.p).sum();
        case.scale_demand(1.2).unwrap();
        let after: f64 = case.loads.iter().map(|l| l.p).sum();
        assert!((after - 1.2 * before).abs() < 1e-9);
        assert!(case.scale_demand(0.0).is_err());
    }

    #[test]
    fn bundled_cases_parse() {
        let smib = CaseData::smib();
        assert_eq!(smib.generators.len(), 1);
        assert_eq!(smib.infinite_buses.len(), 1);
        let c39 = CaseData::ieee39();
        assert_eq!(c39.buses.len(), 39);
        assert_eq!(c39.generators.len(), 10);
        assert_eq!(c39.branches.len(), 46);
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = "name = \"x\"\ns_base = 100.0\nf_base = 50.0\nbogus = 1\nbus = []\nbranch = []\n";
        let err = CaseData::parse(text).unwrap_err().to_string();
        assert!(err.contains("line 4"), "{err}");
    }

    #[test]
    fn modifications() {
        let mut c = CaseData::ieee39();
        c.trip_branch(25, 2).unwrap();
        assert!(!c.branches.iter().find(|b| b.from == 2 && b.to == 25).unwrap().in_service);
        c.set_pss_enabled("G8", false).unwrap();
        assert!(c.trip_branch(1, 30).is_err());
    }
}
