//! Scenario files: a case, its modifications, a disturbance sequence and an
//! optional damping controller.
//!
//! ```toml
//! case = "smib"            # bundled name or path, relative to this file
//! t_end = 20.0             # s
//! dt = 0.005               # s, default 0.005
//! performance = "all"      # "all" or a generator name
//! # measurement = { kind = "speed_deviation", gen = "G1" }   # default: case [pod]
//! # tcsc = [2, 3]                                            # default: case [pod]
//!
//! [modify]                 # applied before initialization
//! demand_scale = 1.0
//! out_of_service = [[2, 25]]
//! pss_off = ["G8"]
//!
//! [[event]]
//! time = 1.0
//! clear = 1.05
//! action = { kind = "bus_fault", bus = 1 }   # admittance = [g, b], default bolted
//!
//! [controller]             # omit for an open-loop run
//! estimator = "kalman"     # or "lpf"
//! gain = 15.0
//! k_c = 0.26
//! period = 0.02
//! use_cim = true           # control-input model with the residue below
//! # frequency_hz = 1.0     # default: least damped mode in 0.1-3 Hz
//! # beta_deg = 26.5        # default: from the residue
//! # residue = [-0.028, 0.014]   # default: from modal analysis
//! # limits = [-0.09, 0.4]  # default: TCSC range around its set point
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::metrics::{cost_performance, Metrics};
use crate::experiment::study::STUDY_KC;
use crate::grid::{run_simulation, CaseData, Event, Measurement, PowerSystemModel, SimulationOptions, SimulationOutput, C64};
use crate::modal::{analyze, phase_compensation, DEFAULT_BAND};
use crate::pod::{EstimatorKind, Pod, PodConfig, PodRecord, DEFAULT_PERIOD};

fn default_dt() -> f64 {
    0.005
}

fn default_performance() -> String {
    "all".into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modifications {
    #[serde(default)]
    pub demand_scale: Option<f64>,
    #[serde(default)]
    pub out_of_service: Vec<[usize; 2]>,
    #[serde(default)]
    pub pss_off: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSpec {
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorKind,
    pub gain: f64,
    #[serde(default = "default_kc")]
    pub k_c: f64,
    #[serde(default = "default_period")]
    pub period: f64,
    #[serde(default)]
    pub use_cim: bool,
    #[serde(default)]
    pub frequency_hz: Option<f64>,
    #[serde(default)]
    pub beta_deg: Option<f64>,
    #[serde(default)]
    pub residue: Option<[f64; 2]>,
    #[serde(default)]
    pub limits: Option<[f64; 2]>,
    #[serde(default = "default_noise")]
    pub noise_scale: f64,
}

fn default_estimator() -> EstimatorKind {
    EstimatorKind::Kalman
}

fn default_kc() -> f64 {
    STUDY_KC
}

fn default_period() -> f64 {
    DEFAULT_PERIOD
}

fn default_noise() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub case: String,
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_performance")]
    pub performance: String,
    #[serde(default)]
    pub measurement: Option<Measurement>,
    #[serde(default)]
    pub tcsc: Option<[usize; 2]>,
    #[serde(default)]
    pub modify: Modifications,
    #[serde(default, rename = "event")]
    pub events: Vec<Event>,
    #[serde(default)]
    pub controller: Option<ControllerSpec>,
    /// Directory relative case paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Controller settings actually used by a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerUsed {
    pub estimator: EstimatorKind,
    pub frequency_hz: f64,
    pub gain: f64,
    pub beta_deg: f64,
    pub k_c: f64,
    pub period: f64,
    pub residue: Option<[f64; 2]>,
    pub limits: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub machines: Vec<String>,
    pub series: SimulationOutput,
    pub log: Vec<PodRecord>,
    pub controller: Option<ControllerUsed>,
    pub metrics: Metrics,
}

/// Everything but the time series, for JSON export.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub case: String,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub controller: Option<ControllerUsed>,
    pub cost: f64,
    pub performance: f64,
    pub warnings: Vec<String>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Scenario(format!("{field}: {msg}"))
}

impl Scenario {
    /// Parse scenario text. Syntax and type errors carry line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
        let mut s = Self::parse(&text).map_err(|e| match e {
            Error::Scenario(m) => Error::Scenario(format!("{}: {m}", path.display())),
            e => e,
        })?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(field_error("t_end", "must be a non-negative number"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(field_error("dt", "must be positive"));
        }
        if let Some(f) = self.modify.demand_scale {
            if !(f.is_finite() && f > 0.0) {
                return Err(field_error("modify.demand_scale", "must be positive"));
            }
        }
        for (i, ev) in self.events.iter().enumerate() {
            if !(ev.time.is_finite() && ev.time >= 0.0) {
                return Err(field_error(&format!("event[{i}].time"), "must be a non-negative number"));
            }
            if ev.clear.is_some_and(|c| !(c.is_finite() && c >= ev.time)) {
                return Err(field_error(&format!("event[{i}].clear"), "must not precede the event time"));
            }
        }
        if let Some(c) = &self.controller {
            if !c.gain.is_finite() {
                return Err(field_error("controller.gain", "must be finite"));
            }
            if !(c.k_c > 0.0 && c.k_c <= 1.0) {
                return Err(field_error("controller.k_c", "must lie in (0, 1]"));
            }
            if !(c.period.is_finite() && c.period > 0.0) {
                return Err(field_error("controller.period", "must be positive"));
            }
            if c.frequency_hz.is_some_and(|f| !(f.is_finite() && f > 0.0)) {
                return Err(field_error("controller.frequency_hz", "must be positive"));
            }
            if let Some([lo, hi]) = c.limits {
                if !(lo <= hi) {
                    return Err(field_error("controller.limits", "minimum exceeds maximum"));
                }
            }
            if c.use_cim && c.estimator == EstimatorKind::Lpf {
                return Err(field_error("controller.use_cim", "the LPF estimator has no control-input model"));
            }
        }
        Ok(())
    }

    /// The case with the modifications applied.
    pub fn case_data(&self) -> Result<CaseData> {
        let mut case = match self.case.as_str() {
            "smib" | "ieee39" => CaseData::from_name_or_path(&self.case)?,
            path => {
                let p = Path::new(path);
                let p = match &self.base_dir {
                    Some(dir) if p.is_relative() => dir.join(p),
                    _ => p.to_path_buf(),
                };
                CaseData::load(p)?
            }
        };
        if let Some(f) = self.modify.demand_scale {
            case.scale_demand(f)?;
        }
        for [a, b] in &self.modify.out_of_service {
            case.trip_branch(*a, *b)
                .map_err(|e| field_error("modify.out_of_service", e))?;
        }
        for g in &self.modify.pss_off {
            case.set_pss_enabled(g, false)
                .map_err(|e| field_error("modify.pss_off", e))?;
        }
        Ok(case)
    }

    pub fn run(&self) -> Result<ScenarioRun> {
        let case = self.case_data()?;
        let model = PowerSystemModel::from_case(&case)?;
        let measurement = self
            .measurement
            .clone()
            .or_else(|| case.pod.as_ref().map(|p| p.measurement.clone()));
        let tcsc = self.tcsc.or_else(|| case.pod.as_ref().map(|p| p.tcsc));
        let probe = measurement
            .as_ref()
            .map(|m| model.resolve_measurement(m))
            .transpose()
            .map_err(|e| field_error("measurement", e))?;
        let actuator = tcsc
            .map(|[a, b]| model.tcsc_index(a, b))
            .transpose()
            .map_err(|e| field_error("tcsc", e))?;

        let performance: Vec<usize> = if self.performance == "all" {
            (0..model.machines.len()).collect()
        } else {
            vec![model
                .machines
                .iter()
                .position(|m| m.name == self.performance)
                .ok_or_else(|| field_error("performance", format!("no generator named {}", self.performance)))?]
        };

        let opts = SimulationOptions {
            t_end: self.t_end,
            dt: self.dt,
            measurement: probe,
            actuator,
            record_states: false,
        };

        let (series, log, used) = match &self.controller {
            None => (run_simulation(&model, &self.events, None, &opts)?, Vec::new(), None),
            Some(spec) => {
                let (probe, actuator) = match (probe, actuator) {
                    (Some(p), Some(a)) => (p, a),
                    _ => {
                        return Err(field_error(
                            "controller",
                            "needs a measurement and a tcsc (set them here or in the case [pod] table)",
                        ))
                    }
                };
                let cfg = self.controller_config(spec, &model, probe, actuator)?;
                let used = ControllerUsed {
                    estimator: cfg.estimator,
                    frequency_hz: cfg.frequency(),
                    gain: cfg.gain,
                    beta_deg: cfg.beta_deg,
                    k_c: cfg.k_c,
                    period: cfg.period,
                    residue: cfg.residue.map(|r| [r.re, r.im]),
                    limits: [cfg.limits.0, cfg.limits.1],
                };
                let mut pod = Pod::new(cfg)?;
                let series = run_simulation(&model, &self.events, Some(&mut pod), &opts)?;
                (series, pod.into_log(), Some(used))
            }
        };
        let u: Vec<f64> = series.ticks.iter().map(|k| k.u).collect();
        let metrics = cost_performance(&u, performance.iter().map(|&i| series.speed[i].as_slice()));
        Ok(ScenarioRun {
            machines: model.machines.iter().map(|m| m.name.clone()).collect(),
            series,
            log,
            controller: used,
            metrics,
        })
    }

    fn controller_config(
        &self,
        spec: &ControllerSpec,
        model: &PowerSystemModel,
        probe: crate::grid::Probe,
        actuator: usize,
    ) -> Result<PodConfig> {
        let needs_modes = spec.frequency_hz.is_none()
            || spec.residue.is_none() && (spec.beta_deg.is_none() || spec.use_cim);
        let design = if needs_modes {
            let report = analyze(model, model.base_conditions(), probe, actuator, DEFAULT_BAND, 1)?;
            let (mode, r) = report
                .dominant()
                .ok_or_else(|| field_error("controller", "no electromechanical mode in 0.1-3 Hz"))?;
            Some((mode.eigenvalue.im, r))
        } else {
            None
        };
        let omega = match spec.frequency_hz {
            Some(f) => 2.0 * std::f64::consts::PI * f,
            None => design.expect("analysed").0,
        };
        let residue = match spec.residue {
            Some([re, im]) => Some(C64::new(re, im)),
            None => design.map(|d| d.1),
        };
        let beta_deg = match (spec.beta_deg, residue) {
            (Some(b), _) => b,
            (None, Some(r)) => phase_compensation(r).map_err(|e| field_error("controller.residue", e))?,
            (None, None) => unreachable!("residue analysed when beta is missing"),
        };
        let limits = match spec.limits {
            Some([lo, hi]) => (lo, hi),
            None => {
                let p = &model.tcscs[actuator].params;
                (p.cmin - p.x_ref, p.cmax - p.x_ref)
            }
        };
        let cfg = PodConfig {
            estimator: spec.estimator,
            omega,
            period: spec.period,
            k_c: spec.k_c,
            gain: spec.gain,
            beta_deg,
            residue: if spec.use_cim { residue } else { None },
            limits,
            noise_scale: spec.noise_scale,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ScenarioRun {
    pub fn summary(&self, scenario: &Scenario) -> ScenarioSummary {
        ScenarioSummary {
            case: scenario.case.clone(),
            t_end: scenario.t_end,
            dt: scenario.dt,
            steps: self.series.t.len(),
            controller: self.controller.clone(),
            cost: self.metrics.cost,
            performance: self.metrics.performance,
            warnings: self.series.warnings.clone(),
        }
    }
}
