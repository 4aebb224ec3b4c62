//! Closed-loop studies comparing the baseline P-POD with the control-input
//! model variant.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiment::metrics::{cost_performance, Metrics};
use crate::grid::{run_simulation, CaseData, Event, PowerSystemModel, Probe, SimulationOptions, SimulationOutput, C64};
use crate::modal::{analyze, phase_compensation, ModalReport, DEFAULT_BAND};
use crate::pod::{EstimatorKind, Pod, PodConfig, PodRecord, DEFAULT_PERIOD};

/// Which speed deviations enter the performance metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerformanceChannel {
    Machine(usize),
    AllMachines,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Phase compensation only; the estimator ignores the control.
    Baseline,
    /// Kalman filter with the control-input model.
    Cim,
}

impl ControllerKind {
    pub fn label(self) -> &'static str {
        match self {
            ControllerKind::Baseline => "P-POD-0",
            ControllerKind::Cim => "P-POD-CIM",
        }
    }
}

/// Targeted mode and its exact residue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PodDesign {
    pub eigenvalue: [f64; 2],
    pub frequency: f64,
    pub damping: f64,
    pub residue: [f64; 2],
    pub beta_deg: f64,
}

impl PodDesign {
    pub fn from_report(report: &ModalReport) -> Result<Self> {
        let (mode, r) = report
            .dominant()
            .ok_or_else(|| Error::Scenario("no electromechanical mode in band".into()))?;
        Ok(Self {
            eigenvalue: [mode.eigenvalue.re, mode.eigenvalue.im],
            frequency: mode.frequency(),
            damping: mode.damping_ratio(),
            residue: [r.re, r.im],
            beta_deg: phase_compensation(r)?,
        })
    }

    pub fn residue(&self) -> C64 {
        C64::new(self.residue[0], self.residue[1])
    }

    pub fn omega(&self) -> f64 {
        self.eigenvalue[1]
    }
}

/// A model with its disturbance, channels and controller design.
#[derive(Debug, Clone)]
pub struct StudySetup {
    pub model: PowerSystemModel,
    pub probe: Probe,
    pub actuator: usize,
    pub events: Vec<Event>,
    pub t_end: f64,
    pub dt: f64,
    pub period: f64,
    pub k_c: f64,
    pub performance: PerformanceChannel,
    pub design: PodDesign,
}

/// Estimator bandwidth ratio used by the bundled studies.
pub const STUDY_KC: f64 = 0.26;

/// Fault time used by the bundled studies, s.
pub const FAULT_TIME: f64 = 1.0;
/// Fault duration used by the bundled studies, s.
pub const FAULT_DURATION: f64 = 0.05;

impl StudySetup {
    /// Build from a case using its default controller channels; the design
    /// targets the least damped mode in the electromechanical band.
    pub fn from_case(case: &CaseData, events: Vec<Event>, t_end: f64, performance: PerformanceChannel) -> Result<Self> {
        let pod = case
            .pod
            .as_ref()
            .ok_or_else(|| Error::Case("case has no [pod] channels".into()))?;
        let model = PowerSystemModel::from_case(case)?;
        let probe = model.resolve_measurement(&pod.measurement)?;
        let actuator = model.tcsc_index(pod.tcsc[0], pod.tcsc[1])?;
        let report = analyze(&model, model.base_conditions(), probe, actuator, DEFAULT_BAND, 1)?;
        let design = PodDesign::from_report(&report)?;
        Ok(Self {
            model,
            probe,
            actuator,
            events,
            t_end,
            dt: 0.005,
            period: DEFAULT_PERIOD,
            k_c: STUDY_KC,
            performance,
            design,
        })
    }

    /// Single machine, 50 ms bolted fault at the machine terminal, 20 s.
    pub fn smib() -> Result<Self> {
        let case = CaseData::smib();
        let events = vec![Event::bus_fault(1, FAULT_TIME, FAULT_TIME + FAULT_DURATION)];
        Self::from_case(&case, events, 20.0, PerformanceChannel::Machine(0))
    }

    /// The 39-bus case under stressed loading with line 2-25 out and the
    /// stabilizers of G8 and G9 off; 50 ms fault at bus 2, 30 s.
    pub fn ieee39() -> Result<Self> {
        let case = ieee39_degraded()?;
        let events = vec![Event::bus_fault(2, FAULT_TIME, FAULT_TIME + FAULT_DURATION)];
        Self::from_case(&case, events, 30.0, PerformanceChannel::AllMachines)
    }

    /// Modulation range of the actuator relative to its set point.
    pub fn limits(&self) -> (f64, f64) {
        let p = &self.model.tcscs[self.actuator].params;
        (p.cmin - p.x_ref, p.cmax - p.x_ref)
    }

    /// Controller of `kind` designed from `residue` (the exact residue or a
    /// perturbed test residue).
    pub fn config(&self, kind: ControllerKind, gain: f64, residue: C64) -> Result<PodConfig> {
        let mut cfg = PodConfig::new(self.design.omega(), self.period);
        cfg.estimator = EstimatorKind::Kalman;
        cfg.k_c = self.k_c;
        cfg.gain = gain;
        cfg.beta_deg = phase_compensation(residue)?;
        cfg.limits = self.limits();
        cfg.residue = match kind {
            ControllerKind::Baseline => None,
            ControllerKind::Cim => Some(residue),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn options(&self, record_states: bool) -> SimulationOptions {
        SimulationOptions {
            t_end: self.t_end,
            dt: self.dt,
            measurement: Some(self.probe),
            actuator: Some(self.actuator),
            record_states,
        }
    }

    /// Run without a controller.
    pub fn run_open_loop(&self) -> Result<SimulationOutput> {
        run_simulation(&self.model, &self.events, None, &self.options(false))
    }

    /// Run with one controller.
    pub fn run(&self, label: &str, cfg: PodConfig) -> Result<ExperimentResult> {
        let mut pod = Pod::new(cfg.clone())?;
        let series = run_simulation(&self.model, &self.events, Some(&mut pod), &self.options(false))?;
        let u: Vec<f64> = series.ticks.iter().map(|t| t.u).collect();
        let metrics = match self.performance {
            PerformanceChannel::Machine(i) => cost_performance(&u, [series.speed[i].as_slice()]),
            PerformanceChannel::AllMachines => cost_performance(&u, series.speed.iter().map(|s| s.as_slice())),
        };
        Ok(ExperimentResult {
            label: label.to_string(),
            gain: cfg.gain,
            beta_deg: cfg.beta_deg,
            residue: cfg.residue.map(|r| [r.re, r.im]),
            estimator: cfg.estimator,
            metrics,
            series,
            log: pod.into_log(),
        })
    }

    pub fn run_kind(&self, kind: ControllerKind, gain: f64, residue: C64) -> Result<ExperimentResult> {
        self.run(kind.label(), self.config(kind, gain, residue)?)
    }
}

/// Load and dispatch multiplier of the degraded 39-bus operating point.
pub const DEGRADED_DEMAND_SCALE: f64 = 1.2;

/// The bundled 39-bus case, degraded: demand raised, line 2-25 out of
/// service and the stabilizers of G8 and G9 disabled.
pub fn ieee39_degraded() -> Result<CaseData> {
    let mut case = CaseData::ieee39();
    case.scale_demand(DEGRADED_DEMAND_SCALE)?;
    case.trip_branch(2, 25)?;
    case.set_pss_enabled("G8", false)?;
    case.set_pss_enabled("G9", false)?;
    Ok(case)
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub label: String,
    pub gain: f64,
    pub beta_deg: f64,
    pub residue: Option<[f64; 2]>,
    pub estimator: EstimatorKind,
    pub metrics: Metrics,
    pub series: SimulationOutput,
    pub log: Vec<PodRecord>,
}

/// Summary of one run without the time series.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub gain: f64,
    pub beta_deg: f64,
    pub residue: Option<[f64; 2]>,
    pub estimator: EstimatorKind,
    pub cost: f64,
    pub performance: f64,
}

impl ExperimentResult {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            label: self.label.clone(),
            gain: self.gain,
            beta_deg: self.beta_deg,
            residue: self.residue,
            estimator: self.estimator,
            cost: self.metrics.cost,
            performance: self.metrics.performance,
        }
    }
}

/// The pair of runs of a comparative study.
#[derive(Debug, Clone)]
pub struct PairedResult {
    pub design: PodDesign,
    pub baseline: ExperimentResult,
    pub cim: ExperimentResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairedSummary {
    pub design: PodDesign,
    pub baseline: RunSummary,
    pub cim: RunSummary,
    /// `(C_0 - C_cim) / C_cim * 100`
    pub cost_excess_pct: f64,
    /// `(P_0 - P_cim) / P_cim * 100`
    pub performance_excess_pct: f64,
}

impl PairedResult {
    pub fn summary(&self) -> PairedSummary {
        let (b, c) = (&self.baseline.metrics, &self.cim.metrics);
        PairedSummary {
            design: self.design,
            baseline: self.baseline.summary(),
            cim: self.cim.summary(),
            cost_excess_pct: (b.cost - c.cost) / c.cost * 100.0,
            performance_excess_pct: (b.performance - c.performance) / c.performance * 100.0,
        }
    }
}

/// Both controllers on the same setup with the exact residue.
pub fn run_pair(setup: &StudySetup, gain_baseline: f64, gain_cim: f64) -> Result<PairedResult> {
    let r = setup.design.residue();
    let (baseline, cim) = rayon::join(
        || setup.run_kind(ControllerKind::Baseline, gain_baseline, r),
        || setup.run_kind(ControllerKind::Cim, gain_cim, r),
    );
    Ok(PairedResult {
        design: setup.design,
        baseline: baseline?,
        cim: cim?,
    })
}

/// Single-machine comparison on the 50 ms terminal fault.
pub fn run_smib_study(gain_baseline: f64, gain_cim: f64) -> Result<PairedResult> {
    run_pair(&StudySetup::smib()?, gain_baseline, gain_cim)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub gain: f64,
    /// `None` when the run diverged.
    pub cost: Option<f64>,
    pub performance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainCurve {
    pub kind: ControllerKind,
    pub points: Vec<SweepPoint>,
}

impl GainCurve {
    /// Performance at `cost` by piecewise-linear interpolation along the
    /// curve, using only the leading stretch over which cost increases.
    pub fn performance_at(&self, cost: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .map_while(|p| Some((p.cost?, p.performance?)))
            .collect();
        let mut mono = vec![*pts.first()?];
        for &p in &pts[1..] {
            if p.0 <= mono.last().expect("non-empty").0 {
                break;
            }
            mono.push(p);
        }
        interpolate(&mono, cost)
    }

    /// Largest cost reachable along the increasing stretch.
    pub fn max_cost(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for p in &self.points {
            match p.cost {
                Some(c) if best.is_none_or(|b| c > b) => best = Some(c),
                _ => break,
            }
        }
        best
    }
}

/// Costs (breakpoints of either curve within the overlapping range) at
/// which `lower` outperforms `upper`, with both performances.
pub fn dominance_violations(upper: &GainCurve, lower: &GainCurve) -> Vec<(f64, f64, f64)> {
    let hi = match (upper.max_cost(), lower.max_cost()) {
        (Some(a), Some(b)) => a.min(b),
        _ => return Vec::new(),
    };
    let mut costs: Vec<f64> = upper
        .points
        .iter()
        .chain(&lower.points)
        .filter_map(|p| p.cost)
        .filter(|&c| c <= hi)
        .collect();
    costs.sort_by(f64::total_cmp);
    costs.dedup();
    costs
        .into_iter()
        .filter_map(|c| {
            let (pu, pl) = (upper.performance_at(c)?, lower.performance_at(c)?);
            (pl > pu).then_some((c, pu, pl))
        })
        .collect()
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> Option<f64> {
    if pts.len() == 1 {
        return (pts[0].0 == x).then_some(pts[0].1);
    }
    pts.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (x >= x0 && x <= x1).then(|| y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    })
}

fn sweep_point(setup: &StudySetup, kind: ControllerKind, gain: f64, residue: C64) -> Result<SweepPoint> {
    match setup.run_kind(kind, gain, residue) {
        Ok(r) => Ok(SweepPoint {
            gain,
            cost: Some(r.metrics.cost),
            performance: Some(r.metrics.performance),
        }),
        Err(Error::Divergence { .. }) => Ok(SweepPoint {
            gain,
            cost: None,
            performance: None,
        }),
        Err(e) => Err(e),
    }
}

/// Cost/performance curves of both controllers over `gains`.
pub fn gain_sweep(setup: &StudySetup, gains: &[f64]) -> Result<[GainCurve; 2]> {
    gain_sweep_with_residue(setup, gains, setup.design.residue())
}

fn gain_sweep_with_residue(setup: &StudySetup, gains: &[f64], residue: C64) -> Result<[GainCurve; 2]> {
    let kinds = [ControllerKind::Baseline, ControllerKind::Cim];
    let jobs: Vec<(ControllerKind, f64)> = kinds.iter().flat_map(|&k| gains.iter().map(move |&g| (k, g))).collect();
    let points = jobs
        .par_iter()
        .map(|&(k, g)| sweep_point(setup, k, g, residue))
        .collect::<Result<Vec<_>>>()?;
    let (a, b) = points.split_at(gains.len());
    Ok([
        GainCurve {
            kind: ControllerKind::Baseline,
            points: a.to_vec(),
        },
        GainCurve {
            kind: ControllerKind::Cim,
            points: b.to_vec(),
        },
    ])
}

/// Default gain list of the sweeps.
pub fn default_gains() -> Vec<f64> {
    vec![0.0, 5.0, 10.0, 15.0, 20.0, 28.0, 40.0, 55.0, 70.0, 85.0, 100.0]
}

/// Default residue scale factors.
pub fn default_scales() -> Vec<f64> {
    vec![0.5, 0.63, 0.79, 1.0, 1.26, 1.59, 2.0]
}

/// Default residue rotation angles, degrees.
pub fn default_angles() -> Vec<f64> {
    (-6..=6).map(|k| 10.0 * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCell {
    pub scale: f64,
    pub angle_deg: f64,
    pub baseline: Option<f64>,
    pub cim: Option<f64>,
    /// `(P_cim - P_0) / P_cim * 100`; `None` when the target cost is
    /// unreachable for either controller.
    pub advantage_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub scales: Vec<f64>,
    pub angles_deg: Vec<f64>,
    pub gains: Vec<f64>,
    pub target_cost: f64,
    pub exact_residue: [f64; 2],
    /// Row-major over `(scale, angle)`.
    pub cells: Vec<GridCell>,
    /// Angle errors bounding the contiguous positive-advantage region
    /// around zero error, at unit scale.
    pub advantage_range_deg: Option<[f64; 2]>,
}

impl SweepGrid {
    pub fn cell(&self, scale_idx: usize, angle_idx: usize) -> &GridCell {
        &self.cells[scale_idx * self.angles_deg.len() + angle_idx]
    }
}

/// Equal-cost reference: cost of the baseline at gain 28 with the exact
/// residue.
pub fn equal_cost_target(setup: &StudySetup) -> Result<f64> {
    Ok(setup
        .run_kind(ControllerKind::Baseline, 28.0, setup.design.residue())?
        .metrics
        .cost)
}

/// Performance at a fixed control cost for residues `r * s * e^{j a}`.
pub fn residue_sweep(
    setup: &StudySetup,
    scales: &[f64],
    angles_deg: &[f64],
    gains: &[f64],
    target_cost: Option<f64>,
) -> Result<SweepGrid> {
    if gains.len() < 2 {
        return Err(Error::Scenario("a residue sweep needs at least two gains".into()));
    }
    let target = match target_cost {
        Some(c) => c,
        None => equal_cost_target(setup)?,
    };
    let r0 = setup.design.residue();
    let cells_idx: Vec<(f64, f64)> = scales
        .iter()
        .flat_map(|&s| angles_deg.iter().map(move |&a| (s, a)))
        .collect();
    let cells = cells_idx
        .par_iter()
        .map(|&(s, a)| {
            let r = r0 * C64::from_polar(s, a.to_radians());
            let [mut b, mut c] = gain_sweep_with_residue(setup, gains, r)?;
            extend_to_cost(setup, &mut b, r, target)?;
            extend_to_cost(setup, &mut c, r, target)?;
            let (pb, pc) = (b.performance_at(target), c.performance_at(target));
            Ok(GridCell {
                scale: s,
                angle_deg: a,
                baseline: pb,
                cim: pc,
                advantage_pct: pb.zip(pc).map(|(pb, pc)| (pc - pb) / pc * 100.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut grid = SweepGrid {
        scales: scales.to_vec(),
        angles_deg: angles_deg.to_vec(),
        gains: gains.to_vec(),
        target_cost: target,
        exact_residue: [r0.re, r0.im],
        cells,
        advantage_range_deg: None,
    };
    grid.advantage_range_deg = advantage_range(&grid);
    Ok(grid)
}

/// Gain ceiling when extending a curve towards a target cost.
pub const MAX_SWEEP_GAIN: f64 = 1e4;

/// Appends geometrically growing gains (factor 1.5) until the curve's cost
/// reaches `target`, its cost stops increasing, or the gain passes
/// [`MAX_SWEEP_GAIN`]. A larger model residue makes the control-input model
/// claim more of the oscillation as its own doing, so the same cost needs a
/// larger gain.
fn extend_to_cost(setup: &StudySetup, curve: &mut GainCurve, residue: C64, target: f64) -> Result<()> {
    loop {
        let Some(max) = curve.max_cost() else {
            return Ok(());
        };
        let last = *curve.points.last().expect("non-empty curve");
        if max >= target || last.cost != Some(max) || last.gain >= MAX_SWEEP_GAIN {
            return Ok(());
        }
        let gain = (last.gain * 1.5).max(1.0);
        curve.points.push(sweep_point(setup, curve.kind, gain, residue)?);
    }
}

fn advantage_range(grid: &SweepGrid) -> Option<[f64; 2]> {
    let si = grid.scales.iter().position(|&s| (s - 1.0).abs() < 1e-12)?;
    let zero = grid.angles_deg.iter().position(|&a| a == 0.0)?;
    let positive = |ai: usize| grid.cell(si, ai).advantage_pct.is_some_and(|a| a > 0.0);
    if !positive(zero) {
        return None;
    }
    let mut lo = zero;
    while lo > 0 && positive(lo - 1) {
        lo -= 1;
    }
    let mut hi = zero;
    while hi + 1 < grid.angles_deg.len() && positive(hi + 1) {
        hi += 1;
    }
    Some([grid.angles_deg[lo], grid.angles_deg[hi]])
}

/// Outcome of the multi-machine study.
#[derive(Debug, Clone)]
pub struct Ieee39Study {
    pub pair: PairedResult,
    pub open_loop: Option<SimulationOutput>,
    pub report: Ieee39Summary,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ieee39Summary {
    pub study: PairedSummary,
    /// Final oscillation envelope over the post-fault peak, per controller.
    pub envelope_ratio_baseline: f64,
    pub envelope_ratio_cim: f64,
    /// RMS of the modulation over the last quarter of the run.
    pub late_u_rms_baseline: f64,
    pub late_u_rms_cim: f64,
    pub open_loop_envelope_ratio: Option<f64>,
}

/// Peak of `|y - y_ss|` after `t_from` over the post-fault peak, where the
/// final window spans one period of the targeted mode.
pub fn envelope_ratio(t: &[f64], y: &[f64], y_ss: f64, t_from: f64, period: f64) -> f64 {
    let t_end = *t.last().unwrap_or(&0.0);
    let peak = t
        .iter()
        .zip(y)
        .filter(|(ti, _)| **ti >= t_from)
        .map(|(_, v)| (v - y_ss).abs())
        .fold(0.0, f64::max);
    let last = t
        .iter()
        .zip(y)
        .filter(|(ti, _)| **ti >= t_end - period)
        .map(|(_, v)| (v - y_ss).abs())
        .fold(0.0, f64::max);
    if peak == 0.0 {
        0.0
    } else {
        last / peak
    }
}

/// RMS of the controller output over ticks after `t_from`.
pub fn late_rms(result: &ExperimentResult, t_from: f64) -> f64 {
    let u: Vec<f64> = result.series.ticks.iter().filter(|k| k.t >= t_from).map(|k| k.u).collect();
    if u.is_empty() {
        0.0
    } else {
        (u.iter().map(|v| v * v).sum::<f64>() / u.len() as f64).sqrt()
    }
}

/// Degraded 39-bus system: both controllers at `gain`, plus an open-loop
/// reference run when `with_open_loop`.
pub fn run_ieee39_study(gain: f64, with_open_loop: bool) -> Result<Ieee39Study> {
    let setup = StudySetup::ieee39()?;
    run_ieee39_on(&setup, gain, with_open_loop)
}

pub fn run_ieee39_on(setup: &StudySetup, gain: f64, with_open_loop: bool) -> Result<Ieee39Study> {
    let pair = run_pair(setup, gain, gain)?;
    let open_loop = if with_open_loop {
        match setup.run_open_loop() {
            Ok(o) => Some(o),
            Err(Error::Divergence { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let x0 = setup.model.initial_state();
    let v0 = setup.model.initial_voltages();
    let y_ss = setup.model.measure(setup.probe, x0, v0);
    let t_from = FAULT_TIME + FAULT_DURATION;
    let period = 1.0 / setup.design.frequency;
    let env = |s: &SimulationOutput| envelope_ratio(&s.t, &s.y, y_ss, t_from, period);
    let late = 0.75 * setup.t_end;
    let report = Ieee39Summary {
        study: pair.summary(),
        envelope_ratio_baseline: env(&pair.baseline.series),
        envelope_ratio_cim: env(&pair.cim.series),
        late_u_rms_baseline: late_rms(&pair.baseline, late),
        late_u_rms_cim: late_rms(&pair.cim, late),
        open_loop_envelope_ratio: open_loop.as_ref().map(env),
    };
    Ok(Ieee39Study {
        pair,
        open_loop,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(pts: &[(f64, f64)]) -> GainCurve {
        GainCurve {
            kind: ControllerKind::Cim,
            points: pts
                .iter()
                .enumerate()
                .map(|(i, &(c, p))| SweepPoint {
                    gain: i as f64,
                    cost: Some(c),
                    performance: Some(p),
                })
                .collect(),
        }
    }

    #[test]
    fn interpolation_along_curve() {
        let c = curve(&[(0.0, 1.0), (1.0, 2.0), (3.0, 3.0)]);
        assert_eq!(c.performance_at(0.5), Some(1.5));
        assert_eq!(c.performance_at(2.0), Some(2.5));
        assert_eq!(c.performance_at(3.5), None);
        assert_eq!(c.max_cost(), Some(3.0));
        // a cost reversal ends the usable stretch
        let c = curve(&[(0.0, 1.0), (2.0, 2.0), (1.5, 3.0), (4.0, 4.0)]);
        assert_eq!(c.performance_at(3.0), None);
        assert_eq!(c.performance_at(1.0), Some(1.5));
    }

    #[test]
    fn envelope() {
        let t: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|&t| 1.0 + (-0.5 * t).exp() * (6.0 * t).cos()).collect();
        let r = envelope_ratio(&t, &y, 1.0, 0.0, 1.0);
        assert!(r > (-0.5f64 * 9.99).exp() && r < (-0.5f64 * 8.9).exp());
    }
}
