//! Time-domain simulation loop.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::events::{Event, EventSchedule};
use crate::grid::integrator::step_with_slope;
use crate::grid::model::{PowerSystemModel, Probe};
use crate::grid::network::C64;

/// A sampled-data controller driving one actuator.
pub trait ControlHook {
    /// Sampling period, s.
    fn period(&self) -> f64;

    /// Called once per period with the current measurement. Returns the
    /// requested modulation.
    fn tick(&mut self, t: f64, y: f64) -> f64;

    /// Informs the controller of the modulation the actuator actually
    /// applied for the request returned by the last `tick`.
    fn applied(&mut self, _u: f64) {}
}

#[derive(Debug, Clone)]
pub struct SimulationOptions {
    pub t_end: f64,
    pub dt: f64,
    pub measurement: Option<Probe>,
    /// TCSC index receiving the controller output.
    pub actuator: Option<usize>,
    /// Keep every state vector and bus voltage vector.
    pub record_states: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            t_end: 20.0,
            dt: 0.005,
            measurement: None,
            actuator: None,
            record_states: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlTick {
    pub t: f64,
    pub y: f64,
    pub u: f64,
}

/// Signals sampled at every integration step.
#[derive(Debug, Clone, Default)]
pub struct SimulationOutput {
    pub t: Vec<f64>,
    /// Configured measurement (zero when none is configured).
    pub y: Vec<f64>,
    /// Applied modulation, held between controller ticks.
    pub u: Vec<f64>,
    /// Speed deviation per machine.
    pub speed: Vec<Vec<f64>>,
    pub states: Vec<DVector<f64>>,
    pub voltages: Vec<DVector<C64>>,
    pub ticks: Vec<ControlTick>,
    pub warnings: Vec<String>,
}

/// Integrate `model` from its equilibrium over `[0, t_end]`.
pub fn run_simulation(
    model: &PowerSystemModel,
    events: &[Event],
    mut hook: Option<&mut dyn ControlHook>,
    opts: &SimulationOptions,
) -> Result<SimulationOutput> {
    if !(opts.dt > 0.0 && opts.t_end >= 0.0) {
        return Err(Error::Scenario("dt must be positive and t_end non-negative".into()));
    }
    let schedule = EventSchedule::new(model, events, opts.dt)?;
    let mut out = SimulationOutput {
        warnings: schedule.warnings.clone(),
        speed: vec![Vec::new(); model.machines.len()],
        ..Default::default()
    };
    let n_steps = (opts.t_end / opts.dt).round() as usize;

    let ctrl_every = match &hook {
        Some(h) => {
            let ratio = h.period() / opts.dt;
            let m = ratio.round().max(1.0);
            if (m - ratio).abs() > 1e-9 {
                out.warnings.push(format!(
                    "controller period {} s is not a multiple of dt; using {} s",
                    h.period(),
                    m * opts.dt
                ));
            }
            m as usize
        }
        None => usize::MAX,
    };
    if hook.is_some() && opts.actuator.is_none() {
        return Err(Error::Scenario("a controller needs an actuator".into()));
    }
    if let Some(a) = opts.actuator {
        if a >= model.tcscs.len() {
            return Err(Error::Scenario(format!("actuator index {a} out of range")));
        }
    }

    let mut x = model.initial_state().clone();
    let mut u_vec = vec![0.0; model.tcscs.len()];
    let mut u_hold = 0.0;
    let mut current = None;
    let mut solver = None;

    for k in 0..=n_steps {
        let t = k as f64 * opts.dt;
        let (cond, pod_enabled) = schedule.conditions_at(model, k);
        if current.as_ref() != Some(&cond) {
            solver = Some(model.solver(&cond)?);
            current = Some(cond);
        }
        let cond = current.as_ref().expect("conditions set");
        let solver = solver.as_ref().expect("solver set");

        let v = model.solve_voltages(&x, solver)?;
        let y = opts.measurement.map(|p| model.measure(p, &x, &v)).unwrap_or(0.0);

        if let (Some(h), Some(a)) = (hook.as_deref_mut(), opts.actuator) {
            if !pod_enabled {
                u_hold = 0.0;
            } else if k % ctrl_every == 0 {
                let requested = h.tick(t, y);
                u_hold = model.tcscs[a].applied_modulation(requested);
                h.applied(u_hold);
                out.ticks.push(ControlTick { t, y, u: u_hold });
            }
            u_vec[a] = u_hold;
        }

        out.t.push(t);
        out.y.push(y);
        out.u.push(u_hold);
        for (i, s) in out.speed.iter_mut().enumerate() {
            s.push(x[model.layout.machine_offset(i) + 1]);
        }
        if opts.record_states {
            out.states.push(x.clone());
            out.voltages.push(v.clone());
        }
        if k == n_steps {
            break;
        }

        let k1 = model.derivatives_at(&x, &v, &u_vec, cond)?;
        x = step_with_slope(&x, &k1, opts.dt, |xp| {
            model.derivatives(xp, &u_vec, cond, solver).map(|e| e.dx)
        })
        .map_err(|e| match e {
            Error::SingularNetwork { .. } | Error::NonFiniteDerivative { .. } => Error::Divergence {
                step: k + 1,
                time: t + opts.dt,
            },
            other => other,
        })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                step: k + 1,
                time: t + opts.dt,
            });
        }
    }
    Ok(out)
}
