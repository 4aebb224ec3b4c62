//! The assembled power system: network, machines, controllers and
//! actuators, initialized at a load-flow operating point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::case::CaseData;
use crate::grid::controls::{Exciter, Governor, Stabilizer, Tcsc};
use crate::grid::loadflow::{self, BusKind, LoadFlowProblem};
use crate::grid::machine::{MachineState, SynchronousMachine, MACHINE_STATES};
use crate::grid::network::{solve_network, Bus, NetworkModel, C64};
use crate::grid::state::{DynamicState, StateLayout};

#[derive(Debug, Clone, Copy)]
pub struct InfiniteBus {
    pub bus: usize,
    pub voltage: C64,
}

/// Switchable conditions that change the algebraic network or disable
/// controllers. Produced from the active event set.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditions {
    pub branch_in_service: Vec<bool>,
    /// `(bus index, fault admittance)`
    pub faults: Vec<(usize, C64)>,
    pub pss_enabled: Vec<bool>,
}

/// A measurable signal, as named in case and scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Measurement {
    /// Speed deviation of a machine, p.u.
    SpeedDeviation { gen: String },
    /// Active power entering the branch at `from`, p.u. on `base_mva`
    /// (the system base when omitted).
    BranchPower {
        from: usize,
        to: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        base_mva: Option<f64>,
    },
    /// Voltage magnitude of a bus, p.u.
    BusVoltage { bus: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Probe {
    SpeedDeviation(usize),
    /// `scale` converts system-base p.u. to the measurement base.
    BranchPower { branch: usize, reversed: bool, scale: f64 },
    BusVoltage(usize),
}

#[derive(Debug, Clone)]
pub struct PowerSystemModel {
    pub name: String,
    pub network: NetworkModel,
    pub omega_base: f64,
    pub machines: Vec<SynchronousMachine>,
    pub exciters: Vec<Exciter>,
    pub stabilizers: Vec<Stabilizer>,
    pub governors: Vec<Governor>,
    pub tcscs: Vec<Tcsc>,
    pub infinite_buses: Vec<InfiniteBus>,
    pub layout: StateLayout,
    /// Field voltage of machines without an exciter.
    efd_const: Vec<f64>,
    /// Mechanical power of machines without a governor.
    pm_const: Vec<f64>,
    machine_avr: Vec<Option<usize>>,
    machine_pss: Vec<Option<usize>>,
    machine_gov: Vec<Option<usize>>,
    load_shunts: Vec<(usize, C64)>,
    base_in_service: Vec<bool>,
    base_pss_enabled: Vec<bool>,
    x0: DVector<f64>,
    v0: DVector<C64>,
}

/// Cached constant part of the augmented admittance for one set of
/// conditions. TCSC branches are stamped per evaluation.
#[derive(Debug, Clone)]
pub struct NetworkSolver {
    base: DMatrix<C64>,
    tcsc_active: Vec<bool>,
    fixed: Vec<(usize, C64)>,
}

/// Derivatives together with the network solution they were computed from.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub dx: DVector<f64>,
    pub voltages: DVector<C64>,
}

fn find_gen(names: &[String], gen: &str, what: &str) -> Result<usize> {
    names
        .iter()
        .position(|n| n == gen)
        .ok_or_else(|| Error::Case(format!("{what} references unknown generator {gen}")))
}

impl PowerSystemModel {
    /// Build the model and initialize every device at the load-flow solution.
    pub fn from_case(case: &CaseData) -> Result<Self> {
        if !(case.s_base > 0.0 && case.f_base > 0.0) {
            return Err(Error::Case("s_base and f_base must be positive".into()));
        }
        let buses = case
            .buses
            .iter()
            .map(|b| Bus { id: b.id, base_kv: b.base_kv })
            .collect();
        let network = NetworkModel::new(
            case.s_base,
            case.f_base,
            buses,
            case.branches.clone(),
            case.loads.clone(),
        )?;
        let n = network.n_bus();

        let mut machines = Vec::with_capacity(case.generators.len());
        for g in &case.generators {
            g.params.validate(&g.name)?;
            if !(g.s_n > 0.0) {
                return Err(Error::Case(format!("machine {}: s_n must be positive", g.name)));
            }
            let bus = network.bus_index(g.bus)?;
            if machines.iter().any(|m: &SynchronousMachine| m.bus == bus) {
                return Err(Error::Case(format!("more than one machine on bus {}", g.bus)));
            }
            machines.push(SynchronousMachine {
                name: g.name.clone(),
                bus,
                params: g.params.to_system_base(g.s_n, case.s_base),
            });
        }
        let names: Vec<String> = machines.iter().map(|m| m.name.clone()).collect();

        let mut infinite_buses = Vec::new();
        for ib in &case.infinite_buses {
            let bus = network.bus_index(ib.bus)?;
            if machines.iter().any(|m| m.bus == bus) {
                return Err(Error::Case(format!("bus {} has both a machine and an infinite bus", ib.bus)));
            }
            infinite_buses.push(InfiniteBus {
                bus,
                voltage: C64::from_polar(ib.v, ib.angle_deg.to_radians()),
            });
        }

        let mut tcscs = Vec::new();
        for t in &case.tcscs {
            t.validate()?;
            let branch = network.find_branch(t.from, t.to)?;
            tcscs.push(Tcsc { params: t.clone(), branch });
        }

        // Load flow.
        let slack_count =
            infinite_buses.len() + case.generators.iter().filter(|g| g.slack).count();
        if slack_count == 0 {
            return Err(Error::Case("no slack: add an infinite bus or mark a generator as slack".into()));
        }
        let mut kind = vec![BusKind::Pq; n];
        let mut s_spec = vec![C64::new(0.0, 0.0); n];
        let mut v_start = DVector::from_element(n, C64::new(1.0, 0.0));
        for (i, b) in case.buses.iter().enumerate() {
            v_start[i] = C64::from_polar(
                b.v.unwrap_or(1.0),
                b.angle_deg.unwrap_or(0.0).to_radians(),
            );
        }
        for l in &network.loads {
            s_spec[network.bus_index(l.bus)?] -= C64::new(l.p, l.q);
        }
        for (g, m) in case.generators.iter().zip(&machines) {
            kind[m.bus] = if g.slack { BusKind::Slack } else { BusKind::Pv };
            s_spec[m.bus] += C64::new(g.p, 0.0);
            v_start[m.bus] = C64::from_polar(g.v, v_start[m.bus].arg());
        }
        for ib in &infinite_buses {
            kind[ib.bus] = BusKind::Slack;
            v_start[ib.bus] = ib.voltage;
        }
        let base_in_service: Vec<bool> = network.branches.iter().map(|b| b.in_service).collect();
        let x_scale: Vec<(usize, f64)> = tcscs
            .iter()
            .map(|t| (t.branch, 1.0 - t.params.x_ref))
            .collect();
        let y_lf = network.build_admittance(&base_in_service, &x_scale, &[])?;
        let lf = loadflow::solve(
            &LoadFlowProblem {
                y: y_lf.clone(),
                kind,
                s_spec,
                v0: v_start,
            },
            1e-13,
            30,
        )?;
        let v0 = lf.voltages;
        let s_bus = loadflow::bus_injections(&y_lf, &v0);

        let load_shunts = network.load_admittances(&v0);

        // Machines.
        let mut machine_states = Vec::with_capacity(machines.len());
        let mut efd0 = Vec::with_capacity(machines.len());
        let mut pm0 = Vec::with_capacity(machines.len());
        for m in &machines {
            let load_here: C64 = network
                .loads
                .iter()
                .filter(|l| network.bus_index(l.bus).ok() == Some(m.bus))
                .map(|l| C64::new(l.p, l.q))
                .sum();
            let s_gen = s_bus[m.bus] + load_here;
            let (st, efd, pm) = m.initialize(v0[m.bus], s_gen);
            machine_states.push(st);
            efd0.push(efd);
            pm0.push(pm);
        }

        let mut machine_avr = vec![None; machines.len()];
        let mut exciters = Vec::new();
        let mut avr_states = Vec::new();
        for a in &case.avrs {
            a.validate()?;
            let mi = find_gen(&names, &a.gen, "avr")?;
            if machine_avr[mi].is_some() {
                return Err(Error::Case(format!("more than one avr on {}", a.gen)));
            }
            let (exc, x) = Exciter::initialize(a.clone(), mi, v0[machines[mi].bus].norm(), efd0[mi])?;
            machine_avr[mi] = Some(exciters.len());
            exciters.push(exc);
            avr_states.push(x);
        }

        let mut machine_pss = vec![None; machines.len()];
        let mut stabilizers = Vec::new();
        for p in &case.pss {
            p.validate()?;
            let mi = find_gen(&names, &p.gen, "pss")?;
            if machine_avr[mi].is_none() {
                return Err(Error::Case(format!("pss on {} needs an avr", p.gen)));
            }
            if machine_pss[mi].is_some() {
                return Err(Error::Case(format!("more than one pss on {}", p.gen)));
            }
            machine_pss[mi] = Some(stabilizers.len());
            stabilizers.push(Stabilizer { params: p.clone(), machine: mi });
        }

        let mut machine_gov = vec![None; machines.len()];
        let mut governors = Vec::new();
        for g in &case.governors {
            g.validate()?;
            let mi = find_gen(&names, &g.gen, "governor")?;
            if machine_gov[mi].is_some() {
                return Err(Error::Case(format!("more than one governor on {}", g.gen)));
            }
            let s_n = case.generators[mi].s_n;
            machine_gov[mi] = Some(governors.len());
            governors.push(Governor {
                params: g.clone(),
                machine: mi,
                gain: s_n / (case.s_base * g.r),
                p_ref: pm0[mi],
            });
        }

        let layout = StateLayout {
            n_machines: machines.len(),
            n_avr: exciters.len(),
            n_pss: stabilizers.len(),
            n_gov: governors.len(),
            n_tcsc: tcscs.len(),
        };
        let state = DynamicState {
            machines: machine_states,
            avr: avr_states,
            pss: vec![[0.0, 0.0]; stabilizers.len()],
            gov: governors.iter().map(|g| pm0[g.machine]).collect(),
            tcsc: tcscs.iter().map(|t| t.params.x_ref).collect(),
            voltages: v0.clone(),
        };
        let base_pss_enabled = stabilizers.iter().map(|s| s.params.enabled).collect();

        Ok(Self {
            name: case.name.clone(),
            omega_base: 2.0 * std::f64::consts::PI * case.f_base,
            x0: state.flatten(),
            v0,
            network,
            machines,
            exciters,
            stabilizers,
            governors,
            tcscs,
            infinite_buses,
            layout,
            efd_const: efd0,
            pm_const: pm0,
            machine_avr,
            machine_pss,
            machine_gov,
            load_shunts,
            base_in_service,
            base_pss_enabled,
        })
    }

    /// Initial (equilibrium) state vector.
    pub fn initial_state(&self) -> &DVector<f64> {
        &self.x0
    }

    /// Load-flow bus voltages.
    pub fn initial_voltages(&self) -> &DVector<C64> {
        &self.v0
    }

    pub fn n_states(&self) -> usize {
        self.layout.len()
    }

    pub fn base_conditions(&self) -> Conditions {
        Conditions {
            branch_in_service: self.base_in_service.clone(),
            faults: Vec::new(),
            pss_enabled: self.base_pss_enabled.clone(),
        }
    }

    pub fn state_labels(&self) -> Vec<String> {
        let m: Vec<String> = self.machines.iter().map(|m| m.name.clone()).collect();
        let a: Vec<String> = self.exciters.iter().map(|e| e.params.gen.clone()).collect();
        let p: Vec<String> = self.stabilizers.iter().map(|s| s.params.gen.clone()).collect();
        let g: Vec<String> = self.governors.iter().map(|g| g.params.gen.clone()).collect();
        let t: Vec<String> = self
            .tcscs
            .iter()
            .map(|t| format!("{}-{}", t.params.from, t.params.to))
            .collect();
        self.layout.labels(&m, &a, &p, &g, &t)
    }

    pub fn machine_index(&self, name: &str) -> Result<usize> {
        self.machines
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| Error::Case(format!("unknown generator {name}")))
    }

    /// Index of the TCSC installed on the branch between two buses.
    pub fn tcsc_index(&self, from: usize, to: usize) -> Result<usize> {
        self.tcscs
            .iter()
            .position(|t| {
                (t.params.from == from && t.params.to == to) || (t.params.from == to && t.params.to == from)
            })
            .ok_or_else(|| Error::Case(format!("no tcsc on branch {from}-{to}")))
    }

    pub fn resolve_measurement(&self, m: &Measurement) -> Result<Probe> {
        Ok(match m {
            Measurement::SpeedDeviation { gen } => Probe::SpeedDeviation(self.machine_index(gen)?),
            Measurement::BranchPower { from, to, base_mva } => {
                let branch = self.network.find_branch(*from, *to)?;
                let reversed = self.network.branches[branch].from != *from;
                let scale = match *base_mva {
                    None => 1.0,
                    Some(b) if b.is_finite() && b > 0.0 => self.network.s_base / b,
                    Some(b) => return Err(Error::Case(format!("measurement base must be positive, got {b}"))),
                };
                Probe::BranchPower { branch, reversed, scale }
            }
            Measurement::BusVoltage { bus } => Probe::BusVoltage(self.network.bus_index(*bus)?),
        })
    }

    fn machine_state(&self, x: &DVector<f64>, i: usize) -> MachineState {
        let o = self.layout.machine_offset(i);
        MachineState::from_slice(&x.as_slice()[o..o + MACHINE_STATES])
    }

    fn tcsc_scale(&self, x: &DVector<f64>, k: usize) -> f64 {
        let o = self.layout.tcsc_offset(k);
        self.tcscs[k].reactance_scale(&x.as_slice()[o..o + 1])
    }

    /// Reactance multiplier of branch `branch` in state `x` (1 without a TCSC).
    pub fn branch_scale(&self, x: &DVector<f64>, branch: usize) -> f64 {
        self.tcscs
            .iter()
            .position(|t| t.branch == branch)
            .map(|k| self.tcsc_scale(x, k))
            .unwrap_or(1.0)
    }

    pub fn measure(&self, probe: Probe, x: &DVector<f64>, v: &DVector<C64>) -> f64 {
        match probe {
            Probe::SpeedDeviation(i) => x[self.layout.machine_offset(i) + 1],
            Probe::BranchPower { branch, reversed, scale } => {
                let (sf, st) = self.network.branch_flow(branch, v, self.branch_scale(x, branch));
                scale * if reversed { st.re } else { sf.re }
            }
            Probe::BusVoltage(i) => v[i].norm(),
        }
    }

    fn shunts(&self, cond: &Conditions) -> Vec<(usize, C64)> {
        let mut shunts = self.load_shunts.clone();
        shunts.extend(self.machines.iter().map(|m| (m.bus, m.norton_admittance())));
        shunts.extend(cond.faults.iter().copied());
        shunts
    }

    /// Full augmented admittance (branches with current TCSC compensation,
    /// loads, machine Norton shunts, faults) for state `x`.
    pub fn build_admittance(&self, cond: &Conditions, x: &DVector<f64>) -> Result<DMatrix<C64>> {
        let x_scale: Vec<(usize, f64)> = (0..self.tcscs.len())
            .map(|k| (self.tcscs[k].branch, self.tcsc_scale(x, k)))
            .collect();
        self.network
            .build_admittance(&cond.branch_in_service, &x_scale, &self.shunts(cond))
    }

    pub fn solver(&self, cond: &Conditions) -> Result<NetworkSolver> {
        self.network.check_connected(&cond.branch_in_service)?;
        let mut without_tcsc = cond.branch_in_service.clone();
        let tcsc_active: Vec<bool> = self
            .tcscs
            .iter()
            .map(|t| {
                let active = cond.branch_in_service[t.branch];
                without_tcsc[t.branch] = false;
                active
            })
            .collect();
        let n = self.network.n_bus();
        let mut base = DMatrix::<C64>::zeros(n, n);
        for k in (0..self.network.branches.len()).filter(|&k| without_tcsc[k]) {
            self.network.stamp_branch(&mut base, k, 1.0);
        }
        for (i, ys) in self.shunts(cond) {
            base[(i, i)] += ys;
        }
        Ok(NetworkSolver {
            base,
            tcsc_active,
            fixed: self.infinite_buses.iter().map(|b| (b.bus, b.voltage)).collect(),
        })
    }

    /// Norton current injections of all machines.
    pub fn injections(&self, x: &DVector<f64>) -> DVector<C64> {
        let mut inj = DVector::from_element(self.network.n_bus(), C64::new(0.0, 0.0));
        for (i, m) in self.machines.iter().enumerate() {
            inj[m.bus] += m.norton_current(&self.machine_state(x, i));
        }
        inj
    }

    pub fn fixed_voltages(&self) -> Vec<(usize, C64)> {
        self.infinite_buses.iter().map(|b| (b.bus, b.voltage)).collect()
    }

    pub fn bus_ids(&self) -> Vec<usize> {
        self.network.buses.iter().map(|b| b.id).collect()
    }

    /// Solve the algebraic network for state `x`.
    pub fn solve_voltages(&self, x: &DVector<f64>, solver: &NetworkSolver) -> Result<DVector<C64>> {
        let mut y = solver.base.clone();
        for (k, t) in self.tcscs.iter().enumerate() {
            if solver.tcsc_active[k] {
                self.network.stamp_branch(&mut y, t.branch, self.tcsc_scale(x, k));
            }
        }
        solve_network(&y, &self.injections(x), &solver.fixed, &self.bus_ids())
    }

    /// State derivatives. `u` holds the modulation of each TCSC (missing
    /// entries are zero).
    pub fn derivatives(
        &self,
        x: &DVector<f64>,
        u: &[f64],
        cond: &Conditions,
        solver: &NetworkSolver,
    ) -> Result<Evaluation> {
        if x.len() != self.layout.len() {
            return Err(Error::Dimension(format!(
                "state has {} entries, model expects {}",
                x.len(),
                self.layout.len()
            )));
        }
        let v = self.solve_voltages(x, solver)?;
        let dx = self.derivatives_at(x, &v, u, cond)?;
        Ok(Evaluation { dx, voltages: v })
    }

    /// State derivatives for an already solved network `v`.
    pub fn derivatives_at(
        &self,
        x: &DVector<f64>,
        v: &DVector<C64>,
        u: &[f64],
        cond: &Conditions,
    ) -> Result<DVector<f64>> {
        let xs = x.as_slice();
        let mut dx = DVector::zeros(x.len());
        let ly = &self.layout;

        for (i, m) in self.machines.iter().enumerate() {
            let s = self.machine_state(x, i);
            let term = m.terminal(&s, v[m.bus]);
            let efd = match self.machine_avr[i] {
                Some(a) => self.exciters[a].efd(&xs[ly.avr_offset(a)..]),
                None => self.efd_const[i],
            };
            let pm = match self.machine_gov[i] {
                Some(g) => xs[ly.gov_offset(g)],
                None => self.pm_const[i],
            };
            let d = m.derivatives(&s, &term, efd, pm, self.omega_base);
            let o = ly.machine_offset(i);
            dx.as_mut_slice()[o..o + MACHINE_STATES].copy_from_slice(&d);
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteDerivative { device: format!("machine {}", m.name) });
            }
        }
        for (a, exc) in self.exciters.iter().enumerate() {
            let mi = exc.machine;
            let v_pss = match self.machine_pss[mi] {
                Some(p) => {
                    let dw = xs[ly.machine_offset(mi) + 1];
                    self.stabilizers[p].output(&xs[ly.pss_offset(p)..], dw, cond.pss_enabled[p])
                }
                None => 0.0,
            };
            let d = exc.derivatives(&xs[ly.avr_offset(a)..], v[self.machines[mi].bus].norm(), v_pss);
            let o = ly.avr_offset(a);
            dx.as_mut_slice()[o..o + 2].copy_from_slice(&d);
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteDerivative { device: format!("avr on {}", exc.params.gen) });
            }
        }
        for (p, pss) in self.stabilizers.iter().enumerate() {
            let dw = xs[ly.machine_offset(pss.machine) + 1];
            let d = pss.derivatives(&xs[ly.pss_offset(p)..], dw);
            let o = ly.pss_offset(p);
            dx.as_mut_slice()[o..o + 2].copy_from_slice(&d);
            if d.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteDerivative { device: format!("pss on {}", pss.params.gen) });
            }
        }
        for (g, gov) in self.governors.iter().enumerate() {
            let dw = xs[ly.machine_offset(gov.machine) + 1];
            let d = gov.derivatives(&xs[ly.gov_offset(g)..], dw);
            dx[ly.gov_offset(g)] = d[0];
            if !d[0].is_finite() {
                return Err(Error::NonFiniteDerivative { device: format!("governor on {}", gov.params.gen) });
            }
        }
        for (k, t) in self.tcscs.iter().enumerate() {
            let uk = u.get(k).copied().unwrap_or(0.0);
            let d = t.derivatives(&xs[ly.tcsc_offset(k)..], uk);
            dx[ly.tcsc_offset(k)] = d[0];
            if !d[0].is_finite() {
                return Err(Error::NonFiniteDerivative {
                    device: format!("tcsc {}-{}", t.params.from, t.params.to),
                });
            }
        }
        Ok(dx)
    }

    /// Largest absolute derivative at the initial state with zero input.
    pub fn equilibrium_residual(&self) -> Result<f64> {
        let cond = self.base_conditions();
        let solver = self.solver(&cond)?;
        let e = self.derivatives(&self.x0, &[], &cond, &solver)?;
        Ok(e.dx.amax())
    }

    pub fn structured_state(&self, x: &DVector<f64>, v: DVector<C64>) -> Result<DynamicState> {
        DynamicState::unflatten(&self.layout, x, v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smib_equilibrium() {
        let model = PowerSystemModel::from_case(&CaseData::smib()).unwrap();
        let r = model.equilibrium_residual().unwrap();
        assert!(r < 1e-8, "residual {r:e}");
    }

    #[test]
    fn ieee39_equilibrium() {
        let model = PowerSystemModel::from_case(&CaseData::ieee39()).unwrap();
        let r = model.equilibrium_residual().unwrap();
        assert!(r < 1e-8, "residual {r:e}");
    }

    #[test]
    fn speed_deviation_drives_angle() {
        let model = PowerSystemModel::from_case(&CaseData::smib()).unwrap();
        let cond = model.base_conditions();
        let solver = model.solver(&cond).unwrap();
        let mut x = model.initial_state().clone();
        x[1] = 0.01;
        let e = model.derivatives(&x, &[], &cond, &solver).unwrap();
        assert!((e.dx[0] - 0.01 * model.omega_base).abs() < 1e-12);
    }

    #[test]
    fn tcsc_modulation_derivative() {
        let model = PowerSystemModel::from_case(&CaseData::smib()).unwrap();
        let cond = model.base_conditions();
        let solver = model.solver(&cond).unwrap();
        let e = model.derivatives(model.initial_state(), &[0.05], &cond, &solver).unwrap();
        let k = model.layout.tcsc_offset(0);
        let t = model.tcscs[0].params.t;
        assert!((e.dx[k] - 0.05 / t).abs() < 1e-12);
    }

    #[test]
    fn solver_matches_full_admittance() {
        let model = PowerSystemModel::from_case(&CaseData::ieee39()).unwrap();
        let cond = model.base_conditions();
        let solver = model.solver(&cond).unwrap();
        let mut x = model.initial_state().clone();
        x[model.layout.tcsc_offset(0)] = 0.3;
        let v = model.solve_voltages(&x, &solver).unwrap();
        let y = model.build_admittance(&cond, &x).unwrap();
        let resid = &y * &v - model.injections(&x);
        assert!(resid.camax() < 1e-10, "{}", resid.camax());
    }
}
