//! Bus/branch network data and the nodal admittance solve.
//!
//! All quantities are per-unit on the system base. Branches follow the
//! usual pi-model with an off-nominal tap on the `from` side.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    #[serde(default)]
    pub base_kv: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    #[serde(default)]
    pub b: f64,
    #[serde(default = "unity")]
    pub ratio: f64,
    #[serde(default = "yes")]
    pub in_service: bool,
}

fn unity() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

/// Constant-impedance load, specified by its consumption at the load-flow voltage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Load {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
}

/// Two-port admittance stamp of a branch: `[y_ff, y_ft, y_tf, y_tt]`.
pub type BranchStamp = [C64; 4];

#[derive(Debug, Clone)]
pub struct NetworkModel {
    pub s_base: f64,
    pub f_base: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub loads: Vec<Load>,
    index: HashMap<usize, usize>,
}

impl NetworkModel {
    pub fn new(
        s_base: f64,
        f_base: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        loads: Vec<Load>,
    ) -> Result<Self> {
        let mut index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, i).is_some() {
                return Err(Error::Case(format!("duplicate bus id {}", bus.id)));
            }
        }
        for br in &branches {
            for id in [br.from, br.to] {
                if !index.contains_key(&id) {
                    return Err(Error::Case(format!(
                        "branch {}-{} references unknown bus {id}",
                        br.from, br.to
                    )));
                }
            }
            if br.from == br.to {
                return Err(Error::Case(format!("branch {}-{} is a self loop", br.from, br.to)));
            }
            let z = C64::new(br.r, br.x);
            if !(z.norm() > 0.0 && z.norm().is_finite()) {
                return Err(Error::Case(format!(
                    "branch {}-{} has a zero or non-finite impedance",
                    br.from, br.to
                )));
            }
            if !(br.ratio > 0.0 && br.ratio.is_finite()) {
                return Err(Error::Case(format!("branch {}-{} has an invalid tap ratio", br.from, br.to)));
            }
        }
        for load in &loads {
            if !index.contains_key(&load.bus) {
                return Err(Error::Case(format!("load references unknown bus {}", load.bus)));
            }
        }
        Ok(Self {
            s_base,
            f_base,
            buses,
            branches,
            loads,
            index,
        })
    }

    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    /// Internal index of a bus id.
    pub fn bus_index(&self, id: usize) -> Result<usize> {
        self.index
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Case(format!("unknown bus {id}")))
    }

    pub fn bus_id(&self, idx: usize) -> usize {
        self.buses[idx].id
    }

    /// Index of the first branch connecting the two buses (either orientation).
    pub fn find_branch(&self, a: usize, b: usize) -> Result<usize> {
        self.branches
            .iter()
            .position(|br| (br.from == a && br.to == b) || (br.from == b && br.to == a))
            .ok_or_else(|| Error::Case(format!("no branch between buses {a} and {b}")))
    }

    /// Stamp of branch `k` with its series reactance multiplied by `x_scale`.
    pub fn branch_stamp(&self, k: usize, x_scale: f64) -> BranchStamp {
        let br = &self.branches[k];
        let y = C64::new(1.0, 0.0) / C64::new(br.r, br.x * x_scale);
        let ysh = C64::new(0.0, br.b / 2.0);
        let t = br.ratio;
        [(y + ysh) / (t * t), -y / t, -y / t, y + ysh]
    }

    /// Endpoint indices of branch `k`.
    pub fn branch_ends(&self, k: usize) -> (usize, usize) {
        let br = &self.branches[k];
        (self.index[&br.from], self.index[&br.to])
    }

    pub fn stamp_branch(&self, y: &mut DMatrix<C64>, k: usize, x_scale: f64) {
        let (f, t) = self.branch_ends(k);
        let [yff, yft, ytf, ytt] = self.branch_stamp(k, x_scale);
        y[(f, f)] += yff;
        y[(f, t)] += yft;
        y[(t, f)] += ytf;
        y[(t, t)] += ytt;
    }

    /// Shunt admittance representing each load at the given bus voltages.
    pub fn load_admittances(&self, voltages: &DVector<C64>) -> Vec<(usize, C64)> {
        self.loads
            .iter()
            .map(|l| {
                let i = self.index[&l.bus];
                let vm2 = voltages[i].norm_sqr();
                (i, C64::new(l.p, -l.q) / vm2)
            })
            .collect()
    }

    /// Buses not reachable from bus index 0 through in-service branches.
    pub fn check_connected(&self, in_service: &[bool]) -> Result<()> {
        let n = self.n_bus();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for (k, _) in self.branches.iter().enumerate().filter(|(k, _)| in_service[*k]) {
            let (a, b) = self.branch_ends(k);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let root = find(&mut parent, 0);
        let cut: Vec<usize> = (0..n)
            .filter(|&i| find(&mut parent, i) != root)
            .map(|i| self.buses[i].id)
            .collect();
        if cut.is_empty() {
            Ok(())
        } else {
            Err(Error::Islanding { buses: cut })
        }
    }

    /// Nodal admittance matrix.
    ///
    /// `x_scale` lists branches whose series reactance is scaled (series
    /// compensation); `shunts` are added to the diagonal (loads, machine
    /// Norton admittances, fault admittances).
    pub fn build_admittance(
        &self,
        in_service: &[bool],
        x_scale: &[(usize, f64)],
        shunts: &[(usize, C64)],
    ) -> Result<DMatrix<C64>> {
        if in_service.len() != self.branches.len() {
            return Err(Error::Dimension(format!(
                "{} branch flags for {} branches",
                in_service.len(),
                self.branches.len()
            )));
        }
        self.check_connected(in_service)?;
        let n = self.n_bus();
        let mut y = DMatrix::<C64>::zeros(n, n);
        for k in (0..self.branches.len()).filter(|&k| in_service[k]) {
            let scale = x_scale
                .iter()
                .find(|(b, _)| *b == k)
                .map(|(_, s)| *s)
                .unwrap_or(1.0);
            self.stamp_branch(&mut y, k, scale);
        }
        for &(i, ys) in shunts {
            y[(i, i)] += ys;
        }
        Ok(y)
    }

    /// Complex power entering branch `k` at its `from` and `to` ends.
    pub fn branch_flow(&self, k: usize, v: &DVector<C64>, x_scale: f64) -> (C64, C64) {
        let (f, t) = self.branch_ends(k);
        let [yff, yft, ytf, ytt] = self.branch_stamp(k, x_scale);
        let i_f = yff * v[f] + yft * v[t];
        let i_t = ytf * v[f] + ytt * v[t];
        (v[f] * i_f.conj(), v[t] * i_t.conj())
    }
}

/// Solve `Y V = I` for the bus voltages.
///
/// Buses listed in `fixed` hold the given voltage (infinite buses); their
/// rows are replaced by identity rows. A vanishing pivot is reported
/// against the bus id it belongs to.
pub fn solve_network(
    y: &DMatrix<C64>,
    injections: &DVector<C64>,
    fixed: &[(usize, C64)],
    bus_ids: &[usize],
) -> Result<DVector<C64>> {
    let n = y.nrows();
    if y.ncols() != n || injections.len() != n {
        return Err(Error::Dimension(format!(
            "admittance {}x{} with {} injections",
            y.nrows(),
            y.ncols(),
            injections.len()
        )));
    }
    let mut m = y.clone();
    let mut rhs = injections.clone();
    for &(i, v) in fixed {
        m.row_mut(i).fill(C64::new(0.0, 0.0));
        m[(i, i)] = C64::new(1.0, 0.0);
        rhs[i] = v;
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let lu = m.lu();
    let u = lu.u();
    for k in 0..n {
        if u[(k, k)].norm() <= 1e-13 * scale {
            return Err(Error::SingularNetwork { bus: bus_ids[k] });
        }
    }
    lu.solve(&rhs)
        .ok_or(Error::SingularNetwork { bus: bus_ids[n - 1] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_bus() -> NetworkModel {
        NetworkModel::new(
            100.0,
            50.0,
            vec![Bus { id: 1, base_kv: 1.0 }, Bus { id: 2, base_kv: 1.0 }],
            vec![Branch { from: 1, to: 2, r: 0.0, x: 0.5, b: 0.0, ratio: 1.0, in_service: true }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_line_off_diagonal() {
        let net = two_bus();
        let y = net.build_admittance(&[true], &[], &[]).unwrap();
        assert!((y[(0, 1)] - C64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((y[(1, 0)] - C64::new(0.0, 2.0)).norm() < 1e-15);
        assert!((y[(0, 0)] - C64::new(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn trip_equals_removed_branch() {
        let buses: Vec<Bus> = (1..=3).map(|id| Bus { id, base_kv: 1.0 }).collect();
        let br = |f, t, x| Branch { from: f, to: t, r: 0.01, x, b: 0.02, ratio: 1.0, in_service: true };
        let full = NetworkModel::new(
            100.0,
            50.0,
            buses.clone(),
            vec![br(1, 2, 0.1), br(2, 3, 0.2), br(1, 3, 0.3)],
            vec![],
        )
        .unwrap();
        let reduced =
            NetworkModel::new(100.0, 50.0, buses, vec![br(1, 2, 0.1), br(2, 3, 0.2)], vec![]).unwrap();
        let a = full.build_admittance(&[true, true, false], &[], &[]).unwrap();
        let b = reduced.build_admittance(&[true, true], &[], &[]).unwrap();
        assert!((a - b).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn islanding_is_reported() {
        let net = two_bus();
        match net.build_admittance(&[false], &[], &[]) {
            Err(Error::Islanding { buses }) => assert_eq!(buses, vec![2]),
            other => panic!("expected islanding, got {other:?}"),
        }
    }

    #[test]
    fn infinite_bus_no_load_profile() {
        let net = two_bus();
        let y = net.build_admittance(&[true], &[], &[]).unwrap();
        let v_inf = C64::from_polar(1.0, 0.0);
        let v = solve_network(&y, &DVector::zeros(2), &[(1, v_inf)], &[1, 2]).unwrap();
        assert!((v[0] - v_inf).norm() < 1e-12);
        assert!((v[1] - v_inf).norm() < 1e-12);
    }

    #[test]
    fn zero_pivot_names_bus() {
        let y = DMatrix::<C64>::zeros(2, 2);
        match solve_network(&y, &DVector::zeros(2), &[(0, C64::new(1.0, 0.0))], &[7, 9]) {
            Err(Error::SingularNetwork { bus }) => assert_eq!(bus, 9),
            other => panic!("expected singular network, got {other:?}"),
        }
    }

    #[test]
    fn rejects_zero_impedance() {
        let r = NetworkModel::new(
            100.0,
            50.0,
            vec![Bus { id: 1, base_kv: 1.0 }, Bus { id: 2, base_kv: 1.0 }],
            vec![Branch { from: 1, to: 2, r: 0.0, x: 0.0, b: 0.0, ratio: 1.0, in_service: true }],
            vec![],
        );
        assert!(matches!(r, Err(Error::Case(_))));
    }
}
