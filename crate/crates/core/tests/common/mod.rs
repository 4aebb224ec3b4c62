//! Oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;

use podlab::grid::{CaseData, C64};
use podlab::PowerSystemModel;

/// Per-branch summation straight from the case data.
pub fn admittance_oracle(case: &CaseData, m: &PowerSystemModel) -> DMatrix<C64> {
    let ids: Vec<usize> = case.buses.iter().map(|b| b.id).collect();
    let idx = |id: usize| ids.iter().position(|&b| b == id).unwrap();
    let n = ids.len();
    let mut y = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    let x0 = m.initial_state();
    for (k, br) in case.branches.iter().enumerate() {
        if !br.in_service {
            continue;
        }
        let (f, t) = (idx(br.from), idx(br.to));
        let z = C64::new(br.r, br.x * m.branch_scale(x0, k));
        let ys = C64::new(0.0, br.b / 2.0);
        let a = br.ratio;
        y[(f, f)] += (C64::new(1.0, 0.0) / z + ys) / (a * a);
        y[(t, t)] += C64::new(1.0, 0.0) / z + ys;
        y[(f, t)] -= C64::new(1.0, 0.0) / z / a;
        y[(t, f)] -= C64::new(1.0, 0.0) / z / a;
    }
    let v0 = m.initial_voltages();
    for load in &case.loads {
        let i = idx(load.bus);
        y[(i, i)] += C64::new(load.p, -load.q) / v0[i].norm_sqr();
    }
    for mach in &m.machines {
        y[(mach.bus, mach.bus)] += mach.norton_admittance();
    }
    y
}

pub fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Local maxima of `y` after `t_from`.
pub fn peaks(t: &[f64], y: &[f64], t_from: f64) -> Vec<(f64, f64)> {
    (1..y.len() - 1)
        .filter(|&k| t[k] >= t_from && y[k] > y[k - 1] && y[k] >= y[k + 1] && y[k] > 0.0)
        .map(|k| (t[k], y[k]))
        .collect()
}

