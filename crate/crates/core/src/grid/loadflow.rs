//! Newton-Raphson load flow in polar coordinates, used only to find the
//! initial operating point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::network::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone)]
pub struct LoadFlowProblem {
    pub y: DMatrix<C64>,
    pub kind: Vec<BusKind>,
    /// Net injected complex power (generation minus load). The reactive
    /// part is only used at PQ buses.
    pub s_spec: Vec<C64>,
    /// Starting voltages; magnitudes at slack and PV buses are held.
    pub v0: DVector<C64>,
}

#[derive(Debug, Clone)]
pub struct LoadFlowSolution {
    pub voltages: DVector<C64>,
    pub iterations: usize,
    pub mismatch: f64,
}

fn injections(y: &DMatrix<C64>, v: &DVector<C64>) -> DVector<C64> {
    let i = y * v;
    v.zip_map(&i, |vk, ik| vk * ik.conj())
}

pub fn solve(problem: &LoadFlowProblem, tol: f64, max_iter: usize) -> Result<LoadFlowSolution> {
    let n = problem.v0.len();
    let pvpq: Vec<usize> = (0..n).filter(|&i| problem.kind[i] != BusKind::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| problem.kind[i] == BusKind::Pq).collect();
    let (npv, npq) = (pvpq.len(), pq.len());
    let mut vm: Vec<f64> = problem.v0.iter().map(|v| v.norm()).collect();
    let mut va: Vec<f64> = problem.v0.iter().map(|v| v.arg()).collect();
    let build = |vm: &[f64], va: &[f64]| {
        DVector::from_iterator(n, (0..n).map(|i| C64::from_polar(vm[i], va[i])))
    };

    let mut mismatch = f64::INFINITY;
    for it in 0..=max_iter {
        let v = build(&vm, &va);
        let s = injections(&problem.y, &v);
        let mut f = DVector::<f64>::zeros(npv + npq);
        for (r, &i) in pvpq.iter().enumerate() {
            f[r] = s[i].re - problem.s_spec[i].re;
        }
        for (r, &i) in pq.iter().enumerate() {
            f[npv + r] = s[i].im - problem.s_spec[i].im;
        }
        mismatch = f.amax();
        if mismatch < tol {
            return Ok(LoadFlowSolution {
                voltages: v,
                iterations: it,
                mismatch,
            });
        }
        if it == max_iter {
            break;
        }

        // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
        // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
        let ibus = &problem.y * &v;
        let jac_entry = |i: usize, k: usize| -> (C64, C64) {
            let vn_k = v[k] / vm[k];
            let mut d_va = -C64::i() * v[i] * (problem.y[(i, k)] * v[k]).conj();
            let mut d_vm = v[i] * (problem.y[(i, k)] * vn_k).conj();
            if i == k {
                d_va += C64::i() * v[i] * ibus[i].conj();
                d_vm += ibus[i].conj() * vn_k;
            }
            (d_va, d_vm)
        };
        let dim = npv + npq;
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for (r, &i) in pvpq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(r, c)] = jac_entry(i, k).0.re;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(r, npv + c)] = jac_entry(i, k).1.re;
            }
        }
        for (r, &i) in pq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(npv + r, c)] = jac_entry(i, k).0.im;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(npv + r, npv + c)] = jac_entry(i, k).1.im;
            }
        }
        let dx = jac.lu().solve(&(-f)).ok_or(Error::LoadFlow {
            iterations: it,
            mismatch,
        })?;
        for (r, &i) in pvpq.iter().enumerate() {
            va[i] += dx[r];
        }
        for (r, &i) in pq.iter().enumerate() {
            vm[i] += dx[npv + r];
        }
    }
    Err(Error::LoadFlow {
        iterations: max_iter,
        mismatch,
    })
}

/// Net complex power injected at each bus for the given voltages.
pub fn bus_injections(y: &DMatrix<C64>, v: &DVector<C64>) -> DVector<C64> {
    injections(y, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_bus_transfer() {
        // P = V1 V2 / X sin(theta) across a lossless line.
        let x = 0.5;
        let yl = C64::new(0.0, -1.0 / x);
        let y = DMatrix::from_row_slice(2, 2, &[yl, -yl, -yl, yl]);
        let problem = LoadFlowProblem {
            y,
            kind: vec![BusKind::Pv, BusKind::Slack],
            s_spec: vec![C64::new(0.9, 0.0), C64::new(0.0, 0.0)],
            v0: DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.995, 0.0)]),
        };
        let sol = solve(&problem, 1e-12, 20).unwrap();
        let theta = sol.voltages[0].arg() - sol.voltages[1].arg();
        let p = 1.0 * 0.995 / x * theta.sin();
        assert!((p - 0.9).abs() < 1e-10);
        assert!((sol.voltages[0].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pq_bus_voltage_drop() {
        let yl = C64::new(1.0, -10.0);
        let y = DMatrix::from_row_slice(2, 2, &[yl, -yl, -yl, yl]);
        let problem = LoadFlowProblem {
            y: y.clone(),
            kind: vec![BusKind::Slack, BusKind::Pq],
            s_spec: vec![C64::new(0.0, 0.0), C64::new(-0.5, -0.2)],
            v0: DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]),
        };
        let sol = solve(&problem, 1e-12, 20).unwrap();
        let s = bus_injections(&y, &sol.voltages);
        assert!((s[1] - C64::new(-0.5, -0.2)).norm() < 1e-10);
        assert!(sol.voltages[1].norm() < 1.0);
    }
}
