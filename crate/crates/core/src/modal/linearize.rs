//! Finite-difference linearization of a single-input single-output plant.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::model::{Conditions, NetworkSolver, PowerSystemModel, Probe};

/// Smallest perturbation ever applied to a state.
pub const PERTURBATION_FLOOR: f64 = 1e-8;
/// Default relative perturbation.
pub const DEFAULT_PERTURBATION: f64 = 1e-6;
/// Largest derivative accepted at a linearization point.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-6;

/// A nonlinear plant `dx/dt = f(x, u)`, `y = h(x)`.
pub trait Plant {
    fn dim(&self) -> usize;
    fn derivatives(&self, x: &DVector<f64>, u: f64) -> Result<DVector<f64>>;
    fn output(&self, x: &DVector<f64>) -> Result<f64>;
    fn labels(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("x{i}")).collect()
    }
}

/// `dx/dt = A x + b u`, `y = c x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub labels: Vec<String>,
}

impl LinearModel {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>, labels: Vec<String>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.len() != n || c.len() != n || labels.len() != n {
            return Err(Error::Dimension(format!(
                "A {}x{}, b {}, c {}, {} labels",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len(),
                labels.len()
            )));
        }
        Ok(Self { a, b, c, labels })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

impl Plant for LinearModel {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn derivatives(&self, x: &DVector<f64>, u: f64) -> Result<DVector<f64>> {
        Ok(&self.a * x + &self.b * u)
    }

    fn output(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.c.dot(x))
    }

    fn labels(&self) -> Vec<String> {
        self.labels.clone()
    }
}

/// The simulator viewed as a plant: one TCSC modulation in, one measurement out.
pub struct GridPlant<'a> {
    model: &'a PowerSystemModel,
    cond: Conditions,
    solver: NetworkSolver,
    probe: Probe,
    actuator: usize,
}

impl<'a> GridPlant<'a> {
    pub fn new(model: &'a PowerSystemModel, cond: Conditions, probe: Probe, actuator: usize) -> Result<Self> {
        if actuator >= model.tcscs.len() {
            return Err(Error::Dimension(format!("actuator index {actuator} out of range")));
        }
        let solver = model.solver(&cond)?;
        Ok(Self {
            model,
            cond,
            solver,
            probe,
            actuator,
        })
    }
}

impl Plant for GridPlant<'_> {
    fn dim(&self) -> usize {
        self.model.n_states()
    }

    fn derivatives(&self, x: &DVector<f64>, u: f64) -> Result<DVector<f64>> {
        let mut uv = vec![0.0; self.model.tcscs.len()];
        uv[self.actuator] = u;
        Ok(self.model.derivatives(x, &uv, &self.cond, &self.solver)?.dx)
    }

    fn output(&self, x: &DVector<f64>) -> Result<f64> {
        let v = self.model.solve_voltages(x, &self.solver)?;
        Ok(self.model.measure(self.probe, x, &v))
    }

    fn labels(&self) -> Vec<String> {
        self.model.state_labels()
    }
}

/// Central-difference linearization about `x0` (with `u = 0`).
///
/// Each state is perturbed by `perturbation * max(|x0_i|, 1)`, never less
/// than [`PERTURBATION_FLOOR`]; the input by `perturbation`.
pub fn linearize(plant: &dyn Plant, x0: &DVector<f64>, perturbation: f64) -> Result<LinearModel> {
    let n = plant.dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!("operating point has {} states, plant {n}", x0.len())));
    }
    let f0 = plant.derivatives(x0, 0.0)?;
    let norm = f0.amax();
    if norm > EQUILIBRIUM_TOLERANCE {
        return Err(Error::NotEquilibrium { norm });
    }
    let mut a = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    let mut xp = x0.clone();
    for j in 0..n {
        let h = (perturbation * x0[j].abs().max(1.0)).max(PERTURBATION_FLOOR);
        xp[j] = x0[j] + h;
        let fp = plant.derivatives(&xp, 0.0)?;
        let yp = plant.output(&xp)?;
        xp[j] = x0[j] - h;
        let fm = plant.derivatives(&xp, 0.0)?;
        let ym = plant.output(&xp)?;
        xp[j] = x0[j];
        a.set_column(j, &((fp - fm) / (2.0 * h)));
        c[j] = (yp - ym) / (2.0 * h);
    }
    let hu = perturbation.max(PERTURBATION_FLOOR);
    let b = (plant.derivatives(x0, hu)? - plant.derivatives(x0, -hu)?) / (2.0 * hu);
    LinearModel::new(a, b, c, plant.labels())
}

/// Linearize a grid model at its initial equilibrium.
pub fn linearize_grid(
    model: &PowerSystemModel,
    cond: Conditions,
    probe: Probe,
    actuator: usize,
    perturbation: f64,
) -> Result<LinearModel> {
    let plant = GridPlant::new(model, cond, probe, actuator)?;
    linearize(&plant, model.initial_state(), perturbation)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_plant_is_a_fixed_point() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -3.0, -0.5, 1.0, 0.2, 0.0, -4.0]);
        let b = DVector::from_vec(vec![1.0, 0.0, -2.0]);
        let c = DVector::from_vec(vec![0.0, 1.0, 0.5]);
        let lin = LinearModel::new(a.clone(), b.clone(), c.clone(), vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let got = linearize(&lin, &DVector::zeros(3), DEFAULT_PERTURBATION).unwrap();
        assert!((got.a - a).amax() < 1e-6);
        assert!((got.b - b).amax() < 1e-6);
        assert!((got.c - c).amax() < 1e-6);
    }

    #[test]
    fn rejects_non_equilibrium() {
        let lin = LinearModel::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            DVector::zeros(2),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let x0 = DVector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(
            linearize(&lin, &x0, DEFAULT_PERTURBATION),
            Err(Error::NotEquilibrium { .. })
        ));
    }
}
