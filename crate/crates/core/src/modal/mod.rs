//! Small-signal analysis: linearization, modes, residues and the phase
//! compensation derived from them.

pub mod eigen;
pub mod linearize;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::model::{Conditions, PowerSystemModel, Probe};
use crate::grid::network::C64;

pub use eigen::{eigendecompose, reconstruct, ModeInfo};
pub use linearize::{linearize, linearize_grid, GridPlant, LinearModel, Plant, DEFAULT_PERTURBATION};

/// Transfer-function residue `r = (c phi)(psi b)` of a mode.
pub fn residue(lin: &LinearModel, mode: &ModeInfo) -> Result<C64> {
    let n = lin.dim();
    if mode.right.len() != n || mode.left.len() != n {
        return Err(Error::Dimension(format!(
            "mode vectors have length {}/{}, model has {n} states",
            mode.right.len(),
            mode.left.len()
        )));
    }
    let c_phi: C64 = lin.c.iter().zip(mode.right.iter()).map(|(c, p)| p * *c).sum();
    let psi_b: C64 = lin.b.iter().zip(mode.left.iter()).map(|(b, p)| p * *b).sum();
    Ok(c_phi * psi_b)
}

/// Ideal phase compensation `beta = 180 deg - arg(r)`, in `(-180, 180]` degrees.
pub fn phase_compensation(r: C64) -> Result<f64> {
    if r.norm() == 0.0 || !r.is_finite() {
        return Err(Error::ZeroResidue);
    }
    Ok(wrap_degrees(180.0 - r.arg().to_degrees()))
}

/// Wrap an angle to `(-180, 180]` degrees.
pub fn wrap_degrees(deg: f64) -> f64 {
    let mut b = deg % 360.0;
    if b <= -180.0 {
        b += 360.0;
    } else if b > 180.0 {
        b -= 360.0;
    }
    b
}

/// Default electromechanical band, Hz.
pub const DEFAULT_BAND: (f64, f64) = (0.1, 3.0);

/// Oscillatory modes (positive frequency) inside `band`, least damped
/// first; equal damping is ordered by frequency.
pub fn screen_modes(modes: &[ModeInfo], band: (f64, f64), top_k: usize) -> Vec<ModeInfo> {
    let mut sel: Vec<ModeInfo> = modes
        .iter()
        .filter(|m| m.eigenvalue.im > 0.0 && (band.0..=band.1).contains(&m.frequency()))
        .cloned()
        .collect();
    sel.sort_by(|a, b| {
        a.damping_ratio()
            .total_cmp(&b.damping_ratio())
            .then(a.frequency().total_cmp(&b.frequency()))
    });
    sel.truncate(top_k);
    sel
}

/// One row of the mode table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ModeRow {
    pub re: f64,
    pub im: f64,
    pub freq_hz: f64,
    pub damping: f64,
    pub residue_mag: f64,
    pub residue_deg: f64,
    pub beta_deg: f64,
}

impl ModeRow {
    pub fn new(mode: &ModeInfo, r: C64) -> Self {
        Self {
            re: mode.eigenvalue.re,
            im: mode.eigenvalue.im,
            freq_hz: mode.frequency(),
            damping: mode.damping_ratio(),
            residue_mag: r.norm(),
            residue_deg: r.arg().to_degrees(),
            beta_deg: phase_compensation(r).unwrap_or(f64::NAN),
        }
    }
}

/// Mode table as CSV.
pub fn mode_table_csv(rows: &[ModeRow]) -> String {
    let mut s = String::from("re,im,freq_hz,damping,residue_mag,residue_deg,beta_deg\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.re, r.im, r.freq_hz, r.damping, r.residue_mag, r.residue_deg, r.beta_deg
        );
    }
    s
}

/// Modes of a grid model seen from one actuator/measurement pair.
#[derive(Debug, Clone)]
pub struct ModalReport {
    pub linear: LinearModel,
    pub modes: Vec<ModeInfo>,
    /// Screened modes with their residues, least damped first.
    pub screened: Vec<(ModeInfo, C64)>,
}

impl ModalReport {
    pub fn rows(&self) -> Vec<ModeRow> {
        self.screened.iter().map(|(m, r)| ModeRow::new(m, *r)).collect()
    }

    /// The least damped screened mode.
    pub fn dominant(&self) -> Option<(&ModeInfo, C64)> {
        self.screened.first().map(|(m, r)| (m, *r))
    }
}

/// Linearize `model` at its equilibrium under `cond` and screen its modes.
pub fn analyze(
    model: &PowerSystemModel,
    cond: Conditions,
    probe: Probe,
    actuator: usize,
    band: (f64, f64),
    top_k: usize,
) -> Result<ModalReport> {
    let linear = linearize_grid(model, cond, probe, actuator, DEFAULT_PERTURBATION)?;
    let modes = eigendecompose(&linear.a)?;
    let screened = screen_modes(&modes, band, top_k)
        .into_iter()
        .map(|m| residue(&linear, &m).map(|r| (m, r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModalReport {
        linear,
        modes,
        screened,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn oscillator() -> LinearModel {
        let a = DMatrix::from_row_slice(2, 2, &[-0.2, 6.0, -6.0, -0.2]);
        LinearModel::new(
            a,
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![1.0, 0.0]),
            vec!["p".into(), "q".into()],
        )
        .unwrap()
    }

    #[test]
    fn beta_from_paper_residue() {
        let r = C64::from_polar(0.036, 158f64.to_radians());
        assert!((phase_compensation(r).unwrap() - 22.0).abs() < 1e-9);
    }

    #[test]
    fn beta_for_real_residues() {
        assert!((phase_compensation(C64::new(0.5, 0.0)).unwrap() - 180.0).abs() < 1e-12);
        assert!(phase_compensation(C64::new(-0.5, 0.0)).unwrap().abs() < 1e-12);
        assert!(matches!(phase_compensation(C64::new(0.0, 0.0)), Err(Error::ZeroResidue)));
    }

    #[test]
    fn orthogonal_output_has_zero_residue() {
        let mut lin = oscillator();
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        lin.a = a;
        lin.c = DVector::from_vec(vec![0.0, 1.0]);
        lin.b = DVector::from_vec(vec![1.0, 0.0]);
        let modes = eigendecompose(&lin.a).unwrap();
        for m in &modes {
            assert!(residue(&lin, m).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn conjugate_residues() {
        let lin = oscillator();
        let modes = eigendecompose(&lin.a).unwrap();
        let r0 = residue(&lin, &modes[0]).unwrap();
        let r1 = residue(&lin, &modes[1]).unwrap();
        assert!((r0 - r1.conj()).norm() < 1e-14);
    }

    #[test]
    fn screening_band_and_order() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        assert!(screen_modes(&eigendecompose(&a).unwrap(), DEFAULT_BAND, 5).is_empty());

        // two oscillators with equal damping ratio: lower frequency first
        let mut a = DMatrix::zeros(4, 4);
        let blk = |w: f64, z: f64| [-z * w, w * (1.0 - z * z).sqrt()];
        let [s1, w1] = blk(6.0, 0.05);
        let [s2, w2] = blk(3.0, 0.05);
        a[(0, 0)] = s1;
        a[(0, 1)] = w1;
        a[(1, 0)] = -w1;
        a[(1, 1)] = s1;
        a[(2, 2)] = s2;
        a[(2, 3)] = w2;
        a[(3, 2)] = -w2;
        a[(3, 3)] = s2;
        let sel = screen_modes(&eigendecompose(&a).unwrap(), DEFAULT_BAND, 5);
        assert_eq!(sel.len(), 2);
        assert!(sel[0].frequency() < sel[1].frequency());
    }

    #[test]
    fn wraps_angles() {
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-180.0), 180.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
    }

    struct ClassicalSmib {
        h: f64,
        omega_base: f64,
        emf: f64,
        v_inf: f64,
        x: f64,
        pm: f64,
    }

    impl Plant for ClassicalSmib {
        fn dim(&self) -> usize {
            2
        }
        fn derivatives(&self, x: &DVector<f64>, u: f64) -> Result<DVector<f64>> {
            let pe = self.emf * self.v_inf / (self.x * (1.0 - u)) * x[0].sin();
            Ok(DVector::from_vec(vec![self.omega_base * x[1], (self.pm - pe) / (2.0 * self.h)]))
        }
        fn output(&self, x: &DVector<f64>) -> Result<f64> {
            Ok(x[1])
        }
    }

    #[test]
    fn classical_smib_frequency() {
        let mut p = ClassicalSmib {
            h: 3.5,
            omega_base: 2.0 * std::f64::consts::PI * 60.0,
            emf: 1.1,
            v_inf: 1.0,
            x: 0.6,
            pm: 0.9,
        };
        let delta0 = (p.pm * p.x / (p.emf * p.v_inf)).asin();
        let x0 = DVector::from_vec(vec![delta0, 0.0]);
        let lin = linearize(&p, &x0, DEFAULT_PERTURBATION).unwrap();
        let ks = p.emf * p.v_inf / p.x * delta0.cos();
        let f = (p.omega_base * ks / (2.0 * p.h)).sqrt() / (2.0 * std::f64::consts::PI);
        let modes = eigendecompose(&lin.a).unwrap();
        assert!((modes[0].frequency().abs() - f).abs() < 1e-6 * f);

        // Richardson: halving the perturbation barely moves A
        let half = linearize(&p, &x0, DEFAULT_PERTURBATION / 2.0).unwrap();
        for (a, b) in lin.a.iter().zip(half.a.iter()) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1e-3));
        }
        p.pm = 0.0;
        assert!(linearize(&p, &x0, DEFAULT_PERTURBATION).is_err());
    }

    #[test]
    fn residue_matches_partial_fraction() {
        let a = DMatrix::from_row_slice(2, 2, &[-0.3, 4.0, -5.0, -0.1]);
        let b = DVector::from_vec(vec![0.7, -1.2]);
        let c = DVector::from_vec(vec![0.4, 1.5]);
        let lin = LinearModel::new(a.clone(), b.clone(), c.clone(), vec!["a".into(), "b".into()]).unwrap();
        let modes = eigendecompose(&a).unwrap();
        let ac = a.map(|v| C64::new(v, 0.0));
        let bc = b.map(|v| C64::new(v, 0.0));
        let cc = c.map(|v| C64::new(v, 0.0));
        for (i, m) in modes.iter().enumerate() {
            let other = modes[1 - i].eigenvalue;
            // c adj(sI - A) b / (s - other), evaluated at s = lambda
            let s = m.eigenvalue;
            let mut adj = DMatrix::<C64>::zeros(2, 2);
            adj[(0, 0)] = s - ac[(1, 1)];
            adj[(1, 1)] = s - ac[(0, 0)];
            adj[(0, 1)] = ac[(0, 1)];
            adj[(1, 0)] = ac[(1, 0)];
            let num = (cc.transpose() * adj * &bc)[(0, 0)];
            let expected = num / (s - other);
            assert!((residue(&lin, m).unwrap() - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn closed_loop_shift_follows_residue() {
        // lightly damped pair plus two real poles
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[0.05, 6.0, 0.3, 0.0, -6.0, 0.05, 0.0, 0.5, 1.0, 0.0, -2.0, 0.0, 0.0, -0.4, 0.0, -7.0],
        );
        let b = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.8]);
        let c = DVector::from_vec(vec![0.2, 1.0, 0.0, 0.0]);
        let lin = LinearModel::new(a.clone(), b.clone(), c.clone(), (0..4).map(|i| format!("x{i}")).collect()).unwrap();
        let modes = eigendecompose(&a).unwrap();
        let target = screen_modes(&modes, (0.0, 10.0), 1)[0].clone();
        let r = residue(&lin, &target).unwrap();
        let beta = phase_compensation(r).unwrap().to_radians();
        let w = target.eigenvalue.im;
        assert!(c.dot(&b).abs() < 1e-15);
        // u = eps (cos(beta) y + sin(beta)/w dy/dt) realizes the phase shift at the mode
        let eps = 1e-3;
        let row = c.transpose() * beta.cos() + (c.transpose() * &a) * (beta.sin() / w);
        let a_cl = &a + &b * row * eps;
        let shifted = eigendecompose(&a_cl)
            .unwrap()
            .into_iter()
            .min_by(|p, q| {
                (p.eigenvalue - target.eigenvalue)
                    .norm()
                    .total_cmp(&(q.eigenvalue - target.eigenvalue).norm())
            })
            .unwrap();
        let gain = C64::new(beta.cos(), 0.0) + target.eigenvalue * (beta.sin() / w);
        let predicted = r * gain * eps;
        let actual = shifted.eigenvalue - target.eigenvalue;
        assert!(actual.re < 0.0);
        assert!((actual.re - predicted.re).abs() < 0.2 * predicted.re.abs());
    }
}
