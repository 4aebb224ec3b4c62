//! Kalman-filter phasor estimator with an optional control-input model.

use nalgebra::{Matrix3, RowVector3, Vector3};

use super::{PhasorEstimate, PodConfig};

/// `(2/w) [-sin(w t) + sin(w (t + dt))]`
pub fn g_func(t: f64, omega: f64, dt: f64) -> f64 {
    2.0 / omega * (-(omega * t).sin() + (omega * (t + dt)).sin())
}

/// `(2/w) [cos(w t) - cos(w (t + dt))]`
pub fn h_func(t: f64, omega: f64, dt: f64) -> f64 {
    2.0 / omega * ((omega * t).cos() - (omega * (t + dt)).cos())
}

/// Filter matrices at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanMatrices {
    pub f: Matrix3<f64>,
    /// Control-input column (zero without a residue).
    pub g: Vector3<f64>,
    pub h: RowVector3<f64>,
    pub qcov: Matrix3<f64>,
    pub r: f64,
}

impl KalmanMatrices {
    pub fn at(cfg: &PodConfig, t: f64) -> Self {
        let w = cfg.omega;
        let g = match cfg.residue {
            Some(res) => {
                let (gv, hv) = (g_func(t, w, cfg.period), h_func(t, w, cfg.period));
                Vector3::new(0.0, res.re * gv + res.im * hv, -res.re * hv + res.im * gv)
            }
            None => Vector3::zeros(),
        };
        let q = cfg.process_noise();
        Self {
            f: Matrix3::identity(),
            g,
            h: observation_row(w, t),
            qcov: Matrix3::identity() * q,
            r: cfg.noise_scale,
        }
    }
}

/// `[1, cos(w t), -sin(w t)]`
pub fn observation_row(omega: f64, t: f64) -> RowVector3<f64> {
    RowVector3::new(1.0, (omega * t).cos(), -(omega * t).sin())
}

fn symmetrize(p: &Matrix3<f64>) -> Matrix3<f64> {
    (p + p.transpose()) * 0.5
}

/// Advance the estimate by one period, given the modulation applied over it.
pub fn kf_predict(est: &PhasorEstimate, u: f64, cfg: &PodConfig) -> PhasorEstimate {
    let m = KalmanMatrices::at(cfg, est.t);
    let x = m.f * est.state() + m.g * u;
    let p = symmetrize(&(m.f * est.p * m.f.transpose() + m.qcov));
    PhasorEstimate::from_state(x, p, est.t + cfg.period)
}

/// Measurement update with `y` taken at `est.t`. Returns the corrected
/// estimate and the innovation.
pub fn kf_correct(est: &PhasorEstimate, y: f64, cfg: &PodConfig) -> (PhasorEstimate, f64) {
    let h = observation_row(cfg.omega, est.t);
    let x = est.state();
    let innovation = y - (h * x)[0];
    let ph = est.p * h.transpose();
    let s = (h * ph)[0] + cfg.noise_scale;
    let k = ph / s;
    let ikh = Matrix3::identity() - k * h;
    // Joseph form: equal to (I - K H) P, but keeps P positive semidefinite
    let p = ikh * est.p * ikh.transpose() + k * k.transpose() * cfg.noise_scale;
    (PhasorEstimate::from_state(x + k * innovation, symmetrize(&p), est.t), innovation)
}
