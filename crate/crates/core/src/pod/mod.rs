//! Phasor power oscillation damper.
//!
//! The measured signal is modelled as `y = mean + D cos(wt) - Q sin(wt)`.
//! An estimator tracks `(mean, D, Q)` and the damping block turns the phasor
//! `D + jQ` into a modulation `u = K Re{e^{j beta} (D + jQ) e^{jwt}}`.

pub mod kalman;
pub mod lpf;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::network::C64;
use crate::grid::ControlHook;

pub use kalman::{g_func, h_func, kf_correct, kf_predict, observation_row, KalmanMatrices};
pub use lpf::{lpf_estimate_update, lpf_pole};

/// Default controller period, s.
pub const DEFAULT_PERIOD: f64 = 0.02;
/// Default ratio of estimator cutoff to mode frequency.
pub const DEFAULT_KC: f64 = 0.5;
/// Scale of the initial covariance.
pub const INITIAL_COVARIANCE_SCALE: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasorEstimate {
    pub mean: f64,
    pub d: f64,
    pub q: f64,
    pub p: Matrix3<f64>,
    /// Time at which the estimate is valid, s.
    pub t: f64,
}

impl PhasorEstimate {
    pub fn new(mean: f64, d: f64, q: f64, p: Matrix3<f64>, t: f64) -> Self {
        Self { mean, d, q, p, t }
    }

    pub fn from_state(x: Vector3<f64>, p: Matrix3<f64>, t: f64) -> Self {
        Self::new(x[0], x[1], x[2], p, t)
    }

    /// Zero state; for the Kalman filter the covariance is
    /// `1e4 * w * dt * k_c * I`.
    pub fn initial(cfg: &PodConfig, t: f64) -> Self {
        let p = match cfg.estimator {
            EstimatorKind::Kalman => {
                Matrix3::identity() * (INITIAL_COVARIANCE_SCALE * cfg.omega * cfg.period * cfg.k_c)
            }
            EstimatorKind::Lpf => Matrix3::zeros(),
        };
        Self::new(0.0, 0.0, 0.0, p, t)
    }

    /// Like [`PhasorEstimate::initial`], but with the mean set to the first
    /// sample, so a measurement with a large operating value does not
    /// start the controller with a spurious oscillation estimate.
    pub fn seeded(cfg: &PodConfig, t: f64, y: f64) -> Self {
        Self {
            mean: y,
            ..Self::initial(cfg, t)
        }
    }

    pub fn state(&self) -> Vector3<f64> {
        Vector3::new(self.mean, self.d, self.q)
    }

    pub fn phasor(&self) -> C64 {
        C64::new(self.d, self.q)
    }

    /// `mean + D cos(wt) - Q sin(wt)`
    pub fn reconstruct(&self, omega: f64, t: f64) -> f64 {
        self.mean + self.oscillation(omega, t)
    }

    /// Oscillatory part `D cos(wt) - Q sin(wt)`.
    pub fn oscillation(&self, omega: f64, t: f64) -> f64 {
        self.d * (omega * t).cos() - self.q * (omega * t).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Lpf,
    #[serde(alias = "kf")]
    Kalman,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PodConfig {
    pub estimator: EstimatorKind,
    /// Targeted mode, rad/s.
    pub omega: f64,
    /// Controller period, s.
    pub period: f64,
    pub k_c: f64,
    pub gain: f64,
    /// Phase compensation, degrees.
    pub beta_deg: f64,
    /// Residue used by the control-input model; `None` disables it.
    pub residue: Option<C64>,
    /// Output limits `(min, max)` in actuator units.
    pub limits: (f64, f64),
    /// Common factor on the process and measurement noise covariances.
    pub noise_scale: f64,
}

impl PodConfig {
    /// Kalman filter without control-input model, zero gain, no limits.
    pub fn new(omega: f64, period: f64) -> Self {
        Self {
            estimator: EstimatorKind::Kalman,
            omega,
            period,
            k_c: DEFAULT_KC,
            gain: 0.0,
            beta_deg: 0.0,
            residue: None,
            limits: (f64::NEG_INFINITY, f64::INFINITY),
            noise_scale: 1.0,
        }
    }

    pub fn frequency(&self) -> f64 {
        self.omega / (2.0 * std::f64::consts::PI)
    }

    /// Diagonal entry of the process noise covariance, `(w dt k_c)^2`.
    pub fn process_noise(&self) -> f64 {
        (self.omega * self.period * self.k_c).powi(2) * self.noise_scale
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Scenario(format!("controller: {m}")));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad("mode frequency must be positive");
        }
        if !(self.period > 0.0) {
            return bad("period must be positive");
        }
        if !(self.k_c > 0.0 && self.k_c <= 1.0) {
            return bad("k_c must lie in (0, 1]");
        }
        if !(self.limits.0 <= self.limits.1) {
            return bad("output limits are inverted");
        }
        if !(self.noise_scale > 0.0) {
            return bad("noise scale must be positive");
        }
        if !(self.gain.is_finite() && self.beta_deg.is_finite()) {
            return bad("gain and phase must be finite");
        }
        if self.residue.is_some_and(|r| !r.is_finite()) {
            return bad("residue must be finite");
        }
        if self.residue.is_some() && self.estimator == EstimatorKind::Lpf {
            return bad("the LPF estimator has no control-input model");
        }
        Ok(())
    }
}

/// `K [D cos(wt + beta) - Q sin(wt + beta)]`, clamped to the limits.
pub fn damping_control(est: &PhasorEstimate, cfg: &PodConfig, t: f64) -> f64 {
    let arg = cfg.omega * t + cfg.beta_deg.to_radians();
    let u = cfg.gain * (est.d * arg.cos() - est.q * arg.sin());
    u.clamp(cfg.limits.0, cfg.limits.1)
}

/// One controller tick as logged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PodRecord {
    pub t: f64,
    pub y: f64,
    pub mean: f64,
    pub d: f64,
    pub q: f64,
    pub innovation: f64,
    pub u: f64,
}

/// A running damping controller.
#[derive(Debug, Clone)]
pub struct Pod {
    cfg: PodConfig,
    est: Option<PhasorEstimate>,
    /// Modulation emitted at the last tick and not yet used for prediction.
    pending: Option<f64>,
    log: Vec<PodRecord>,
}

impl Pod {
    pub fn new(cfg: PodConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            est: None,
            pending: None,
            log: Vec::new(),
        })
    }

    pub fn config(&self) -> &PodConfig {
        &self.cfg
    }

    pub fn estimate(&self) -> Option<&PhasorEstimate> {
        self.est.as_ref()
    }

    pub fn log(&self) -> &[PodRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<PodRecord> {
        self.log
    }

    fn predict(&mut self, u: f64) {
        if let Some(est) = &mut self.est {
            *est = kf_predict(est, u, &self.cfg);
        }
    }

    /// Correct with `y` at `t`, then emit the modulation from the corrected
    /// estimate. The prediction to `t + dt` happens once the applied
    /// modulation is known (see [`Pod::applied`]), or at the next step.
    pub fn step(&mut self, t: f64, y: f64) -> f64 {
        if let Some(u) = self.pending.take() {
            if self.cfg.estimator == EstimatorKind::Kalman {
                self.predict(u);
            }
        }
        let cfg = &self.cfg;
        let (est, innovation) = match cfg.estimator {
            EstimatorKind::Kalman => {
                let mut est = self.est.unwrap_or_else(|| PhasorEstimate::seeded(cfg, t, y));
                // catch up over ticks that were skipped while disabled
                while est.t < t - 0.5 * cfg.period {
                    est = kf_predict(&est, 0.0, cfg);
                }
                est.t = t;
                kf_correct(&est, y, cfg)
            }
            EstimatorKind::Lpf => {
                let est = self.est.unwrap_or_else(|| PhasorEstimate::seeded(cfg, t, y));
                lpf_estimate_update(&est, y, t, cfg)
            }
        };
        let u = damping_control(&est, cfg, t);
        self.est = Some(est);
        self.pending = Some(u);
        self.log.push(PodRecord {
            t,
            y,
            mean: est.mean,
            d: est.d,
            q: est.q,
            innovation,
            u,
        });
        u
    }

    /// Record the modulation the actuator actually applied for the last
    /// step and predict the estimate to the next tick with it.
    pub fn applied(&mut self, u: f64) {
        if self.pending.take().is_some() {
            if let Some(rec) = self.log.last_mut() {
                rec.u = u;
            }
            if self.cfg.estimator == EstimatorKind::Kalman {
                self.predict(u);
            }
        }
    }
}

impl ControlHook for Pod {
    fn period(&self) -> f64 {
        self.cfg.period
    }

    fn tick(&mut self, t: f64, y: f64) -> f64 {
        self.step(t, y)
    }

    fn applied(&mut self, u: f64) {
        Pod::applied(self, u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn est(d: f64, q: f64) -> PhasorEstimate {
        PhasorEstimate::new(0.0, d, q, Matrix3::zeros(), 0.0)
    }

    #[test]
    fn control_law() {
        let mut c = PodConfig::new(2.0 * PI, 0.02);
        assert_eq!(damping_control(&est(1.0, 2.0), &c, 0.3), 0.0);
        c.gain = 7.0;
        assert!((damping_control(&est(1.0, 0.0), &c, 0.0) - 7.0).abs() < 1e-15);
        c.beta_deg = 90.0;
        assert!(damping_control(&est(1.0, 0.0), &c, 0.0).abs() < 1e-14);
        c.beta_deg = 30.0;
        let u1 = damping_control(&est(0.4, -0.3), &c, 0.17);
        c.gain = 14.0;
        assert!((damping_control(&est(0.4, -0.3), &c, 0.17) - 2.0 * u1).abs() < 1e-15);
        c.limits = (-0.1, 0.05);
        c.gain = 1e3;
        let u = damping_control(&est(0.4, -0.3), &c, 0.17);
        assert!(u == -0.1 || u == 0.05);
    }

    #[test]
    fn phasor_form_of_control_law() {
        let mut c = PodConfig::new(3.1, 0.02);
        c.gain = 2.5;
        c.beta_deg = -47.0;
        let e = est(0.7, 1.3);
        let t = 0.81;
        let expected = (C64::from_polar(c.gain, c.beta_deg.to_radians()) * e.phasor() * C64::from_polar(1.0, c.omega * t)).re;
        assert!((damping_control(&e, &c, t) - expected).abs() < 1e-14);
    }

    #[test]
    fn reconstruction_identity() {
        let e = PhasorEstimate::new(0.3, -1.2, 0.8, Matrix3::zeros(), 0.0);
        for t in [0.0, 0.11, 1.7] {
            let h = observation_row(4.0, t);
            assert!(((h * e.state())[0] - e.reconstruct(4.0, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_residue_equals_baseline() {
        let mut base = PodConfig::new(2.0 * PI, 0.02);
        base.gain = 20.0;
        base.beta_deg = 22.0;
        let cim = PodConfig {
            residue: Some(C64::new(0.0, 0.0)),
            ..base.clone()
        };
        let mut a = Pod::new(base).unwrap();
        let mut b = Pod::new(cim).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 0..300 {
            let t = k as f64 * 0.02;
            let y = rng.random_range(-1.0..1.0);
            let ua = a.tick(t, y);
            let ub = b.tick(t, y);
            assert_eq!(ua, ub);
            ControlHook::applied(&mut a, ua);
            ControlHook::applied(&mut b, ub);
        }
    }

    #[test]
    fn startup_converges_within_a_second() {
        let mut c = PodConfig::new(2.0 * PI, 0.02);
        c.k_c = 0.5;
        let mut pod = Pod::new(c.clone()).unwrap();
        for k in 0..=50 {
            let t = k as f64 * c.period;
            let y = 0.2 + 1.5 * (c.omega * t + 0.4).cos();
            pod.step(t, y);
        }
        let e = pod.estimate().unwrap();
        let truth = C64::from_polar(1.5, 0.4);
        assert!((e.phasor() - truth).norm() < 0.05 * 1.5, "{:?}", e.phasor());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(Pod::new(PodConfig::new(0.0, 0.02)).is_err());
        assert!(Pod::new(PodConfig { k_c: 1.5, ..PodConfig::new(1.0, 0.02) }).is_err());
        let lpf_cim = PodConfig {
            estimator: EstimatorKind::Lpf,
            residue: Some(C64::new(1.0, 0.0)),
            ..PodConfig::new(1.0, 0.02)
        };
        assert!(Pod::new(lpf_cim).is_err());
    }
}
