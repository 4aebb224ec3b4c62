//! Low-pass-filter phasor estimator.
//!
//! The mean and the demodulated components are first-order low-pass filters
//! (exact pole at the controller period) driven by the estimation error
//! `e = y - (mean + D cos wt - Q sin wt)`. Filtering the error instead of
//! the raw demodulated products removes the double-frequency image that
//! the plain demodulator leaves on D and Q, while keeping the same cutoff.

use nalgebra::Matrix3;

use super::{PhasorEstimate, PodConfig};

/// Pole of the discretized first-order filter with cutoff `k_c * f`.
pub fn lpf_pole(cfg: &PodConfig) -> f64 {
    (-cfg.k_c * cfg.omega * cfg.period).exp()
}

/// Update the LPF estimate with `y` taken at time `t`. Returns the new
/// estimate (zero covariance) and the estimation error before the update.
pub fn lpf_estimate_update(est: &PhasorEstimate, y: f64, t: f64, cfg: &PodConfig) -> (PhasorEstimate, f64) {
    let (c, s) = ((cfg.omega * t).cos(), (cfg.omega * t).sin());
    let e = y - (est.mean + est.d * c - est.q * s);
    let k = 1.0 - lpf_pole(cfg);
    let next = PhasorEstimate::new(
        est.mean + k * e,
        est.d + k * 2.0 * e * c,
        est.q - k * 2.0 * e * s,
        Matrix3::zeros(),
        t,
    );
    (next, e)
}
