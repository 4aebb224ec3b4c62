use std::f64::consts::PI;

use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use podlab::grid::C64;
use podlab::pod::{
    damping_control, g_func, h_func, kf_correct, kf_predict, observation_row, EstimatorKind, PhasorEstimate,
    PodConfig,
};

fn kalman(omega: f64, period: f64, k_c: f64, residue: Option<C64>) -> PodConfig {
    PodConfig {
        estimator: EstimatorKind::Kalman,
        k_c,
        residue,
        ..PodConfig::new(omega, period)
    }
}

/// Innovations of a filter tracking the undamped mode `z' = j w z + b u`
/// measured as `y = 0.4 + 2 Re(c z)`, under random held modulation.
fn innovations(model_residue: bool) -> (Vec<f64>, f64) {
    let (omega, dt) = (2.0 * PI * 0.9, 0.02);
    let c = C64::from_polar(0.8, 0.7);
    let b = C64::from_polar(0.5, -2.1);
    let cfg = kalman(omega, dt, 0.4, model_residue.then_some(c * b));
    let rot = C64::from_polar(1.0, omega * dt);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut z = C64::new(0.3, 0.1);
    let mut est = PhasorEstimate::initial(&cfg, 0.0);
    let mut out = Vec::new();
    let mut amplitude = 0.0f64;
    for k in 0..2000 {
        let t = k as f64 * dt;
        let y = 0.4 + 2.0 * (c * z).re;
        amplitude = amplitude.max((2.0 * c * z).norm());
        let (corrected, innovation) = kf_correct(&est, y, &cfg);
        out.push(innovation);
        let u = rng.random_range(-1.0..1.0);
        est = kf_predict(&corrected, u, &cfg);
        z = rot * z + b / C64::new(0.0, omega) * (rot - 1.0) * u;
        assert!((est.t - (t + dt)).abs() < 1e-9);
    }
    (out, amplitude)
}

#[test]
fn control_input_model_explains_the_response() {
    let (cim, amplitude) = innovations(true);
    let late = cim[1000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(late < 1e-6 * amplitude, "{late} vs amplitude {amplitude}");

    let (blind, _) = innovations(false);
    let rms = (blind[1000..].iter().map(|v| v * v).sum::<f64>() / 1000.0).sqrt();
    assert!(rms > 1e-3 * amplitude, "{rms}");
}

proptest! {
    #[test]
    fn gh_identity(t in 0.0f64..200.0, omega in 0.3f64..30.0, dt in 1e-3f64..0.2,
                   mag in 1e-3f64..5.0, ang in -PI..PI) {
        let r = C64::from_polar(mag, ang);
        let lhs = r * C64::new(g_func(t, omega, dt), -h_func(t, omega, dt));
        let rhs = 2.0 * r / C64::new(0.0, omega)
            * (C64::from_polar(1.0, omega * dt) - 1.0)
            * C64::from_polar(1.0, -omega * (t + dt));
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
    }

    #[test]
    fn covariance_stays_symmetric_psd(seed in any::<u64>(), k_c in 0.05f64..1.0,
                                      f in 0.1f64..3.0, steps in 1usize..400) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = kalman(2.0 * PI * f, 0.02, k_c, Some(C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        let mut est = PhasorEstimate::initial(&cfg, rng.random_range(0.0..10.0));
        for _ in 0..steps {
            est = kf_correct(&est, rng.random_range(-10.0..10.0), &cfg).0;
            prop_assert_eq!(est.p, est.p.transpose());
            prop_assert!(est.p.symmetric_eigenvalues().min() >= -1e-12);
            est = kf_predict(&est, rng.random_range(-2.0..2.0), &cfg);
            prop_assert_eq!(est.p, est.p.transpose());
        }
    }

    #[test]
    fn observation_reconstructs_the_signal(mean in -5.0f64..5.0, d in -5.0f64..5.0, q in -5.0f64..5.0,
                                          omega in 0.1f64..30.0, t in 0.0f64..100.0) {
        let est = PhasorEstimate::new(mean, d, q, Matrix3::zeros(), t);
        let via_row = (observation_row(omega, t) * est.state())[0];
        prop_assert!((via_row - est.reconstruct(omega, t)).abs() <= 1e-14 * (1.0 + via_row.abs()));
    }

    #[test]
    fn doubling_the_gain_doubles_the_output(d in -3.0f64..3.0, q in -3.0f64..3.0, gain in -50.0f64..50.0,
                                            beta in -180.0f64..180.0, t in 0.0f64..50.0) {
        let est = PhasorEstimate::new(0.0, d, q, Matrix3::zeros(), t);
        let cfg = PodConfig { gain, beta_deg: beta, ..PodConfig::new(2.0 * PI, 0.02) };
        let doubled = PodConfig { gain: 2.0 * gain, ..cfg.clone() };
        prop_assert_eq!(damping_control(&est, &doubled, t), 2.0 * damping_control(&est, &cfg, t));
    }

    #[test]
    fn output_respects_limits(d in -3.0f64..3.0, q in -3.0f64..3.0, gain in 0.0f64..500.0,
                              lo in -1.0f64..0.0, hi in 0.0f64..1.0, t in 0.0f64..50.0) {
        let est = PhasorEstimate::new(0.0, d, q, Matrix3::zeros(), t);
        let cfg = PodConfig { gain, limits: (lo, hi), ..PodConfig::new(2.0 * PI, 0.02) };
        let u = damping_control(&est, &cfg, t);
        prop_assert!(u >= lo && u <= hi);
    }
}
