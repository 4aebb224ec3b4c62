//! Fixed-step modified Euler (Heun) integration with one corrector pass.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// One predictor-corrector step:
/// `x_p = x + dt f(x)`, `x+ = x + dt/2 (f(x) + f(x_p))`.
pub fn step_modified_euler<F>(x: &DVector<f64>, dt: f64, mut f: F) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = f(x)?;
    step_with_slope(x, &k1, dt, f)
}

/// Same step when the slope at `x` is already known.
pub fn step_with_slope<F>(x: &DVector<f64>, k1: &DVector<f64>, dt: f64, mut f: F) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Scenario(format!("time step must be positive, got {dt}")));
    }
    let xp = x + k1 * dt;
    let k2 = f(&xp)?;
    Ok(x + (k1 + k2) * (0.5 * dt))
}
