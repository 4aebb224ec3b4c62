//! Control cost and damping performance.

use serde::Serialize;

/// `C = sqrt(sum u_k^2)` and `P = 1 / sqrt(sum dx_k^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub cost: f64,
    /// `f64::INFINITY` when every deviation is zero.
    pub performance: f64,
    pub performance_unbounded: bool,
}

/// `u` sampled at the controller rate; `dx` holds one or more deviation
/// channels sampled at the integrator rate, all summed together.
pub fn cost_performance<'a>(u: &[f64], dx: impl IntoIterator<Item = &'a [f64]>) -> Metrics {
    // folds start at +0.0: an empty float `sum` is -0.0
    let cost = u.iter().fold(0.0, |a, v| a + v * v).sqrt();
    let energy = dx.into_iter().flat_map(|c| c.iter()).fold(0.0, |a, v| a + v * v);
    let unbounded = energy == 0.0;
    Metrics {
        cost,
        performance: if unbounded { f64::INFINITY } else { 1.0 / energy.sqrt() },
        performance_unbounded: unbounded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let m = cost_performance(&[3.0, 4.0], [&[3.0, 4.0][..]]);
        assert_eq!(m.cost, 5.0);
        assert_eq!(m.performance, 0.2);
        assert!(!m.performance_unbounded);
        let z = cost_performance(&[0.0; 4], [&[0.0; 3][..]]);
        assert_eq!(z.cost, 0.0);
        assert!(z.performance_unbounded && z.performance.is_infinite());
        let empty = cost_performance(&[], [&[1.0][..]]);
        assert!(empty.cost == 0.0 && empty.cost.is_sign_positive());
    }

    #[test]
    fn channels_are_pooled() {
        let m = cost_performance(&[], [&[3.0][..], &[4.0][..]]);
        assert_eq!(m.performance, 0.2);
    }
}
