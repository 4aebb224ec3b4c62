//! Dense eigen-structure of a real matrix: eigenvalues, right eigenvectors
//! by inverse iteration, and left eigenvectors as rows of the inverse of
//! the right-eigenvector matrix (so that `psi_i phi_j = delta_ij`).

use std::f64::consts::PI;

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::network::C64;

/// Eigenvector condition numbers above this are flagged.
pub const CONDITION_WARNING: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct ModeInfo {
    pub eigenvalue: C64,
    /// Right eigenvector, unit 2-norm.
    pub right: DVector<C64>,
    /// Left eigenvector (a row vector, stored as a column) with `psi phi = 1`.
    pub left: DVector<C64>,
    /// `|psi| |phi|`, the sensitivity of the eigenvalue.
    pub condition: f64,
    pub warning: Option<String>,
}

impl ModeInfo {
    /// Oscillation frequency `Im(lambda) / 2 pi`, Hz (negative for the
    /// lower member of a conjugate pair).
    pub fn frequency(&self) -> f64 {
        self.eigenvalue.im / (2.0 * PI)
    }

    /// `-Re(lambda) / |lambda|`.
    pub fn damping_ratio(&self) -> f64 {
        let m = self.eigenvalue.norm();
        if m == 0.0 {
            0.0
        } else {
            -self.eigenvalue.re / m
        }
    }
}

fn start_vector(n: usize, salt: usize) -> DVector<C64> {
    // Deterministic, dense and unlikely to be deficient in any eigendirection.
    DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let k = (i + 1 + salt * 7) as f64;
            C64::new(1.0 + 0.37 * (k * 1.3).sin(), 0.21 * (k * 2.1).cos())
        }),
    )
}

fn normalize_phase(v: &mut DVector<C64>) {
    let norm = v.norm();
    if norm == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty");
    let rot = pivot.conj() / pivot.norm() / norm;
    v.iter_mut().for_each(|z| *z *= rot);
}

/// Right eigenvector for `lambda`, orthogonal to the vectors in `cluster`
/// (previously found vectors for numerically equal eigenvalues).
fn right_vector(a: &DMatrix<C64>, lambda: C64, cluster: &[DVector<C64>], scale: f64, salt: usize) -> DVector<C64> {
    let n = a.nrows();
    let shift = lambda + C64::new(1.0, 1.0) * (1e-10 * scale);
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut v = start_vector(n, salt);
    for _ in 0..6 {
        for w in cluster {
            let p = w.dotc(&v);
            v -= w * p;
        }
        let norm = v.norm();
        if norm > 0.0 {
            v /= C64::new(norm, 0.0);
        }
        match lu.solve(&v) {
            Some(next) if next.iter().all(|z| z.is_finite()) => v = next,
            _ => break,
        }
    }
    for w in cluster {
        let p = w.dotc(&v);
        v -= w * p;
    }
    normalize_phase(&mut v);
    v
}

/// Real Schur form with a bounded iteration count; the convergence
/// tolerance is relaxed step by step if the iteration stalls.
fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    for eps in [1e-15, 1e-14, 1e-13, 1e-12] {
        if let Some(schur) = Schur::try_new(a.clone(), eps, 200 * a.nrows()) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::Dimension("eigenvalue iteration did not converge".into()))
}

/// Eigenvalues with right/left eigenvectors, sorted by descending real part
/// (then descending imaginary part). Conjugate pairs carry conjugate vectors.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<Vec<ModeInfo>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension(format!("matrix is {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Dimension("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = a.amax().max(1.0);
    let mut lambdas = eigenvalues(a)?;

    // Make conjugate partners exact conjugates.
    let mut paired = vec![false; n];
    for i in 0..n {
        if lambdas[i].im > 0.0 && !paired[i] {
            let target = lambdas[i].conj();
            if let Some(j) = (0..n)
                .filter(|&j| !paired[j] && j != i && lambdas[j].im < 0.0)
                .min_by(|&p, &q| (lambdas[p] - target).norm().total_cmp(&(lambdas[q] - target).norm()))
            {
                lambdas[j] = target;
                paired[i] = true;
                paired[j] = true;
            }
        }
    }
    lambdas.sort_by(|p, q| q.re.total_cmp(&p.re).then(q.im.total_cmp(&p.im)));

    let ac = a.map(|v| C64::new(v, 0.0));
    let cluster_tol = 1e-8 * scale;
    let mut vectors: Vec<DVector<C64>> = Vec::with_capacity(n);
    for (i, &lam) in lambdas.iter().enumerate() {
        if lam.im < 0.0 {
            if let Some(k) = (0..i).find(|&k| lambdas[k] == lam.conj()) {
                let mut v = vectors[k].map(|z| z.conj());
                // a repeated conjugate pair needs distinct vectors
                let taken = (0..i).any(|p| lambdas[p] == lam && (vectors[p].clone() - &v).norm() < 1e-12);
                if !taken {
                    normalize_phase(&mut v);
                    vectors.push(v);
                    continue;
                }
            }
        }
        let cluster: Vec<DVector<C64>> = (0..i)
            .filter(|&k| (lambdas[k] - lam).norm() <= cluster_tol)
            .map(|k| vectors[k].clone())
            .collect();
        vectors.push(right_vector(&ac, lam, &cluster, scale, i));
    }

    let phi = DMatrix::from_columns(&vectors);
    let (psi, singular) = match phi.clone().try_inverse() {
        Some(inv) => (inv, false),
        None => {
            let svd = phi.clone().svd(true, true);
            (svd.pseudo_inverse(1e-14).map_err(|e| Error::Dimension(e.to_string()))?, true)
        }
    };

    Ok(lambdas
        .iter()
        .enumerate()
        .map(|(i, &lam)| {
            let left = psi.row(i).transpose();
            let condition = left.norm() * vectors[i].norm();
            let residual = (&ac * &vectors[i] - &vectors[i] * lam).norm() / scale;
            let warning = if singular || !condition.is_finite() || condition > CONDITION_WARNING || residual > 1e-6 {
                Some(format!("eigenvalue {lam:.4} is defective or nearly so (condition {condition:.2e})"))
            } else {
                None
            };
            ModeInfo {
                eigenvalue: lam,
                right: vectors[i].clone(),
                left,
                condition,
                warning,
            }
        })
        .collect())
}

/// `sum_i lambda_i phi_i psi_i`, which equals `A` for a diagonalizable matrix.
pub fn reconstruct(modes: &[ModeInfo]) -> DMatrix<C64> {
    let n = modes.first().map(|m| m.right.len()).unwrap_or(0);
    let mut out = DMatrix::zeros(n, n);
    for m in modes {
        out += &m.right * m.left.transpose() * m.eigenvalue;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0]));
        let modes = eigendecompose(&a).unwrap();
        assert_eq!(modes.len(), 2);
        assert!((modes[0].eigenvalue - C64::new(-1.0, 0.0)).norm() < 1e-14);
        assert!((modes[1].eigenvalue - C64::new(-2.0, 0.0)).norm() < 1e-14);
        assert!((modes[0].right[0] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(modes[0].right[1].norm() < 1e-12);
        assert!((modes[1].right[1] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rotation() {
        let w = 6.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        let modes = eigendecompose(&a).unwrap();
        assert!((modes[0].eigenvalue - C64::new(0.0, w)).norm() < 1e-12);
        assert!((modes[1].eigenvalue - C64::new(0.0, -w)).norm() < 1e-12);
        assert_eq!(modes[0].damping_ratio(), 0.0);
        assert!((modes[0].frequency() - w / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn repeated_eigenvalue_gets_independent_vectors() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -1.0, -3.0]));
        let modes = eigendecompose(&a).unwrap();
        assert!(modes.iter().all(|m| m.warning.is_none()));
        assert!((reconstruct(&modes) - a.map(|v| C64::new(v, 0.0))).camax() < 1e-12);
    }

    #[test]
    fn jordan_block_is_flagged() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        let modes = eigendecompose(&a).unwrap();
        assert!(modes.iter().any(|m| m.warning.is_some()));
    }

    #[test]
    fn eigen_equations_hold() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[0.0, 377.0, 0.0, 0.0, -0.1, -0.05, -0.2, 0.0, -1.0, 0.0, -0.3, 0.4, 0.0, 0.0, -5.0, -20.0],
        );
        let modes = eigendecompose(&a).unwrap();
        let ac = a.map(|v| C64::new(v, 0.0));
        for m in &modes {
            let r = &ac * &m.right - &m.right * m.eigenvalue;
            let l = m.left.transpose() * &ac - m.left.transpose() * m.eigenvalue;
            let scale = ac.norm() * m.right.norm();
            assert!(r.camax() < 1e-8 * scale);
            assert!(l.camax() < 1e-8 * ac.norm() * m.left.norm());
            assert!(((m.left.transpose() * &m.right)[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-10);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn random_matrices_reconstruct(vals in proptest::collection::vec(-5.0f64..5.0, 64)) {
            let a = DMatrix::from_row_slice(8, 8, &vals);
            let modes = eigendecompose(&a).unwrap();
            if modes.iter().all(|m| m.warning.is_none()) {
                let err = (reconstruct(&modes) - a.map(|v| C64::new(v, 0.0))).camax();
                proptest::prop_assert!(err < 1e-8, "{}", err);
                for (i, p) in modes.iter().enumerate() {
                    for (j, q) in modes.iter().enumerate() {
                        if i != j && (p.eigenvalue - q.eigenvalue).norm() > 1e-6 {
                            proptest::prop_assert!((p.left.transpose() * &q.right)[(0, 0)].norm() < 1e-8);
                        }
                    }
                }
            }
        }
    }
}
