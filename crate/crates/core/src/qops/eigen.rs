//! Hermitian eigensolver backed by nalgebra's symmetric QR iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub(crate) const MAX_SWEEPS: usize = 10_000;

/// Eigenvalues in ascending order with matching eigenvector columns.
pub(crate) fn eigh_dense(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let real = m.iter().all(|z| z.im == 0.0);
    let (values, vectors): (Vec<f64>, Array2<C64>) = if real {
        let a = DMatrix::from_fn(n, n, |i, j| m[[i, j]].re);
        let eig =
            SymmetricEigen::try_new(a, f64::EPSILON, MAX_SWEEPS).ok_or(Error::NoConvergence {
                iterations: MAX_SWEEPS,
            })?;
        let vecs = Array2::from_shape_fn((n, n), |(i, j)| C64::new(eig.eigenvectors[(i, j)], 0.0));
        (eig.eigenvalues.iter().copied().collect(), vecs)
    } else {
        let a = DMatrix::from_fn(n, n, |i, j| m[[i, j]]);
        let eig =
            SymmetricEigen::try_new(a, f64::EPSILON, MAX_SWEEPS).ok_or(Error::NoConvergence {
                iterations: MAX_SWEEPS,
            })?;
        let vecs = Array2::from_shape_fn((n, n), |(i, j)| eig.eigenvectors[(i, j)]);
        (eig.eigenvalues.iter().copied().collect(), vecs)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = Array2::from_shape_fn((n, n), |(i, j)| vectors[[i, order[j]]]);
    Ok((sorted_values, sorted_vectors))
}
