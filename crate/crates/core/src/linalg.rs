use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Cholesky factorization with an escalating diagonal jitter.
///
/// Tries the matrix as given, then adds `1e-10 · mean(diag)` and escalates by
/// ×10 up to `1e-4 · mean(diag)`. Returns the factor and the jitter used.
pub fn cholesky_jittered(a: &DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if !a.is_square() {
        return Err(Error::invalid("cannot factorize a non-square matrix"));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("cannot factorize a matrix with non-finite entries"));
    }
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok((c, 0.0));
    }
    let n = a.nrows();
    let mean_diag = (a.trace() / n.max(1) as f64).abs().max(f64::MIN_POSITIVE);
    let mut jitter = 1e-10 * mean_diag;
    while jitter <= 1e-4 * mean_diag * (1.0 + 1e-9) {
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    let smallest = SymmetricEigen::new(a.clone()).eigenvalues.min();
    Err(Error::numerical(
        "matrix not positive definite after maximum jitter",
        smallest,
    ))
}

/// Symmetric eigendecomposition with negative round-off eigenvalues clipped.
pub(crate) fn sym_eigen_clipped(a: &DMatrix<f64>) -> SymmetricEigen<f64, Dyn> {
    if a.nrows() == 0 {
        return SymmetricEigen {
            eigenvectors: DMatrix::zeros(0, 0),
            eigenvalues: nalgebra::DVector::zeros(0),
        };
    }
    let sym = (a + a.transpose()) * 0.5;
    let mut eig = SymmetricEigen::new(sym);
    for v in eig.eigenvalues.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    eig
}
