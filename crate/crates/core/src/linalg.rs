//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};

/// Numerical rank from singular values, counting those above
/// `sigma_max * max(rows, cols) * f64::EPSILON`.
pub fn numerical_rank(x: &DMatrix<f64>) -> usize {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0;
    }
    let sv = x.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0_f64, f64::max);
    let tol = smax * (x.nrows().max(x.ncols()) as f64) * f64::EPSILON;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Symmetric PSD square root `L = V diag(sqrt(max(λ, 0))) V'`, so `L L' = Σ`.
///
/// Eigenvalues in `[-tol * scale, 0)` are clamped to zero, where `scale` is the
/// largest absolute eigenvalue. A more negative eigenvalue is returned as
/// `Err(eigenvalue)`.
pub fn psd_sqrt(sigma: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>, f64> {
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut roots = eig.eigenvalues.clone();
    for v in roots.iter_mut() {
        if *v < -tol * scale {
            return Err(*v);
        }
        *v = libm::sqrt(v.max(0.0));
    }
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(sigma: &DMatrix<f64>) -> f64 {
    let sym = (sigma + sigma.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
