//! HC4-weighted sandwich covariance of the adjusted means and its
//! singularity-robust diagonal.
//!
//! With `X̃ = X ⊗ I_d` and the block-diagonal center `Σ̂ = ⊕ w_ij ε̂_ij ε̂_ij'`,
//! the sandwich reduces to a sum over subjects:
//!
//! ```text
//! Λ̂ = n Σ_ij (a_ij a_ij') ⊗ (w_ij ε̂_ij ε̂_ij'),   a_ij = (X'X)^{-1} x_ij
//! ```
//!
//! Only the upper-left k·d block Λ̂₁₁ (the μ-block) is kept. `D̂` is its
//! diagonal; it never requires a decomposition of Λ̂₁₁, so it stays finite
//! when the group covariances are singular.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::design::{DesignMatrices, FitResult};
use crate::{Error, Result};

const LEVERAGE_CEILING: f64 = 1.0 - 1e-12;

/// HC4 weights `w_ij = (1 − p_ij)^(−δ_ij)` with
/// `δ_ij = min{4, p_ij / p̄}` and `p̄` the mean leverage.
///
/// The weight multiplies the squared residual matrix `ε̂_ij ε̂_ij'` as a whole.
pub fn hc4_weights(leverages: &[f64]) -> Result<Vec<f64>> {
    if leverages.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((subject, &leverage)) = leverages.iter().enumerate().find(|(_, &p)| !(p < LEVERAGE_CEILING)) {
        return Err(Error::LeverageAtOne { subject, leverage });
    }
    let mean = leverages.iter().sum::<f64>() / leverages.len() as f64;
    Ok(leverages
        .iter()
        .map(|&p| {
            let delta = if mean > 0.0 { (p / mean).min(4.0) } else { 0.0 };
            libm::pow(1.0 - p, -delta)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    /// Λ̂₁₁, k·d × k·d, indexed group-major (`i * d + l`).
    pub lambda11: DMatrix<f64>,
    /// D̂ = diag(Λ̂₁₁), length k·d.
    pub diag: Vec<f64>,
    /// Σ̂_i with divisor n_i − c − 1, present when every divisor is positive.
    pub group_sigmas: Option<Vec<DMatrix<f64>>>,
}

impl CovarianceEstimate {
    /// `h' D̂ h`.
    pub fn robust_variance(&self, h: &[f64]) -> f64 {
        h.iter().zip(&self.diag).map(|(hv, dv)| hv * hv * dv).sum()
    }

    /// `h' Λ̂₁₁ h`.
    pub fn sandwich_variance(&self, h: &[f64]) -> f64 {
        let hv = DMatrix::from_column_slice(h.len(), 1, h);
        (hv.transpose() * &self.lambda11 * &hv)[(0, 0)]
    }
}

/// Rows `kron(a_ij[..k], sqrt(w_ij) ε̂_ij)`; Λ̂₁₁ = n F'F.
fn influence_rows(dm: &DesignMatrices, residuals: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    let (k, d) = (dm.k(), residuals.ncols());
    let proj = dm.projector();
    DMatrix::from_fn(dm.n(), k * d, |i, col| {
        let (p, l) = (col / d, col % d);
        proj[(p, i)] * libm::sqrt(weights[i]) * residuals[(i, l)]
    })
}

pub fn sandwich(dm: &DesignMatrices, fit: &FitResult, weights: &[f64]) -> CovarianceEstimate {
    let f = influence_rows(dm, &fit.residuals, weights);
    let lambda = f.tr_mul(&f) * dm.n() as f64;
    let lambda11 = (&lambda + lambda.transpose()) * 0.5;
    let diag = lambda11.diagonal().iter().copied().collect();
    let group_sigmas = groupwise_cov(fit, dm.sizes(), dm.c()).ok();
    CovarianceEstimate { lambda11, diag, group_sigmas }
}

/// Group covariances `Σ̂_i = (n_i − c − 1)^{-1} Σ_j ε̂_ij ε̂_ij'`.
pub fn groupwise_cov(fit: &FitResult, sizes: &[usize], c: usize) -> Result<Vec<DMatrix<f64>>> {
    let mut start = 0;
    let mut out = Vec::with_capacity(sizes.len());
    for (group, &size) in sizes.iter().enumerate() {
        if size <= c + 1 {
            return Err(Error::NonpositiveDivisor { group, size, covariates: c });
        }
        let block = fit.residuals.rows(start, size);
        let s = block.tr_mul(&block) / (size - c - 1) as f64;
        out.push((&s + s.transpose()) * 0.5);
        start += size;
    }
    Ok(out)
}

/// Fast path for D̂ used inside the bootstrap: the design and weights are
/// fixed, only the residuals change.
#[derive(Debug, Clone)]
pub struct RobustDiagonal {
    // n × k, entry (i, p) = n · w_i · a_i[p]²
    scale: DMatrix<f64>,
}

impl RobustDiagonal {
    pub fn new(dm: &DesignMatrices, weights: &[f64]) -> Self {
        let n = dm.n() as f64;
        let proj = dm.projector();
        let scale = DMatrix::from_fn(dm.n(), dm.k(), |i, p| n * weights[i] * proj[(p, i)] * proj[(p, i)]);
        Self { scale }
    }

    /// D̂ for the given residuals as a k × d matrix.
    pub fn compute(&self, residuals: &DMatrix<f64>) -> DMatrix<f64> {
        let sq = residuals.map(|e| e * e);
        self.scale.tr_mul(&sq)
    }
}
