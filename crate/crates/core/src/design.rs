//! MANCOVA design structures and the OLS fit.
//!
//! The stacked design is `X̃ = (M̃, Z̃) = X ⊗ I_d` with the univariate design
//! `X = (M, Z)`, so every quantity is computed on the n × (k + c) matrix and
//! applied column-wise to the d outcomes. The Kronecker blocks are only
//! materialized on request (see [`DesignMatrices::stacked_design`]).

use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix};

use crate::linalg::kron;
use crate::{Dataset, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrices {
    k: usize,
    c: usize,
    sizes: Vec<usize>,
    x: DMatrix<f64>,
    gram_inv: DMatrix<f64>,
    projector: DMatrix<f64>,
    leverages: Vec<f64>,
}

impl DesignMatrices {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Group sizes n_1..n_k; rows of group `i` follow those of group `i - 1`.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of univariate parameters, k + c.
    pub fn p(&self) -> usize {
        self.k + self.c
    }

    /// Univariate design `X = (M, Z)`.
    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// `(X'X)^{-1}`; the stacked inverse is this ⊗ I_d.
    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.gram_inv
    }

    /// `(X'X)^{-1} X'`, (k + c) × n. Column `i` is the influence vector of
    /// subject `i` on the coefficients.
    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// Hat-matrix diagonal `p_ij` of the univariate design, one per subject.
    pub fn leverages(&self) -> &[f64] {
        &self.leverages
    }

    /// Dense `X ⊗ I_d`, (n·d) × ((k + c)·d).
    pub fn stacked_design(&self, d: usize) -> DMatrix<f64> {
        kron(&self.x, &DMatrix::identity(d, d))
    }

    /// Dense `(X̃'X̃)^{-1} = (X'X)^{-1} ⊗ I_d`.
    pub fn stacked_gram_inverse(&self, d: usize) -> DMatrix<f64> {
        kron(&self.gram_inv, &DMatrix::identity(d, d))
    }

    /// Coefficients ((k + c) × d, rows μ̂_1..μ̂_k then ν̂_1..ν̂_c) and residuals
    /// (n × d) of the regression of `y` on this design.
    pub fn regress(&self, y: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let beta = &self.projector * y;
        let residuals = y - &self.x * &beta;
        (beta, residuals)
    }
}

/// OLS estimates for the stacked model `Y = M̃μ + Z̃ν + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Covariate-adjusted means, k × d.
    pub mu_hat: DMatrix<f64>,
    /// Regression coefficients, c × d (row m is ν̂_m).
    pub nu_hat: DMatrix<f64>,
    /// Residuals ε̂_ij, n × d.
    pub residuals: DMatrix<f64>,
    pub leverages: Vec<f64>,
}

impl FitResult {
    /// μ̂ stacked group-major, length k·d (the ordering contrasts act on).
    pub fn mu_vec(&self) -> Vec<f64> {
        let (k, d) = self.mu_hat.shape();
        (0..k * d).map(|idx| self.mu_hat[(idx / d, idx % d)]).collect()
    }
}

pub fn build_design(ds: &Dataset) -> Result<DesignMatrices> {
    let (k, c) = (ds.k(), ds.c());
    let x = ds.univariate_design();
    let gram = x.tr_mul(&x);
    let chol = Cholesky::new(gram).ok_or(Error::SingularGram)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 0.0) || (lo / hi) * (lo / hi) < (k + c) as f64 * f64::EPSILON {
        return Err(Error::SingularGram);
    }
    let inv = chol.inverse();
    let gram_inv = (&inv + inv.transpose()) * 0.5;
    let projector = &gram_inv * x.transpose();
    let leverages = (0..x.nrows())
        .map(|i| (0..k + c).map(|j| x[(i, j)] * projector[(j, i)]).sum::<f64>())
        .collect();
    Ok(DesignMatrices { k, c, sizes: ds.sizes().to_vec(), x, gram_inv, projector, leverages })
}

pub fn fit_ols(dm: &DesignMatrices, ds: &Dataset) -> FitResult {
    let (beta, residuals) = dm.regress(ds.y());
    let k = dm.k();
    FitResult {
        mu_hat: beta.rows(0, k).into_owned(),
        nu_hat: beta.rows(k, dm.c()).into_owned(),
        residuals,
        leverages: dm.leverages().to_vec(),
    }
}

/// Adjusted means from group averages, `μ̂_i = Ȳ_i. − (z̄_i.' ⊗ I_d) ν̂`.
///
/// Cross-check for [`fit_ols`]; both must agree.
pub fn adjusted_means_from_averages(ds: &Dataset, fit: &FitResult) -> DMatrix<f64> {
    let ybar = ds.group_means();
    let zbar = DMatrix::from_fn(ds.k(), ds.c(), |i, m| {
        let r = ds.group_range(i);
        let len = r.len() as f64;
        r.map(|row| ds.z()[(row, m)]).sum::<f64>() / len
    });
    ybar - zbar * &fit.nu_hat
}
