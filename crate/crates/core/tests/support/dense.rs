//! Dense reference computations assembled directly from the stacked model
//! `Y = (X ⊗ I_d) β + ε`. Slow and literal on purpose.

#![allow(dead_code)]

use mctp_core::Dataset;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = DMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = a[(i, j)] * b[(p, q)];
                }
            }
        }
    }
    out
}

fn inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().lu().try_inverse().expect("invertible")
}

/// Group indicator matrix M (n × k).
pub fn indicators(ds: &Dataset) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(ds.n(), ds.k());
    for i in 0..ds.k() {
        for row in ds.group_range(i) {
            m[(row, i)] = 1.0;
        }
    }
    m
}

/// X = (M, Z).
pub fn design(ds: &Dataset) -> DMatrix<f64> {
    let m = indicators(ds);
    let mut x = DMatrix::zeros(ds.n(), ds.k() + ds.c());
    x.columns_mut(0, ds.k()).copy_from(&m);
    x.columns_mut(ds.k(), ds.c()).copy_from(ds.z());
    x
}

/// Y stacked subject by subject: entry `i·d + l`.
pub fn stacked_y(ds: &Dataset) -> DVector<f64> {
    let d = ds.d();
    DVector::from_fn(ds.n() * d, |idx, _| ds.y()[(idx / d, idx % d)])
}

/// β̂ from the normal equations of the stacked model, reshaped to (k+c) × d.
pub fn ols_beta(ds: &Dataset) -> DMatrix<f64> {
    let d = ds.d();
    let xt = kron(&design(ds), &DMatrix::identity(d, d));
    let beta = inverse(&(xt.transpose() * &xt)) * xt.transpose() * stacked_y(ds);
    DMatrix::from_fn(ds.k() + ds.c(), d, |p, l| beta[p * d + l])
}

/// μ̂ from group averages after partialling the covariates out of the
/// group indicators: W = (I − P_M) Z, ν̂ = ((W'W)⁻¹W' ⊗ I_d) Y and
/// μ̂_i = Ȳ_i − (z̄_i' ⊗ I_d) ν̂.
pub fn adjusted_means_partialled(ds: &Dataset) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, k, c, d) = (ds.n(), ds.k(), ds.c(), ds.d());
    let m = indicators(ds);
    if c == 0 {
        return (ds.group_means(), DMatrix::zeros(0, d));
    }
    let pm = &m * inverse(&(m.transpose() * &m)) * m.transpose();
    let w = (DMatrix::identity(n, n) - pm) * ds.z();
    let nu_vec = kron(&(inverse(&(w.transpose() * &w)) * w.transpose()), &DMatrix::identity(d, d)) * stacked_y(ds);
    let nu = DMatrix::from_fn(c, d, |mm, l| nu_vec[mm * d + l]);
    let mu = DMatrix::from_fn(k, d, |i, l| {
        let r = ds.group_range(i);
        let len = r.len() as f64;
        let ybar = r.clone().map(|row| ds.y()[(row, l)]).sum::<f64>() / len;
        let adj: f64 = (0..c).map(|mm| r.clone().map(|row| ds.z()[(row, mm)]).sum::<f64>() / len * nu[(mm, l)]).sum();
        ybar - adj
    });
    (mu, nu)
}

/// Diagonal of X (X'X)⁻¹ X'.
pub fn leverages(ds: &Dataset) -> Vec<f64> {
    let x = design(ds);
    let h = &x * inverse(&(x.transpose() * &x)) * x.transpose();
    h.diagonal().iter().copied().collect()
}

pub fn hc4(lev: &[f64]) -> Vec<f64> {
    let mean = lev.iter().sum::<f64>() / lev.len() as f64;
    lev.iter().map(|&p| (1.0 - p).powf(-(p / mean).min(4.0))).collect()
}

/// n (X̃'X̃)⁻¹ X̃' Σ̂ X̃ (X̃'X̃)⁻¹ restricted to the μ-block, with
/// Σ̂ = ⊕ w_ij ε̂_ij ε̂_ij'.
pub fn sandwich_mu_block(ds: &Dataset, weights: &[f64]) -> DMatrix<f64> {
    let (n, k, d) = (ds.n(), ds.k(), ds.d());
    let xt = kron(&design(ds), &DMatrix::identity(d, d));
    let beta = ols_beta(ds);
    let fitted = design(ds) * &beta;
    let mut center = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for a in 0..d {
            for b in 0..d {
                let ea = ds.y()[(i, a)] - fitted[(i, a)];
                let eb = ds.y()[(i, b)] - fitted[(i, b)];
                center[(i * d + a, i * d + b)] = weights[i] * ea * eb;
            }
        }
    }
    let bread = inverse(&(xt.transpose() * &xt));
    let full = (&bread * xt.transpose() * center * &xt * &bread) * n as f64;
    full.view((0, 0), (k * d, k * d)).into_owned()
}

/// Definitional γ-search: for every grid index compute the column
/// quantiles and count replicates with at least one exceedance.
pub fn gamma_index_by_definition(draws: &[Vec<f64>], alpha: f64) -> usize {
    let b = draws.len();
    let r = draws[0].len();
    let sorted: Vec<Vec<f64>> = (0..r)
        .map(|s| {
            let mut col: Vec<f64> = draws.iter().map(|row| row[s].abs()).collect();
            col.sort_by(|x, y| y.partial_cmp(x).unwrap());
            col
        })
        .collect();
    let mut best = 0;
    for g in 0..b {
        let exceed = draws
            .iter()
            .filter(|row| (0..r).any(|s| row[s].abs() > sorted[s][g]))
            .count();
        if exceed as f64 / b as f64 <= alpha {
            best = g;
        }
    }
    best
}

/// Normal data with random group sizes, outcomes and covariates.
pub fn random_dataset(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(2..=4);
    let d = rng.random_range(1..=3);
    let c = rng.random_range(0..=2);
    let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(c + 3..=c + 9)).collect();
    let n: usize = sizes.iter().sum();
    let y = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal) * 3.0 + 1.0);
    let z = DMatrix::from_fn(n, c, |_, _| rng.random_range(-5.0..5.0));
    Dataset::new((1..=k).map(|i| i.to_string()).collect(), sizes, y, z).unwrap()
}

/// Draw matrix with values on a coarse lattice, so that ties are frequent.
pub fn tied_draws(seed: u64, b: usize, r: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = rng.random_range(3..=12);
    (0..b)
        .map(|_| (0..r).map(|_| (rng.random_range(0..levels) as f64 - levels as f64 / 2.0) * 0.5).collect())
        .collect()
}
