//! Observed statistics, the adjusted local level γ_n(α), decisions, local
//! and global p-values and simultaneous confidence intervals.
//!
//! Conventions, fixed for finite B:
//!
//! * `q_{s,1−γ}` is the (γB + 1)-th largest of `|A°ᵇ(h_s)|`, b = 1..B.
//! * `FWER_n(γ)` counts replicates with `|A°ᵇ(h_s)| > q_{s,1−γ}` for some s
//!   (strict), and γ ranges over the grid `{0, 1/B, …, (B−1)/B}`.
//! * `p_{n,s}` counts replicates with `|A°ᵇ(h_s)| ≥ |A_n(h_s)|` (non-strict).
//!
//! With these, `p_{n,s} ≤ γ_n(α)` holds exactly when `|A_n(h_s)| > q_{s,1−γ_n(α)}`,
//! ties included.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::bootstrap::{run_bootstrap, BootstrapConfig, BootstrapDraws, BootstrapKind};
use crate::covariance::{hc4_weights, sandwich, CovarianceEstimate};
use crate::dataset::validate;
use crate::design::{build_design, fit_ols, DesignMatrices, FitResult};
use crate::{ContrastMatrix, Dataset, Error, Result};

/// B below which the γ-grid is reported as too coarse.
pub const MIN_ADVISED_REPLICATES: usize = 100;

/// `A_n(h_s) = √n h_s'μ̂ / √(h_s'D̂h_s)`.
pub fn test_statistics(fit: &FitResult, cov: &CovarianceEstimate, contrasts: &ContrastMatrix) -> Result<Vec<f64>> {
    let sqrt_n = libm::sqrt(fit.residuals.nrows() as f64);
    let estimates = contrasts.apply(&fit.mu_vec());
    contrasts
        .rows()
        .zip(estimates)
        .enumerate()
        .map(|(s, (h, est))| {
            let var = cov.robust_variance(h);
            if !(var > 0.0) || !var.is_finite() {
                return Err(Error::ZeroVariance(contrasts.labels()[s].clone()));
            }
            Ok(sqrt_n * est / libm::sqrt(var))
        })
        .collect()
}

/// Grid index `g = γB` of an on-grid level.
pub fn grid_index(gamma: f64, replicates: usize) -> Result<usize> {
    let scaled = gamma * replicates as f64;
    let g = libm::round(scaled);
    if !(gamma >= 0.0) || g >= replicates as f64 || libm::fabs(scaled - g) > 1e-9 {
        return Err(Error::OffGrid(gamma));
    }
    Ok(g as usize)
}

/// Absolute values sorted in descending order.
fn sorted_desc_abs(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.map(f64::abs).collect();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v
}

/// `q_{s,1−γ}`: the (γB + 1)-th largest absolute value of a bootstrap column.
pub fn bootstrap_quantile(column: &[f64], gamma: f64) -> Result<f64> {
    let g = grid_index(gamma, column.len())?;
    Ok(sorted_desc_abs(column.iter().copied())[g])
}

/// Quantiles of every column at grid index `g`.
pub fn quantiles_at(draws: &BootstrapDraws, g: usize) -> Vec<f64> {
    (0..draws.contrasts()).map(|s| sorted_desc_abs(draws.column(s))[g]).collect()
}

fn fwer_within(count: usize, replicates: usize, alpha: f64) -> bool {
    count as f64 / replicates as f64 <= alpha
}

/// Definitional `FWER_n(γ)` at grid index `g`, as an exceedance count.
fn exceedances_at(draws: &BootstrapDraws, g: usize) -> usize {
    let q = quantiles_at(draws, g);
    (0..draws.replicates())
        .filter(|&b| draws.row(b).iter().zip(&q).any(|(a, qs)| a.abs() > *qs))
        .count()
}

/// `FWER_n(γ)` by its definition.
pub fn estimated_fwer(draws: &BootstrapDraws, gamma: f64) -> Result<f64> {
    let g = grid_index(gamma, draws.replicates())?;
    Ok(exceedances_at(draws, g) as f64 / draws.replicates() as f64)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// γ_n(α) as a grid index by scanning every grid point. Quadratic in B; the
/// reference for [`adjust_level`].
pub fn adjust_level_scan(draws: &BootstrapDraws, alpha: f64) -> Result<usize> {
    check_alpha(alpha)?;
    let b = draws.replicates();
    Ok((0..b).filter(|&g| fwer_within(exceedances_at(draws, g), b, alpha)).max().unwrap_or(0))
}

/// γ_n(α) = max{γ on the grid : FWER_n(γ) ≤ α}, returned as the grid index
/// `γB`.
///
/// Replicate b exceeds its column quantile at index g exactly when
/// `#{b' : |A°ᵇ'(h_s)| ≥ |A°ᵇ(h_s)|} ≤ g`; so with `m_b` the minimum of these
/// counts over s, `FWER_n(g/B) = #{b : m_b ≤ g} / B`.
pub fn adjust_level(draws: &BootstrapDraws, alpha: f64) -> Result<usize> {
    check_alpha(alpha)?;
    let b = draws.replicates();
    let mut min_count = alloc::vec![usize::MAX; b];
    for s in 0..draws.contrasts() {
        let mut asc: Vec<f64> = draws.abs_column(s);
        asc.sort_unstable_by(f64::total_cmp);
        for (m, a) in min_count.iter_mut().zip(draws.column(s)) {
            let at_least = b - asc.partition_point(|&v| v < a.abs());
            *m = (*m).min(at_least);
        }
    }
    let mut hist = alloc::vec![0usize; b + 1];
    for m in min_count {
        hist[m] += 1;
    }
    let mut best = 0;
    let mut cumulative = 0;
    for (g, &h) in hist.iter().enumerate().take(b) {
        cumulative += h;
        if fwer_within(cumulative, b, alpha) {
            best = g;
        } else {
            break;
        }
    }
    Ok(best)
}

/// `p_{n,s} = B⁻¹ #{b : |A°ᵇ(h_s)| ≥ |A_n(h_s)|}`.
pub fn local_p_values(draws: &BootstrapDraws, statistics: &[f64]) -> Vec<f64> {
    let b = draws.replicates() as f64;
    statistics
        .iter()
        .enumerate()
        .map(|(s, a)| draws.column(s).filter(|v| v.abs() >= a.abs()).count() as f64 / b)
        .collect()
}

/// Simultaneous intervals `h_s'μ̂ ± q_{s,1−γ} √(h_s'D̂h_s) / √n`.
pub fn confidence_intervals(
    fit: &FitResult,
    cov: &CovarianceEstimate,
    draws: &BootstrapDraws,
    gamma: f64,
    contrasts: &ContrastMatrix,
) -> Result<Vec<(f64, f64)>> {
    let g = grid_index(gamma, draws.replicates())?;
    let q = quantiles_at(draws, g);
    let sqrt_n = libm::sqrt(fit.residuals.nrows() as f64);
    let est = contrasts.apply(&fit.mu_vec());
    Ok(contrasts
        .rows()
        .zip(est)
        .zip(q)
        .map(|((h, e), qs)| {
            let half = qs * libm::sqrt(cov.robust_variance(h)) / sqrt_n;
            (e - half, e + half)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastResult {
    pub label: String,
    /// `h_s'μ̂`, outcome units.
    pub estimate: f64,
    /// `√(h_s'D̂h_s / n)`.
    pub std_error: f64,
    /// `A_n(h_s)`.
    pub statistic: f64,
    /// `q_{s,1−γ_n(α)}`.
    pub quantile: f64,
    pub p_value: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctpMeta {
    pub kind: Option<BootstrapKind>,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub invalid_redraws: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctpResult {
    pub per_contrast: Vec<ContrastResult>,
    /// γ_n(α).
    pub gamma: f64,
    /// γ_n(α)·B.
    pub gamma_index: usize,
    pub global_p: f64,
    pub global_reject: bool,
    pub meta: MctpMeta,
}

/// Everything computed from the data before the bootstrap.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub design: DesignMatrices,
    pub fit: FitResult,
    pub covariance: CovarianceEstimate,
    pub statistics: Vec<f64>,
    pub warnings: Vec<String>,
}

impl Analysis {
    /// Validates, fits, estimates the covariance and the observed statistics.
    pub fn prepare(ds: &Dataset, contrasts: &ContrastMatrix) -> Result<Self> {
        if contrasts.k() != ds.k() || contrasts.d() != ds.d() {
            return Err(Error::Dimension(format!(
                "contrasts built for k = {}, d = {} but data has k = {}, d = {}",
                contrasts.k(),
                contrasts.d(),
                ds.k(),
                ds.d()
            )));
        }
        let report = validate(ds);
        if !report.is_admissible() {
            return Err(Error::Inadmissible(report.errors.join("; ")));
        }
        let design = build_design(ds)?;
        let fit = fit_ols(&design, ds);
        let weights = hc4_weights(design.leverages())?;
        let covariance = sandwich(&design, &fit, &weights);
        let statistics = test_statistics(&fit, &covariance, contrasts)?;
        Ok(Self { design, fit, covariance, statistics, warnings: report.warnings })
    }

    /// Turns bootstrap draws into decisions at global level α.
    pub fn conclude(&self, contrasts: &ContrastMatrix, draws: &BootstrapDraws, alpha: f64) -> Result<MctpResult> {
        if draws.contrasts() != contrasts.r() {
            return Err(Error::Dimension(format!("{} draw columns for {} contrasts", draws.contrasts(), contrasts.r())));
        }
        let b = draws.replicates();
        let gamma_index = adjust_level(draws, alpha)?;
        let gamma = gamma_index as f64 / b as f64;
        let q = quantiles_at(draws, gamma_index);
        let p = local_p_values(draws, &self.statistics);
        let sqrt_n = libm::sqrt(self.design.n() as f64);
        let estimates = contrasts.apply(&self.fit.mu_vec());

        let per_contrast: Vec<ContrastResult> = (0..contrasts.r())
            .map(|s| {
                let std_error = libm::sqrt(self.covariance.robust_variance(contrasts.row(s))) / sqrt_n;
                let half = q[s] * std_error;
                ContrastResult {
                    label: contrasts.labels()[s].clone(),
                    estimate: estimates[s],
                    std_error,
                    statistic: self.statistics[s],
                    quantile: q[s],
                    p_value: p[s],
                    ci_lower: estimates[s] - half,
                    ci_upper: estimates[s] + half,
                    reject: self.statistics[s].abs() > q[s],
                }
            })
            .collect();
        let global_p = p.iter().copied().fold(f64::INFINITY, f64::min);
        let global_reject = per_contrast.iter().any(|c| c.reject);

        let mut warnings = self.warnings.clone();
        if b < MIN_ADVISED_REPLICATES {
            warnings.push(format!("γ-grid too coarse: B = {b} < {MIN_ADVISED_REPLICATES}"));
        }
        if gamma_index == 0 {
            warnings.push(format!("no rejection possible at this B/α (B = {b}, α = {alpha})"));
        }
        if draws.invalid_redraws() * 1000 > b {
            warnings.push(format!("{} of {b} bootstrap replicates were redrawn (zero bootstrap variance)", draws.invalid_redraws()));
        }
        Ok(MctpResult {
            per_contrast,
            gamma,
            gamma_index,
            global_p,
            global_reject,
            meta: MctpMeta {
                kind: draws.kind(),
                replicates: b,
                seed: draws.seed(),
                alpha,
                invalid_redraws: draws.invalid_redraws(),
                warnings,
            },
        })
    }
}

/// Full sequential pipeline: fit, covariance, bootstrap, γ_n(α), decisions.
pub fn run_mctp(ds: &Dataset, contrasts: &ContrastMatrix, cfg: &BootstrapConfig, alpha: f64) -> Result<MctpResult> {
    check_alpha(alpha)?;
    let analysis = Analysis::prepare(ds, contrasts)?;
    let draws = run_bootstrap(cfg, &analysis.design, &analysis.fit, &analysis.covariance, contrasts)?;
    analysis.conclude(contrasts, &draws, alpha)
}
