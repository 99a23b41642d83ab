//! Multi-threaded drivers. Every replicate and run draws from its own
//! substream, so results are identical to the sequential functions in
//! `mctp_core` for any number of threads.

use mctp_core::bootstrap::Resampler;
use mctp_core::design::{DesignMatrices, FitResult};
use mctp_core::mctp::Analysis;
use mctp_core::{BootstrapConfig, BootstrapDraws, ContrastMatrix, CovarianceEstimate, Dataset, MctpResult, Result};
use rayon::prelude::*;

/// Runs `f` on a pool with `workers` threads, or on the global pool when
/// `workers` is zero.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn run_bootstrap(
    cfg: &BootstrapConfig,
    dm: &DesignMatrices,
    fit: &FitResult,
    cov: &CovarianceEstimate,
    contrasts: &ContrastMatrix,
) -> Result<BootstrapDraws> {
    cfg.validate()?;
    let resampler = Resampler::new(cfg.kind, dm, fit, cov, contrasts)?;
    let max_redraws = cfg.max_redraws();
    let rows = with_workers(cfg.workers, || {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|b| resampler.replicate(cfg.seed, b, max_redraws))
            .collect::<Result<Vec<_>>>()
    })?;
    BootstrapDraws::assemble(cfg, rows)
}

/// Full pipeline with a parallel bootstrap stage. Returns the draws too, for
/// auditing.
pub fn run_mctp(
    ds: &Dataset,
    contrasts: &ContrastMatrix,
    cfg: &BootstrapConfig,
    alpha: f64,
) -> Result<(Analysis, BootstrapDraws, MctpResult)> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(mctp_core::Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let analysis = Analysis::prepare(ds, contrasts)?;
    let draws = run_bootstrap(cfg, &analysis.design, &analysis.fit, &analysis.covariance, contrasts)?;
    let result = analysis.conclude(contrasts, &draws, alpha)?;
    Ok((analysis, draws, result))
}
