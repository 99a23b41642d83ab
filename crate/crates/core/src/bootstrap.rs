//! Wild and parametric bootstrap of the studentized contrast statistics.
//!
//! Both schemes generate a zero-mean response `Y°`, refit it on the original
//! design, re-estimate `D̂°` with the original HC4 weights and return
//! `A°(h_s) = √n h_s'μ̂° / √(h_s'D̂°h_s)` for all contrasts from that one
//! sample.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::covariance::{groupwise_cov, hc4_weights, CovarianceEstimate, RobustDiagonal};
use crate::design::{DesignMatrices, FitResult};
use crate::linalg::psd_sqrt;
use crate::rng::{domain, substream};
use crate::{ContrastMatrix, Error, Result};

/// Relative eigenvalue tolerance when taking square roots of Σ̂_i.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BootstrapKind {
    /// Rademacher multipliers on leverage-scaled residuals.
    Wild,
    /// Group-wise normal draws with the estimated covariances Σ̂_i.
    Parametric,
}

impl BootstrapKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Wild => "wild",
            Self::Parametric => "parametric",
        }
    }

    fn domain(self) -> u64 {
        match self {
            Self::Wild => domain::WILD,
            Self::Parametric => domain::PARAMETRIC,
        }
    }
}

impl fmt::Display for BootstrapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for BootstrapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wild" => Ok(Self::Wild),
            "parametric" | "param" => Ok(Self::Parametric),
            other => Err(Error::InvalidArgument(format!("unknown bootstrap kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub kind: BootstrapKind,
    /// Number of replicates B.
    pub replicates: usize,
    pub seed: u64,
    /// Advisory worker count for parallel drivers; results never depend on it.
    pub workers: usize,
}

impl BootstrapConfig {
    pub fn new(kind: BootstrapKind, replicates: usize, seed: u64) -> Self {
        Self { kind, replicates, seed, workers: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("bootstrap replicate count B must be >= 1".into()));
        }
        Ok(())
    }

    /// Redraw budget for a single replicate before the run is abandoned.
    pub fn max_redraws(&self) -> usize {
        self.replicates / 100 + 1
    }
}

/// B × r matrix of bootstrap statistics, one row per replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapDraws {
    stats: Vec<f64>,
    replicates: usize,
    contrasts: usize,
    kind: Option<BootstrapKind>,
    seed: u64,
    invalid_redraws: usize,
}

impl BootstrapDraws {
    /// Wraps a row-major B × r matrix that did not come from a resampler
    /// (synthetic draws in tests, or draws loaded from an audit file).
    pub fn from_matrix(replicates: usize, contrasts: usize, stats: Vec<f64>) -> Result<Self> {
        if replicates == 0 || contrasts == 0 || stats.len() != replicates * contrasts {
            return Err(Error::Dimension(format!(
                "{} values for a {replicates} × {contrasts} draw matrix",
                stats.len()
            )));
        }
        if stats.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("bootstrap statistics must be finite".into()));
        }
        Ok(Self { stats, replicates, contrasts, kind: None, seed: 0, invalid_redraws: 0 })
    }

    /// Assembles replicates produced by [`Resampler::replicate`] in index
    /// order, enforcing the invalid-replicate limit (at most 1% of B).
    pub fn assemble(cfg: &BootstrapConfig, rows: Vec<Replicate>) -> Result<Self> {
        cfg.validate()?;
        if rows.len() != cfg.replicates {
            return Err(Error::Dimension(format!("{} replicates assembled for B = {}", rows.len(), cfg.replicates)));
        }
        let invalid: usize = rows.iter().map(|r| r.redraws).sum();
        if invalid * 100 > cfg.replicates {
            return Err(Error::DegenerateBootstrap { invalid, replicates: cfg.replicates });
        }
        let contrasts = rows[0].stats.len();
        let mut stats = Vec::with_capacity(cfg.replicates * contrasts);
        for row in rows {
            stats.extend_from_slice(&row.stats);
        }
        Ok(Self { stats, replicates: cfg.replicates, contrasts, kind: Some(cfg.kind), seed: cfg.seed, invalid_redraws: invalid })
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    pub fn contrasts(&self) -> usize {
        self.contrasts
    }

    pub fn kind(&self) -> Option<BootstrapKind> {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of replicates that had to be redrawn.
    pub fn invalid_redraws(&self) -> usize {
        self.invalid_redraws
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.stats[b * self.contrasts..(b + 1) * self.contrasts]
    }

    pub fn column(&self, s: usize) -> impl Iterator<Item = f64> + '_ {
        self.stats.iter().skip(s).step_by(self.contrasts).copied()
    }

    /// `|A°ᵇ(h_s)|` for b = 1..B.
    pub fn abs_column(&self, s: usize) -> Vec<f64> {
        self.column(s).map(f64::abs).collect()
    }

    /// Row-major values.
    pub fn as_slice(&self) -> &[f64] {
        &self.stats
    }
}

/// One bootstrap row and the number of redraws it needed.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub stats: Vec<f64>,
    pub redraws: usize,
}

/// Precomputed state for drawing bootstrap replicates from one fitted
/// dataset.
#[derive(Debug, Clone)]
pub struct Resampler<'a> {
    kind: BootstrapKind,
    design: &'a DesignMatrices,
    contrasts: &'a ContrastMatrix,
    diagonal: RobustDiagonal,
    // wild: ε̂_ij / √(1 − p_ij), n × d
    scaled_residuals: DMatrix<f64>,
    // parametric: symmetric roots of Σ̂_i
    roots: Vec<DMatrix<f64>>,
}

impl<'a> Resampler<'a> {
    pub fn new(
        kind: BootstrapKind,
        dm: &'a DesignMatrices,
        fit: &FitResult,
        cov: &CovarianceEstimate,
        contrasts: &'a ContrastMatrix,
    ) -> Result<Self> {
        let d = fit.residuals.ncols();
        if contrasts.k() != dm.k() || contrasts.d() != d {
            return Err(Error::Dimension(format!(
                "contrasts built for k = {}, d = {} but data has k = {}, d = {d}",
                contrasts.k(),
                contrasts.d(),
                dm.k()
            )));
        }
        let weights = hc4_weights(dm.leverages())?;
        let diagonal = RobustDiagonal::new(dm, &weights);
        let (scaled_residuals, roots) = match kind {
            BootstrapKind::Wild => {
                let lev = dm.leverages();
                let scaled = DMatrix::from_fn(dm.n(), d, |i, l| fit.residuals[(i, l)] / libm::sqrt(1.0 - lev[i]));
                (scaled, Vec::new())
            }
            BootstrapKind::Parametric => {
                let sigmas = match &cov.group_sigmas {
                    Some(s) => s.clone(),
                    None => groupwise_cov(fit, dm.sizes(), dm.c())?,
                };
                let roots = sigmas
                    .iter()
                    .enumerate()
                    .map(|(group, s)| psd_sqrt(s, PSD_TOL).map_err(|eigenvalue| Error::NotPsd { group, eigenvalue }))
                    .collect::<Result<Vec<_>>>()?;
                (DMatrix::zeros(0, 0), roots)
            }
        };
        Ok(Self { kind, design: dm, contrasts, diagonal, scaled_residuals, roots })
    }

    pub fn kind(&self) -> BootstrapKind {
        self.kind
    }

    fn d(&self) -> usize {
        self.contrasts.d()
    }

    /// Draws one bootstrap response Y° (n × d).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let n = self.design.n();
        let d = self.d();
        match self.kind {
            BootstrapKind::Wild => {
                let mut y = self.scaled_residuals.clone();
                for i in 0..n {
                    // one sign per subject, shared by all d components
                    if rng.random::<bool>() {
                        for l in 0..d {
                            y[(i, l)] = -y[(i, l)];
                        }
                    }
                }
                y
            }
            BootstrapKind::Parametric => {
                let mut y = DMatrix::zeros(n, d);
                let mut u = alloc::vec![0.0; d];
                let mut row = 0;
                for (g, &size) in self.design.sizes().iter().enumerate() {
                    let root = &self.roots[g];
                    for _ in 0..size {
                        for v in u.iter_mut() {
                            *v = rng.sample(StandardNormal);
                        }
                        for l in 0..d {
                            y[(row, l)] = (0..d).map(|m| root[(l, m)] * u[m]).sum();
                        }
                        row += 1;
                    }
                }
                y
            }
        }
    }

    /// Studentized statistics for a bootstrap response; `None` when some
    /// contrast has zero (or non-finite) bootstrap variance.
    pub fn statistics(&self, y_star: &DMatrix<f64>) -> Option<Vec<f64>> {
        let (beta, residuals) = self.design.regress(y_star);
        let diag = self.diagonal.compute(&residuals);
        let d = self.d();
        let sqrt_n = libm::sqrt(self.design.n() as f64);
        let mut out = Vec::with_capacity(self.contrasts.r());
        for h in self.contrasts.rows() {
            let (mut num, mut var) = (0.0, 0.0);
            for (idx, &hv) in h.iter().enumerate() {
                if hv != 0.0 {
                    let (i, l) = (idx / d, idx % d);
                    num += hv * beta[(i, l)];
                    var += hv * hv * diag[(i, l)];
                }
            }
            if !(var > 0.0) || !var.is_finite() {
                return None;
            }
            let a = sqrt_n * num / libm::sqrt(var);
            if !a.is_finite() {
                return None;
            }
            out.push(a);
        }
        Some(out)
    }

    /// One attempt with the given generator.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<Vec<f64>> {
        self.statistics(&self.sample(rng))
    }

    /// Replicate `index` of the stream `seed`. An invalid draw is retried on
    /// the next attempt substream of the same index, up to
    /// `max_redraws` times.
    pub fn replicate(&self, seed: u64, index: usize, max_redraws: usize) -> Result<Replicate> {
        for attempt in 0..=max_redraws {
            let mut rng = substream(seed, self.kind.domain() + ((attempt as u64) << 32), index as u64);
            if let Some(stats) = self.draw(&mut rng) {
                return Ok(Replicate { stats, redraws: attempt });
            }
        }
        Err(Error::DegenerateBootstrap { invalid: max_redraws + 1, replicates: index + 1 })
    }
}

/// One wild bootstrap replicate (convenience wrapper; repeated use should go
/// through a [`Resampler`]).
pub fn wild_replicate<R: Rng + ?Sized>(
    dm: &DesignMatrices,
    fit: &FitResult,
    cov: &CovarianceEstimate,
    contrasts: &ContrastMatrix,
    rng: &mut R,
) -> Result<Option<Vec<f64>>> {
    Ok(Resampler::new(BootstrapKind::Wild, dm, fit, cov, contrasts)?.draw(rng))
}

/// One parametric bootstrap replicate.
pub fn parametric_replicate<R: Rng + ?Sized>(
    dm: &DesignMatrices,
    fit: &FitResult,
    cov: &CovarianceEstimate,
    contrasts: &ContrastMatrix,
    rng: &mut R,
) -> Result<Option<Vec<f64>>> {
    Ok(Resampler::new(BootstrapKind::Parametric, dm, fit, cov, contrasts)?.draw(rng))
}

/// Sequential bootstrap. Parallel drivers must produce identical output by
/// calling [`Resampler::replicate`] per index and [`BootstrapDraws::assemble`].
pub fn run_bootstrap(
    cfg: &BootstrapConfig,
    dm: &DesignMatrices,
    fit: &FitResult,
    cov: &CovarianceEstimate,
    contrasts: &ContrastMatrix,
) -> Result<BootstrapDraws> {
    cfg.validate()?;
    let resampler = Resampler::new(cfg.kind, dm, fit, cov, contrasts)?;
    let rows = (0..cfg.replicates)
        .map(|b| resampler.replicate(cfg.seed, b, cfg.max_redraws()))
        .collect::<Result<Vec<_>>>()?;
    BootstrapDraws::assemble(cfg, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contrasts::two_sample;
    use crate::covariance::sandwich;
    use crate::design::{build_design, fit_ols};
    use crate::Dataset;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture() -> (Dataset, ContrastMatrix) {
        let y = DMatrix::from_fn(12, 2, |i, j| libm::sin((i * 5 + j * 3) as f64) * (1.0 + i as f64 * 0.1));
        let z = DMatrix::from_fn(12, 1, |i, _| libm::cos(i as f64 * 0.7) * 3.0);
        let ds = Dataset::new(vec!["a".into(), "b".into()], vec![5, 7], y, z).unwrap();
        (ds, two_sample(2).unwrap())
    }

    #[test]
    fn zero_residuals_make_wild_replicate_invalid() {
        let y = DMatrix::from_row_slice(6, 1, &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
        let ds = Dataset::new(vec!["a".into(), "b".into()], vec![3, 3], y, DMatrix::zeros(6, 0)).unwrap();
        let dm = build_design(&ds).unwrap();
        let fit = fit_ols(&dm, &ds);
        let cov = sandwich(&dm, &fit, &hc4_weights(dm.leverages()).unwrap());
        let h = two_sample(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(wild_replicate(&dm, &fit, &cov, &h, &mut rng).unwrap(), None);
        let cfg = BootstrapConfig::new(BootstrapKind::Wild, 50, 3);
        assert!(matches!(run_bootstrap(&cfg, &dm, &fit, &cov, &h), Err(Error::DegenerateBootstrap { .. })));
    }

    #[test]
    fn sign_flip_negates_statistics() {
        let (ds, h) = fixture();
        let dm = build_design(&ds).unwrap();
        let fit = fit_ols(&dm, &ds);
        let cov = sandwich(&dm, &fit, &hc4_weights(dm.leverages()).unwrap());
        let rs = Resampler::new(BootstrapKind::Wild, &dm, &fit, &cov, &h).unwrap();
        let y = rs.sample(&mut ChaCha8Rng::seed_from_u64(9));
        let a = rs.statistics(&y).unwrap();
        let b = rs.statistics(&(-y)).unwrap();
        for (x, z) in a.iter().zip(&b) {
            assert!((x + z).abs() < 1e-12);
        }
    }

    #[test]
    fn wild_signs_are_per_subject() {
        let (ds, h) = fixture();
        let dm = build_design(&ds).unwrap();
        let fit = fit_ols(&dm, &ds);
        let cov = sandwich(&dm, &fit, &hc4_weights(dm.leverages()).unwrap());
        let rs = Resampler::new(BootstrapKind::Wild, &dm, &fit, &cov, &h).unwrap();
        let y = rs.sample(&mut ChaCha8Rng::seed_from_u64(4));
        for i in 0..ds.n() {
            let s0 = y[(i, 0)] / rs.scaled_residuals[(i, 0)];
            let s1 = y[(i, 1)] / rs.scaled_residuals[(i, 1)];
            assert!(s0 == s1 && s0.abs() == 1.0);
        }
    }

    #[test]
    fn single_replicate_and_determinism() {
        let (ds, h) = fixture();
        let dm = build_design(&ds).unwrap();
        let fit = fit_ols(&dm, &ds);
        let cov = sandwich(&dm, &fit, &hc4_weights(dm.leverages()).unwrap());
        for kind in [BootstrapKind::Wild, BootstrapKind::Parametric] {
            let one = run_bootstrap(&BootstrapConfig::new(kind, 1, 5), &dm, &fit, &cov, &h).unwrap();
            assert_eq!((one.replicates(), one.contrasts()), (1, 2));
            let cfg = BootstrapConfig::new(kind, 40, 5);
            let a = run_bootstrap(&cfg, &dm, &fit, &cov, &h).unwrap();
            let b = run_bootstrap(&cfg, &dm, &fit, &cov, &h).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.row(0), one.row(0));
            // a row depends only on (seed, index)
            let rs = Resampler::new(kind, &dm, &fit, &cov, &h).unwrap();
            assert_eq!(rs.replicate(5, 17, cfg.max_redraws()).unwrap().stats, a.row(17));
        }
    }

    #[test]
    fn duplicated_contrast_gives_identical_columns() {
        let (ds, h) = fixture();
        let h = h.with_duplicate_row(1);
        let dm = build_design(&ds).unwrap();
        let fit = fit_ols(&dm, &ds);
        let cov = sandwich(&dm, &fit, &hc4_weights(dm.leverages()).unwrap());
        let draws = run_bootstrap(&BootstrapConfig::new(BootstrapKind::Parametric, 30, 1), &dm, &fit, &cov, &h).unwrap();
        assert_eq!(draws.column(1).collect::<Vec<_>>(), draws.column(2).collect::<Vec<_>>());
    }

    #[test]
    fn zero_replicates_rejected() {
        assert!(BootstrapConfig::new(BootstrapKind::Wild, 0, 1).validate().is_err());
    }

    #[test]
    fn kind_parse() {
        assert_eq!("Wild".parse::<BootstrapKind>().unwrap(), BootstrapKind::Wild);
        assert_eq!("parametric".parse::<BootstrapKind>().unwrap(), BootstrapKind::Parametric);
        assert!("pairs".parse::<BootstrapKind>().is_err());
    }
}
