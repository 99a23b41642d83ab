//! Data-generation process of the simulation study:
//! `Y_i = μ_i + Z_i ν + ε_i` with `ε_ij = Σ_i^{1/2} x_ij` and standardized
//! i.i.d. entries `x_ijl`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution as _, Exp1, StandardNormal, StudentT};

use crate::bootstrap::{BootstrapConfig, BootstrapKind, Resampler};
use crate::contrasts::ContrastFamily;
use crate::linalg::psd_sqrt;
use crate::mctp::Analysis;
use crate::rng::{child_seed, domain, substream};
use crate::{BootstrapDraws, Dataset, Error, Result};

/// Number of covariates in every simulated dataset.
pub const COVARIATES: usize = 2;
/// Attempts at drawing acceptable covariates before giving up.
pub const COVARIATE_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distribution {
    Normal,
    /// t with 3 degrees of freedom.
    T3,
    /// χ² with 3 degrees of freedom.
    ChiSquared3,
    LogNormal,
    /// Double exponential (Laplace).
    DoubleExp,
}

impl Distribution {
    pub const ALL: [Distribution; 5] = [Self::Normal, Self::T3, Self::ChiSquared3, Self::LogNormal, Self::DoubleExp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Normal => "N",
            Self::T3 => "t3",
            Self::ChiSquared3 => "chi2_3",
            Self::LogNormal => "LN",
            Self::DoubleExp => "DExp",
        }
    }

    /// One draw with mean 0 and variance 1.
    pub fn sample_standardized<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::Normal => rng.sample(StandardNormal),
            Self::T3 => StudentT::new(3.0).unwrap().sample(rng) / libm::sqrt(3.0),
            Self::ChiSquared3 => (ChiSquared::new(3.0).unwrap().sample(rng) - 3.0) / libm::sqrt(6.0),
            Self::LogNormal => {
                let z: f64 = rng.sample(StandardNormal);
                let e = core::f64::consts::E;
                (libm::exp(z) - libm::sqrt(e)) / libm::sqrt(e * e - e)
            }
            Self::DoubleExp => {
                let x: f64 = rng.sample(Exp1);
                let signed = if rng.random::<bool>() { x } else { -x };
                signed / core::f64::consts::SQRT_2
            }
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "n" | "normal" => Ok(Self::Normal),
            "t3" => Ok(Self::T3),
            "chi2_3" | "chi2" | "chisq3" => Ok(Self::ChiSquared3),
            "ln" | "lognormal" => Ok(Self::LogNormal),
            "dexp" | "doubleexp" | "laplace" => Ok(Self::DoubleExp),
            other => Err(Error::InvalidArgument(format!("unknown error distribution '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CovarianceScenario {
    /// Σ_i = I_d + 0.5 (J_d − I_d) for all groups.
    Homoscedastic,
    /// As homoscedastic, but the last group has 2 I_d + 0.5 (J_d − I_d).
    Heteroscedastic,
    /// Fixed rank-deficient matrices for d ∈ {2, 3, 4}.
    Singular,
}

impl CovarianceScenario {
    pub fn name(self) -> &'static str {
        match self {
            Self::Homoscedastic => "homoscedastic",
            Self::Heteroscedastic => "heteroscedastic",
            Self::Singular => "singular",
        }
    }
}

impl fmt::Display for CovarianceScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for CovarianceScenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "homoscedastic" => Ok(Self::Homoscedastic),
            "2" | "heteroscedastic" => Ok(Self::Heteroscedastic),
            "3" | "singular" => Ok(Self::Singular),
            other => Err(Error::InvalidArgument(format!("unknown covariance scenario '{other}'"))),
        }
    }
}

/// Base group-size patterns, multiplied by K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplePattern {
    /// (10, …, 10)
    Balanced,
    /// (20, 10, …, 10)
    FirstLarge,
    /// (10, …, 10, 20)
    LastLarge,
}

impl SamplePattern {
    pub fn name(self) -> &'static str {
        match self {
            Self::Balanced => "n1",
            Self::FirstLarge => "n2",
            Self::LastLarge => "n3",
        }
    }

    pub fn sizes(self, k: usize, multiplier: usize) -> Vec<usize> {
        (0..k)
            .map(|i| {
                let base = match self {
                    Self::FirstLarge if i == 0 => 20,
                    Self::LastLarge if i + 1 == k => 20,
                    _ => 10,
                };
                base * multiplier
            })
            .collect()
    }
}

impl core::str::FromStr for SamplePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "n1" | "balanced" => Ok(Self::Balanced),
            "2" | "n2" | "first-large" => Ok(Self::FirstLarge),
            "3" | "n3" | "last-large" => Ok(Self::LastLarge),
            other => Err(Error::InvalidArgument(format!("unknown sample pattern '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alternative {
    Null,
    /// μ_k = δ·1_d
    Shift,
    /// μ_k = (δ, 0, …, 0)
    OnePoint,
    /// μ_k = (δ, δ/2, …, δ/d)
    Trend,
}

impl Alternative {
    pub fn name(self) -> &'static str {
        match self {
            Self::Null => "null",
            Self::Shift => "shift",
            Self::OnePoint => "one-point",
            Self::Trend => "trend",
        }
    }

    /// Mean vector of the last group; all other groups have mean zero.
    pub fn last_group_mean(self, delta: f64, d: usize) -> Vec<f64> {
        (0..d)
            .map(|l| match self {
                Self::Null => 0.0,
                Self::Shift => delta,
                Self::OnePoint if l == 0 => delta,
                Self::OnePoint => 0.0,
                Self::Trend => delta / (l + 1) as f64,
            })
            .collect()
    }
}

impl core::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "null" => Ok(Self::Null),
            "shift" => Ok(Self::Shift),
            "one-point" | "onepoint" => Ok(Self::OnePoint),
            "trend" => Ok(Self::Trend),
            other => Err(Error::InvalidArgument(format!("unknown alternative '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub k: usize,
    pub d: usize,
    pub distribution: Distribution,
    pub covariance: CovarianceScenario,
    pub pattern: SamplePattern,
    pub multiplier: usize,
    pub family: ContrastFamily,
    pub alternative: Alternative,
    pub delta: f64,
}

impl SimScenario {
    /// Global-null scenario with Dunnett contrasts.
    pub fn null(
        k: usize,
        d: usize,
        distribution: Distribution,
        covariance: CovarianceScenario,
        pattern: SamplePattern,
        multiplier: usize,
    ) -> Self {
        Self {
            k,
            d,
            distribution,
            covariance,
            pattern,
            multiplier,
            family: ContrastFamily::Dunnett,
            alternative: Alternative::Null,
            delta: 0.0,
        }
    }

    pub fn with_alternative(mut self, alternative: Alternative, delta: f64) -> Self {
        self.alternative = alternative;
        self.delta = delta;
        self
    }

    pub fn with_family(mut self, family: ContrastFamily) -> Self {
        self.family = family;
        self
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.pattern.sizes(self.k, self.multiplier)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.d < 1 || self.multiplier < 1 {
            return Err(Error::UnsupportedScenario(format!(
                "k = {}, d = {}, K = {} (need k >= 2, d >= 1, K >= 1)",
                self.k, self.d, self.multiplier
            )));
        }
        if self.covariance == CovarianceScenario::Singular && !(2..=4).contains(&self.d) {
            return Err(Error::UnsupportedScenario(format!("singular covariance needs d in 2..=4, got {}", self.d)));
        }
        if self.family == ContrastFamily::Custom || (self.family == ContrastFamily::TwoSample && self.k != 2) {
            return Err(Error::UnsupportedScenario(format!("{} contrasts with k = {}", self.family, self.k)));
        }
        if !(self.delta >= 0.0) || ((self.delta == 0.0) != (self.alternative == Alternative::Null)) {
            return Err(Error::UnsupportedScenario(format!(
                "alternative {} with delta {} (delta = 0 exactly for the null)",
                self.alternative.name(),
                self.delta
            )));
        }
        Ok(())
    }

    /// Short descriptor such as `dunnett k=3 d=2 N homoscedastic n1 K=1 null 0`.
    pub fn describe(&self) -> String {
        format!(
            "{} k={} d={} {} {} {} K={} {} {}",
            self.family,
            self.k,
            self.d,
            self.distribution,
            self.covariance,
            self.pattern.name(),
            self.multiplier,
            self.alternative.name(),
            self.delta
        )
    }
}

/// n × d matrix of i.i.d. standardized errors.
pub fn standardized_errors<R: Rng + ?Sized>(distribution: Distribution, n: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, d);
    for i in 0..n {
        for l in 0..d {
            x[(i, l)] = distribution.sample_standardized(rng);
        }
    }
    x
}

/// Regression coefficients ν (c × d): rows (−0.5, 1, …, 1, −1) and
/// (1.5, 2, …, 2, 3). For d = 1 only the first entries are used.
pub fn regression_coefficients(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(COVARIATES, d, |m, l| {
        let first = l == 0;
        let last = l + 1 == d && d > 1;
        match (m, first, last) {
            (0, true, _) => -0.5,
            (0, _, true) => -1.0,
            (0, _, _) => 1.0,
            (_, true, _) => 1.5,
            (_, _, true) => 3.0,
            _ => 2.0,
        }
    })
}

fn compound_symmetric(d: usize, diagonal: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |a, b| if a == b { diagonal } else { 0.5 })
}

fn singular_matrix(d: usize) -> Option<DMatrix<f64>> {
    match d {
        2 => Some(DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.25])),
        3 => Some(DMatrix::from_row_slice(3, 3, &[6.0, 3.0, 3.0, 3.0, 2.0, 3.0, 3.0, 3.0, 6.0])),
        4 => Some(DMatrix::from_row_slice(
            4,
            4,
            &[6.0, 3.0, 3.0, 3.0, 3.0, 6.0, 3.0, 3.0, 3.0, 3.0, 2.5, 3.0, 3.0, 3.0, 3.0, 6.0],
        )),
        _ => None,
    }
}

/// Group covariances Σ_i and their symmetric square roots.
pub fn scenario_sigma(covariance: CovarianceScenario, d: usize, k: usize) -> Result<Vec<(DMatrix<f64>, DMatrix<f64>)>> {
    if d == 0 || k == 0 {
        return Err(Error::UnsupportedScenario(format!("k = {k}, d = {d}")));
    }
    let sigmas: Vec<DMatrix<f64>> = match covariance {
        CovarianceScenario::Homoscedastic => (0..k).map(|_| compound_symmetric(d, 1.0)).collect(),
        CovarianceScenario::Heteroscedastic => {
            (0..k).map(|i| compound_symmetric(d, if i + 1 == k { 2.0 } else { 1.0 })).collect()
        }
        CovarianceScenario::Singular => {
            let s = singular_matrix(d)
                .ok_or_else(|| Error::UnsupportedScenario(format!("singular covariance needs d in 2..=4, got {d}")))?;
            (0..k).map(|_| s.clone()).collect()
        }
    };
    sigmas
        .into_iter()
        .enumerate()
        .map(|(group, s)| {
            let root = psd_sqrt(&s, 1e-12).map_err(|eigenvalue| Error::NotPsd { group, eigenvalue })?;
            Ok((s, root))
        })
        .collect()
}

const COL1_SD: f64 = 5.773_502_691_896_258; // 20 / √12
const COL2_SD: f64 = 2.254_624_876_604_879; // √(16/3 − 1/4), equal-weight mixture of U(0,5) and U(−2,−1)

fn sample_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    libm::sqrt(v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / libm::sqrt(va * vb)
}

/// Dispersion acceptance rule for a group's covariates: each column's sample
/// standard deviation is at least a quarter of its theoretical value and the
/// two columns have |correlation| ≤ 0.9.
pub fn covariates_acceptable(col1: &[f64], col2: &[f64]) -> bool {
    if col1.len() < 2 {
        return false;
    }
    sample_sd(col1) >= 0.25 * COL1_SD && sample_sd(col2) >= 0.25 * COL2_SD && correlation(col1, col2).abs() <= 0.9
}

/// Covariates for one group (n_i × 2): column 1 ~ U(−10, 10); column 2 has
/// its first ⌈n_i/2⌉ entries from U(0, 5) and the rest from U(−2, −1).
/// Redrawn until [`covariates_acceptable`] holds.
pub fn gen_covariates<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let first_half = n.div_ceil(2);
    for _ in 0..COVARIATE_ATTEMPTS {
        let col1: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let col2: Vec<f64> = (0..n)
            .map(|j| if j < first_half { rng.random_range(0.0..5.0) } else { rng.random_range(-2.0..-1.0) })
            .collect();
        if covariates_acceptable(&col1, &col2) {
            return Ok(DMatrix::from_fn(n, COVARIATES, |j, m| if m == 0 { col1[j] } else { col2[j] }));
        }
    }
    Err(Error::CovariateAcceptance(COVARIATE_ATTEMPTS))
}

pub fn gen_dataset<R: Rng + ?Sized>(scenario: &SimScenario, rng: &mut R) -> Result<Dataset> {
    scenario.validate()?;
    let (k, d) = (scenario.k, scenario.d);
    let sizes = scenario.sizes();
    let n: usize = sizes.iter().sum();
    let roots = scenario_sigma(scenario.covariance, d, k)?;
    let nu = regression_coefficients(d);
    let last_mean = scenario.alternative.last_group_mean(scenario.delta, d);

    let mut y = DMatrix::zeros(n, d);
    let mut z = DMatrix::zeros(n, COVARIATES);
    let mut start = 0;
    for (i, &size) in sizes.iter().enumerate() {
        let zi = gen_covariates(size, rng)?;
        let x = standardized_errors(scenario.distribution, size, d, rng);
        let eps = x * &roots[i].1;
        let fitted = &zi * &nu;
        for j in 0..size {
            for l in 0..d {
                let mu = if i + 1 == k { last_mean[l] } else { 0.0 };
                y[(start + j, l)] = mu + fitted[(j, l)] + eps[(j, l)];
            }
        }
        z.rows_mut(start, size).copy_from(&zi);
        start += size;
    }
    let groups = (1..=k).map(|i| i.to_string()).collect();
    Dataset::new(groups, sizes, y, z)
}

/// Result of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// Global rejection per requested bootstrap kind, in order.
    pub rejections: Vec<bool>,
    /// Whether every entry of D̂ was finite.
    pub diagonal_finite: bool,
}

/// Generates run `run` of a study and applies the MCTP for each bootstrap
/// kind. The dataset and every bootstrap stream depend only on
/// `(seed, run)`.
pub fn simulate_run(
    scenario: &SimScenario,
    kinds: &[BootstrapKind],
    replicates: usize,
    alpha: f64,
    seed: u64,
    run: u64,
) -> Result<RunOutcome> {
    let mut rng = substream(seed, domain::SIM_DATA, run);
    let ds = gen_dataset(scenario, &mut rng)?;
    let contrasts = scenario.family.build(scenario.k, scenario.d)?;
    let analysis = Analysis::prepare(&ds, &contrasts)?;
    let diagonal_finite = analysis.covariance.diag.iter().all(|v| v.is_finite());
    let boot_seed = child_seed(seed, domain::SIM_BOOT, run);
    let mut rejections = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let cfg = BootstrapConfig::new(kind, replicates, boot_seed);
        let resampler = Resampler::new(kind, &analysis.design, &analysis.fit, &analysis.covariance, &contrasts)?;
        let rows = (0..replicates)
            .map(|b| resampler.replicate(boot_seed, b, cfg.max_redraws()))
            .collect::<Result<Vec<_>>>()?;
        let draws = BootstrapDraws::assemble(&cfg, rows)?;
        rejections.push(analysis.conclude(&contrasts, &draws, alpha)?.global_reject);
    }
    Ok(RunOutcome { rejections, diagonal_finite })
}
