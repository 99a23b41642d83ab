//! Monte Carlo studies over a grid of simulation scenarios.

use std::path::Path;

use mctp_core::simgen::{simulate_run, Alternative, CovarianceScenario, Distribution, SamplePattern, SimScenario};
use mctp_core::{BootstrapKind, ContrastFamily};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::parallel::with_workers;

pub const MIN_RUNS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("invalid study settings: {0}")]
    Settings(String),
    #[error("scenario '{scenario}', run {run}: {source}")]
    Run { scenario: String, run: u64, source: mctp_core::Error },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] crate::io::IoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub runs: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    pub methods: Vec<BootstrapKind>,
    /// 0 uses all cores.
    pub workers: usize,
}

impl StudySettings {
    pub fn new(runs: usize, replicates: usize, alpha: f64, seed: u64) -> Self {
        Self { runs, replicates, alpha, seed, methods: vec![BootstrapKind::Wild, BootstrapKind::Parametric], workers: 0 }
    }

    pub fn validate(&self) -> Result<(), StudyError> {
        if self.runs < MIN_RUNS {
            return Err(StudyError::Settings(format!("runs = {} (at least {MIN_RUNS} required)", self.runs)));
        }
        if self.replicates == 0 {
            return Err(StudyError::Settings("B must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(StudyError::Settings(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(StudyError::Settings("no bootstrap method selected".into()));
        }
        Ok(())
    }
}

/// Global rejection rate of one method in one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub scenario: SimScenario,
    pub method: BootstrapKind,
    pub rejections: usize,
    pub runs: usize,
    pub replicates: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Runs in which some entry of D̂ was not finite.
    pub nonfinite_runs: usize,
}

impl StudyResult {
    /// Rejection rate in percent: the empirical FWER under the null, the
    /// power otherwise.
    pub fn rate(&self) -> f64 {
        100.0 * self.rejections as f64 / self.runs as f64
    }

    /// Monte Carlo standard error of [`rate`](Self::rate), in percent.
    pub fn standard_error(&self) -> f64 {
        let p = self.rejections as f64 / self.runs as f64;
        100.0 * (p * (1.0 - p) / self.runs as f64).sqrt()
    }

    /// Exact (Clopper–Pearson) interval for the rate, in percent.
    pub fn interval(&self, level: f64) -> (f64, f64) {
        let (lo, hi) = clopper_pearson(self.rejections, self.runs, level);
        (100.0 * lo, 100.0 * hi)
    }
}

/// Exact binomial confidence interval for `x` successes in `n` trials.
pub fn clopper_pearson(x: usize, n: usize, level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    let (xf, nf) = (x as f64, n as f64);
    let lower = if x == 0 { 0.0 } else { Beta::new(xf, nf - xf + 1.0).unwrap().inverse_cdf(tail) };
    let upper = if x == n { 1.0 } else { Beta::new(xf + 1.0, nf - xf).unwrap().inverse_cdf(1.0 - tail) };
    (lower, upper)
}

/// Runs every scenario with the same master seed, so scenarios that differ
/// only in δ share their random numbers. Runs are executed in parallel.
pub fn run_study(scenarios: &[SimScenario], settings: &StudySettings) -> Result<Vec<StudyResult>, StudyError> {
    settings.validate()?;
    let mut out = Vec::with_capacity(scenarios.len() * settings.methods.len());
    for scenario in scenarios {
        scenario.validate().map_err(|e| StudyError::Settings(format!("{}: {e}", scenario.describe())))?;
        let outcomes = with_workers(settings.workers, || {
            (0..settings.runs as u64)
                .into_par_iter()
                .map(|run| {
                    simulate_run(scenario, &settings.methods, settings.replicates, settings.alpha, settings.seed, run)
                        .map_err(|source| StudyError::Run { scenario: scenario.describe(), run, source })
                })
                .collect::<Result<Vec<_>, _>>()
        })?;
        let nonfinite_runs = outcomes.iter().filter(|o| !o.diagonal_finite).count();
        for (m, &method) in settings.methods.iter().enumerate() {
            out.push(StudyResult {
                scenario: scenario.clone(),
                method,
                rejections: outcomes.iter().filter(|o| o.rejections[m]).count(),
                runs: settings.runs,
                replicates: settings.replicates,
                alpha: settings.alpha,
                seed: settings.seed,
                nonfinite_runs,
            });
        }
    }
    Ok(out)
}

/// One scenario block of a grid file. `delta` and `deltas` are mutually
/// exclusive; `deltas` expands into one scenario per value.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default = "default_family")]
    pub family: String,
    pub k: usize,
    pub d: usize,
    #[serde(default = "default_distribution")]
    pub distribution: String,
    #[serde(default = "default_covariance")]
    pub covariance: String,
    #[serde(default = "default_pattern")]
    pub pattern: String,
    #[serde(default = "default_multiplier")]
    pub multiplier: usize,
    #[serde(default = "default_alternative")]
    pub alternative: String,
    pub delta: Option<f64>,
    pub deltas: Option<Vec<f64>>,
}

fn default_family() -> String {
    "dunnett".into()
}
fn default_distribution() -> String {
    "N".into()
}
fn default_covariance() -> String {
    "homoscedastic".into()
}
fn default_pattern() -> String {
    "n1".into()
}
fn default_multiplier() -> usize {
    1
}
fn default_alternative() -> String {
    "null".into()
}

/// Scenario grid file (TOML).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyGrid {
    pub runs: Option<usize>,
    #[serde(alias = "B")]
    pub replicates: Option<usize>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub scenario: Vec<ScenarioSpec>,
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T, StudyError>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| StudyError::Config(e.to_string()))
}

impl ScenarioSpec {
    pub fn expand(&self) -> Result<Vec<SimScenario>, StudyError> {
        let alternative: Alternative = parse(&self.alternative)?;
        let base = SimScenario::null(
            self.k,
            self.d,
            parse::<Distribution>(&self.distribution)?,
            parse::<CovarianceScenario>(&self.covariance)?,
            parse::<SamplePattern>(&self.pattern)?,
            self.multiplier,
        )
        .with_family(parse::<ContrastFamily>(&self.family)?);
        let deltas = match (&self.delta, &self.deltas) {
            (Some(_), Some(_)) => return Err(StudyError::Config("give either delta or deltas, not both".into())),
            (Some(d), None) => vec![*d],
            (None, Some(ds)) => ds.clone(),
            (None, None) => vec![0.0],
        };
        deltas
            .into_iter()
            .map(|delta| {
                let sc = base.clone().with_alternative(alternative, delta);
                sc.validate().map_err(|e| StudyError::Config(e.to_string()))?;
                Ok(sc)
            })
            .collect()
    }
}

impl StudyGrid {
    pub fn from_toml(text: &str) -> Result<Self, StudyError> {
        toml::from_str(text).map_err(|e| StudyError::Config(format!("scenario grid: {e}")))
    }

    pub fn scenarios(&self) -> Result<Vec<SimScenario>, StudyError> {
        if self.scenario.is_empty() {
            return Err(StudyError::Config("scenario grid has no [[scenario]] entries".into()));
        }
        let mut out = Vec::new();
        for spec in &self.scenario {
            out.extend(spec.expand()?);
        }
        Ok(out)
    }

    /// Settings from the file, falling back to `defaults` for absent keys.
    pub fn settings(&self, defaults: &StudySettings) -> Result<StudySettings, StudyError> {
        let methods = match &self.methods {
            Some(m) => m.iter().map(|s| parse::<BootstrapKind>(s)).collect::<Result<Vec<_>, _>>()?,
            None => defaults.methods.clone(),
        };
        Ok(StudySettings {
            runs: self.runs.unwrap_or(defaults.runs),
            replicates: self.replicates.unwrap_or(defaults.replicates),
            alpha: self.alpha.unwrap_or(defaults.alpha),
            seed: self.seed.unwrap_or(defaults.seed),
            methods,
            workers: self.workers.unwrap_or(defaults.workers),
        })
    }
}

#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    family: String,
    k: usize,
    d: usize,
    distribution: &'a str,
    covariance: &'a str,
    pattern: &'a str,
    multiplier: usize,
    sizes: String,
    alternative: &'a str,
    delta: f64,
    method: &'a str,
    rate_pct: f64,
    ci_lower_pct: f64,
    ci_upper_pct: f64,
    rejections: usize,
    runs: usize,
    #[serde(rename = "B")]
    replicates: usize,
    alpha: f64,
    seed: u64,
    nonfinite_runs: usize,
}

/// CSV with one row per scenario and method; rates and 95% Clopper–Pearson
/// limits in percent.
pub fn write_study_csv<W: std::io::Write>(writer: W, results: &[StudyResult]) -> Result<(), StudyError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in results {
        let s = &r.scenario;
        let (lo, hi) = r.interval(0.95);
        let sizes: Vec<String> = s.sizes().iter().map(|n| n.to_string()).collect();
        w.serialize(CsvRow {
            family: s.family.to_string(),
            k: s.k,
            d: s.d,
            distribution: s.distribution.name(),
            covariance: s.covariance.name(),
            pattern: s.pattern.name(),
            multiplier: s.multiplier,
            sizes: sizes.join(" "),
            alternative: s.alternative.name(),
            delta: s.delta,
            method: r.method.name(),
            rate_pct: r.rate(),
            ci_lower_pct: lo,
            ci_upper_pct: hi,
            rejections: r.rejections,
            runs: r.runs,
            replicates: r.replicates,
            alpha: r.alpha,
            seed: r.seed,
            nonfinite_runs: r.nonfinite_runs,
        })
        .map_err(crate::io::IoError::from)?;
    }
    w.flush().map_err(crate::io::IoError::from)?;
    Ok(())
}

pub fn write_study_file(path: &Path, results: &[StudyResult]) -> Result<(), StudyError> {
    let file = std::fs::File::create(path)
        .map_err(|source| crate::io::IoError::Open { path: path.to_path_buf(), source })?;
    write_study_csv(file, results)
}
