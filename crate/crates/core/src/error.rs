use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("k >= 2 required, got {0} group(s)")]
    TooFewGroups(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("group {0} is empty")]
    EmptyGroup(String),
    #[error("non-finite value in {what} at row {row}, column {col}")]
    NonFinite { what: &'static str, row: usize, col: usize },
    #[error("rank deficiency: design [group indicators | Z] has rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("dataset not admissible: {0}")]
    Inadmissible(String),
    #[error("Gram matrix is numerically singular")]
    SingularGram,
    #[error("leverage at/above one for subject {subject} (p = {leverage})")]
    LeverageAtOne { subject: usize, leverage: f64 },
    #[error("parametric bootstrap divisor nonpositive in group {group}: n_i = {size}, c = {covariates}")]
    NonpositiveDivisor { group: usize, size: usize, covariates: usize },
    #[error("group covariance not PSD in group {group} (eigenvalue {eigenvalue:e})")]
    NotPsd { group: usize, eigenvalue: f64 },
    #[error("contrast matrix is empty")]
    EmptyContrasts,
    #[error("contrast row {} is not a contrast (row sum {sum:e})", .row + 1)]
    NotAContrast { row: usize, sum: f64 },
    #[error("contrast row {} is all zeros", .0 + 1)]
    ZeroContrast(usize),
    #[error("{family} contrasts require {requirement}")]
    ContrastFamily { family: &'static str, requirement: String },
    #[error("zero variance for contrast '{0}'")]
    ZeroVariance(String),
    #[error("degenerate bootstrap distribution: {invalid} invalid replicates for B = {replicates}")]
    DegenerateBootstrap { invalid: usize, replicates: usize },
    #[error("level {0} is not on the grid {{0, 1/B, ..., (B-1)/B}}")]
    OffGrid(f64),
    #[error("unsupported scenario: {0}")]
    UnsupportedScenario(String),
    #[error("covariate acceptance condition not met after {0} attempts")]
    CovariateAcceptance(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
