//! Bootstrap multiple contrast test procedures (MCTPs) for covariate-adjusted
//! means in a semiparametric MANCOVA model.
//!
//! The model is `Y_ij = mu_i + (z_ij' ⊗ I_d) nu + eps_ij` for subject `j` of
//! group `i`, with `d` outcomes and `c` covariates shared by all groups. Group
//! covariances may differ and may be singular. Inference on a family of
//! contrasts `h_s' mu` uses studentized statistics with a leverage-adjusted
//! (HC4) sandwich variance, a wild or parametric bootstrap of their joint
//! distribution, and a single adjusted local level `gamma` chosen so that the
//! bootstrap estimate of the family-wise error rate stays below `alpha`.
//!
//! This crate is `no_std` and only needs `alloc`. Parallel execution, file
//! formats and the command line live in the `mctp` crate; everything here is
//! sequential and deterministic given a seed.
//!
//! ```
//! use mctp_core::{contrasts, mctp, simgen, BootstrapConfig, BootstrapKind};
//! use rand::SeedableRng;
//!
//! let scenario = simgen::SimScenario::null(3, 2, simgen::Distribution::Normal,
//!     simgen::CovarianceScenario::Homoscedastic, simgen::SamplePattern::Balanced, 1);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let ds = simgen::gen_dataset(&scenario, &mut rng).unwrap();
//! let h = contrasts::dunnett(3, 2).unwrap();
//! let cfg = BootstrapConfig::new(BootstrapKind::Wild, 200, 42);
//! let res = mctp::run_mctp(&ds, &h, &cfg, 0.05).unwrap();
//! assert!(res.global_reject == (res.global_p <= res.gamma));
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bootstrap;
pub mod contrasts;
pub mod covariance;
pub mod dataset;
pub mod design;
mod error;
pub mod linalg;
pub mod mctp;
pub mod rng;
pub mod simgen;

pub use bootstrap::{BootstrapConfig, BootstrapDraws, BootstrapKind};
pub use contrasts::{ContrastFamily, ContrastMatrix};
pub use covariance::CovarianceEstimate;
pub use dataset::{Dataset, ValidationReport};
pub use design::{DesignMatrices, FitResult};
pub use error::{Error, Result};
pub use mctp::{ContrastResult, MctpResult};
