//! File formats, parallel drivers, simulation studies and the `mctp`
//! command line on top of [`mctp_core`].

pub mod config;
pub mod io;
pub mod parallel;
pub mod report;
pub mod study;

pub use mctp_core;
