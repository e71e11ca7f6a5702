//! Cascading-blackout risk estimation under spatially correlated branch
//! outages.
//!
//! The crate discovers minimal blackout-causing branch sets ("malignancies")
//! with Random Chemistry sampling over a DC quasi-steady-state cascade
//! simulator, bounds the number of N-3 malignancies from campaign data, and
//! prices each malignancy with a Gaussian-copula joint outage probability in
//! which correlation decays with inter-branch distance.
//!
//! Module map:
//!
//! * [`grid`]: case model, JSON and MATPOWER import, load scaling
//! * [`powerflow`]: island detection and DC power flow
//! * [`cascade`]: cascade simulator and blackout test
//! * [`rc`]: Random Chemistry trials, campaigns, ledgers, brute-force scans
//! * [`geometry`]: inter-branch distance
//! * [`copula`]: marginal calibration, correlation model, orthant probabilities
//! * [`estimate`]: Chao and RCP bounds on the N-3 set size
//! * [`risk`]: risk terms, per-k scaling, correlation grids, load sweeps
//! * [`analysis`]: figure datasets (accumulation, pair frequency, distributions)

// `!(x >= 0.0)` guards deliberately reject NaN; index loops mirror the maths.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cascade;
pub mod cases;
pub mod cli;
pub mod copula;
pub mod error;
pub mod estimate;
pub mod geometry;
pub mod grid;
pub mod manifest;
pub mod powerflow;
pub mod rc;
pub mod risk;

pub use error::{Error, Result};
