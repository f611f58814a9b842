//! Monte Carlo first-passage-time default densities, cumulative default rates
//! and pairwise default correlations for correlated jump-diffusion firm values.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod bridge;
pub mod calibrate;
pub mod cli;
pub mod error;
pub mod estimate;
mod exec;
pub mod model;
pub mod stochastic;
pub mod unif;

pub use error::{Error, Result};
pub use model::{DiffusionMatrix, FirmSpec, PortfolioSpec};
pub use unif::{simulate, simulate_with_workers, Engine, SampleSet};
