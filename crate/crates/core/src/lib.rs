//! Simulation and asymptotic theory for A/B tests that sell from one shared,
//! finite inventory of a popular good.
//!
//! Sales are modelled as a two-dimensional random walk `(S_k, T_k)` of
//! cumulative good-1 and good-2 purchases living in the strip
//! `N_0 x [0, c_n]`. Once the popular good (good 2) is sold out the walk moves
//! horizontally only, and both website variants behave identically. The
//! crate provides
//!
//! * [`model`]: scenarios and their exact derived moments,
//! * [`simulate`]: the walk itself, step by step or with aggregated segments,
//! * [`stattest`]: the two-sample chi-squared test and its distribution functions,
//! * [`asymptotics`]: limit laws, covariance matrices and Gaussian-limit Monte Carlo,
//! * [`summary`]: batch summaries and theory comparisons,
//! * [`scenarios`]: built-in parameter sets.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod alias;
pub mod asymptotics;
mod error;
pub mod linalg;
mod math;
pub mod model;
pub mod rng;
pub mod scenarios;
pub mod simulate;
pub mod stattest;
pub mod summary;

pub use error::{Error, Result};
pub use model::{
    derive_moments, validate_scenario, Atom, DerivedMoments, InventorySchedule, OfferDistribution,
    Scenario, Violation,
};
pub use simulate::{run_separate, run_shared, Engine, SimRecord, StoppingTime};
