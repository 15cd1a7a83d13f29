//! Binary-response estimation with the linear probability model, ramp-model nonlinear least
//! squares, and probit/logit quasi-MLE, together with average partial effects, robust
//! standard errors and a Monte Carlo harness comparing the four.

pub mod cli;
pub mod dataset;
pub mod dist;
mod error;
pub mod estimators;
pub mod inference;
pub mod linalg;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
