//! Robust covariances, average partial effects and their standard errors.

mod ape;
mod bootstrap;
mod sandwich;

pub use ape::{
    ape_auto, ape_chain, ape_continuous, ape_discrete, ape_se, with_se, ApeEstimate, ApeKind,
};
pub use bootstrap::{
    bootstrap_ape_se, bootstrap_ape_se_with, bootstrap_design_ape_se, BootstrapSe,
};
pub use sandwich::{
    attach_vcov, sandwich, scores, vcov_ols_robust, vcov_qmle_sandwich, vcov_ramp_sandwich,
    SandwichParts, ScoreMatrix, PROB_CLAMP,
};
