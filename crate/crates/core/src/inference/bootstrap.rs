//! Nonparametric bootstrap of APE standard errors.

use rayon::prelude::*;

use super::ape::ape_auto;
use crate::dataset::{build_design, Dataset, DesignMatrix, DesignSpec};
use crate::estimators::{fit, EstimatorKind};
use crate::linalg::KahanSum;
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct BootstrapSe {
    /// Sample sd (n - 1 denominator) of the successful replications.
    pub se: f64,
    /// APE per successful replication, in replication order.
    pub estimates: Vec<f64>,
    pub failed: usize,
}

fn one_rep(
    design: &DesignMatrix,
    kind: EstimatorKind,
    variable: &str,
    rows: &[usize],
) -> Result<f64> {
    let d = design.resample(rows)?;
    let f = fit(&d, kind)?.ensure_converged()?;
    Ok(ape_auto(&d, &f, variable)?.estimate)
}

/// Bootstrap with caller-chosen resamples; `resampler(r)` gives the rows of replication r.
pub fn bootstrap_ape_se_with<F>(
    design: &DesignMatrix,
    kind: EstimatorKind,
    variable: &str,
    reps: usize,
    resampler: F,
) -> Result<BootstrapSe>
where
    F: Fn(usize) -> Vec<usize> + Sync,
{
    if reps < 2 {
        return Err(Error::InvalidInput(format!(
            "bootstrap needs at least 2 replications (got {reps})"
        )));
    }
    design.index_of(variable)?;
    let results: Vec<Result<f64>> = (0..reps)
        .into_par_iter()
        .map(|r| one_rep(design, kind, variable, &resampler(r)))
        .collect();
    let estimates: Vec<f64> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    let failed = reps - estimates.len();
    if failed * 10 > reps || estimates.len() < 2 {
        return Err(Error::TooManyFailures {
            estimator: kind.key(),
            failed,
            total: reps,
        });
    }
    if failed > 0 {
        log::warn!("{failed} of {reps} bootstrap replications failed for {kind}");
    }
    let m = estimates.len() as f64;
    let mean = estimates.iter().copied().collect::<KahanSum>().total() / m;
    let ss = estimates
        .iter()
        .map(|e| (e - mean).powi(2))
        .collect::<KahanSum>()
        .total();
    Ok(BootstrapSe {
        se: (ss / (m - 1.0)).sqrt(),
        estimates,
        failed,
    })
}

/// Bootstrap over the rows of an existing design; replication r draws from stream (seed, r).
pub fn bootstrap_design_ape_se(
    design: &DesignMatrix,
    kind: EstimatorKind,
    variable: &str,
    reps: usize,
    seed: u64,
) -> Result<BootstrapSe> {
    let n = design.n();
    bootstrap_ape_se_with(design, kind, variable, reps, |r| {
        let mut s = Stream::new(seed, r as u64);
        (0..n).map(|_| s.below(n)).collect()
    })
}

/// Bootstrap SE of the APE of `variable` for the model `spec` on `data`.
pub fn bootstrap_ape_se(
    data: &Dataset,
    spec: &DesignSpec,
    kind: EstimatorKind,
    variable: &str,
    reps: usize,
    seed: u64,
) -> Result<BootstrapSe> {
    let design = build_design(data, spec)?;
    bootstrap_design_ape_se(&design, kind, variable, reps, seed)
}
