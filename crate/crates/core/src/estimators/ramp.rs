//! Nonlinear least squares for the ramp model.
//!
//! The Newton-Raphson step for Q_N(b) = N^-1 sum (y_i - R(x_i b))^2 collapses to OLS on the
//! observations whose current index lies strictly inside (0, 1), so the primary solver is
//! iterative trimming: refit on the active set until the set stops changing. When the active
//! set empties, loses rank or starts cycling, the search restarts from the OLS estimate with
//! a derivative-free simplex on Q_N itself.

use std::collections::HashSet;

use nalgebra::DVector;

use super::simplex::{nelder_mead, SimplexOptions};
use super::{fit_ols, Coefficients, EstimatorKind, FallbackReason, FitResult, SolverPath};
use crate::dataset::DesignMatrix;
use crate::dist::in_unit_open;
use crate::linalg;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct RampOptions {
    /// Sup-norm tolerance on successive coefficient vectors.
    pub tol: f64,
    pub max_iter: usize,
    /// Starting coefficients; OLS when `None`.
    pub start: Option<Coefficients>,
}

impl Default for RampOptions {
    fn default() -> Self {
        RampOptions {
            tol: 1e-10,
            max_iter: 500,
            start: None,
        }
    }
}

/// Q_N(beta), accumulated region by region.
pub fn nls_objective(design: &DesignMatrix, beta: &[f64]) -> f64 {
    let n = design.n();
    let mut total = 0.0;
    for i in 0..n {
        let z: f64 = (0..beta.len()).map(|j| design.x[(i, j)] * beta[j]).sum();
        let y = design.y[i];
        total += if z <= 0.0 {
            y * y
        } else if z >= 1.0 {
            (y - 1.0) * (y - 1.0)
        } else {
            (y - z) * (y - z)
        };
    }
    total / n as f64
}

/// Gradient of Q_N where it exists: -2 N^-1 sum x_i' (y_i - x_i b) 1{x_i b in (0,1)}.
pub fn nls_gradient(design: &DesignMatrix, beta: &Coefficients) -> DVector<f64> {
    let index = &design.x * beta;
    let mut grad = DVector::zeros(design.k());
    for i in 0..design.n() {
        if in_unit_open(index[i]) {
            let r = design.y[i] - index[i];
            for j in 0..design.k() {
                grad[j] -= 2.0 * design.x[(i, j)] * r;
            }
        }
    }
    grad / design.n() as f64
}

/// Observations whose index x_i b lies strictly inside (0, 1).
pub fn trim_set(design: &DesignMatrix, beta: &Coefficients) -> Vec<usize> {
    let index = &design.x * beta;
    (0..design.n())
        .filter(|&i| in_unit_open(index[i]))
        .collect()
}

fn ols_on(design: &DesignMatrix, keep: &[usize]) -> Result<Coefficients> {
    if keep.is_empty() {
        return Err(Error::EmptyTrimSet);
    }
    let solved = if keep.len() == design.n() {
        linalg::lstsq(&design.x, &design.y)
    } else {
        linalg::lstsq(
            &linalg::select_rows(&design.x, keep),
            &linalg::select_entries(&design.y, keep),
        )
    };
    solved.ok_or(Error::RankDeficientTrimSet { kept: keep.len() })
}

/// One Newton step on Q_N: OLS on the observations with x_i b in (0, 1).
pub fn ito_step(design: &DesignMatrix, beta: &Coefficients) -> Result<Coefficients> {
    ols_on(design, &trim_set(design, beta))
}

fn membership_key(design: &DesignMatrix, beta: &Coefficients) -> (Vec<u64>, Vec<usize>) {
    let keep = trim_set(design, beta);
    let mut bits = vec![0u64; design.n().div_ceil(64)];
    for &i in &keep {
        bits[i / 64] |= 1 << (i % 64);
    }
    (bits, keep)
}

fn sup_diff(a: &Coefficients, b: &Coefficients) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

fn finish(
    design: &DesignMatrix,
    beta: Coefficients,
    iterations: usize,
    converged: bool,
    path: SolverPath,
) -> FitResult {
    let ssr = nls_objective(design, beta.as_slice()) * design.n() as f64;
    FitResult::assemble(
        EstimatorKind::RampNls,
        design,
        beta,
        ssr,
        iterations,
        converged,
        path,
    )
}

/// Ramp-model NLS: iterative trimming from the start value, simplex fallback from OLS.
///
/// A fit that exhausts both solvers comes back with `converged == false`.
pub fn fit_ramp_nls(design: &DesignMatrix, opts: &RampOptions) -> Result<FitResult> {
    let ols = fit_ols(design)?;
    let mut beta = opts.start.clone().unwrap_or_else(|| ols.beta.clone());
    if beta.len() != design.k() {
        return Err(Error::DimensionMismatch {
            expected: design.k(),
            got: beta.len(),
        });
    }

    let (mut key, mut keep) = membership_key(design, &beta);
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    seen.insert(key.clone());
    let mut reason = FallbackReason::MaxIter;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let next = match ols_on(design, &keep) {
            Ok(b) => b,
            Err(Error::EmptyTrimSet) => {
                reason = FallbackReason::EmptyTrimSet;
                break;
            }
            Err(_) => {
                reason = FallbackReason::RankDeficientTrimSet;
                break;
            }
        };
        let (next_key, next_keep) = membership_key(design, &next);
        if next_key == key && sup_diff(&next, &beta) < opts.tol {
            return Ok(finish(
                design,
                next,
                iterations,
                true,
                SolverPath::NewtonTrim,
            ));
        }
        if next_key != key && !seen.insert(next_key.clone()) {
            reason = FallbackReason::Cycle;
            break;
        }
        beta = next;
        key = next_key;
        keep = next_keep;
    }

    log::debug!("ramp NLS trimming stopped ({reason:?}) after {iterations} steps; using simplex");
    let mut fit = simplex_from(design, &ols.beta, iterations);
    fit.fallback = Some(reason);
    Ok(fit)
}

fn simplex_from(design: &DesignMatrix, start: &Coefficients, prior_iterations: usize) -> FitResult {
    let opts = SimplexOptions::for_dim(design.k());
    let res = nelder_mead(|b| nls_objective(design, b), start.as_slice(), &opts);
    let beta = DVector::from_vec(res.x);
    finish(
        design,
        beta,
        prior_iterations + res.iterations,
        res.converged,
        SolverPath::FallbackSimplex,
    )
}

/// Ramp-model NLS by the simplex search alone, started from OLS.
pub fn fit_ramp_nls_simplex(design: &DesignMatrix) -> Result<FitResult> {
    let ols = fit_ols(design)?;
    Ok(simplex_from(design, &ols.beta, 0))
}
