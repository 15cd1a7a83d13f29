//! The four binary-response estimators and their shared result type.

mod ols;
mod qmle;
mod ramp;
mod simplex;

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dataset::DesignMatrix;
use crate::dist;
use crate::{Error, Result};

pub use ols::fit_ols;
pub use qmle::{fit_logit, fit_probit, QmleOptions};
pub use ramp::{
    fit_ramp_nls, fit_ramp_nls_simplex, ito_step, nls_gradient, nls_objective, trim_set,
    RampOptions,
};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};

/// Coefficient vector aligned with the design columns.
pub type Coefficients = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    OlsLpm,
    RampNls,
    Probit,
    Logit,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::OlsLpm,
        EstimatorKind::RampNls,
        EstimatorKind::Probit,
        EstimatorKind::Logit,
    ];

    /// Fitted response probability at index `z`.
    pub fn link(self, z: f64) -> f64 {
        match self {
            EstimatorKind::OlsLpm => z,
            EstimatorKind::RampNls => dist::ramp(z),
            EstimatorKind::Probit => dist::norm_cdf(z),
            EstimatorKind::Logit => dist::logistic_cdf(z),
        }
    }

    /// Almost-everywhere derivative of [`link`](Self::link).
    pub fn slope(self, z: f64) -> f64 {
        match self {
            EstimatorKind::OlsLpm => 1.0,
            EstimatorKind::RampNls => dist::ramp_slope(z),
            EstimatorKind::Probit => dist::norm_pdf(z),
            EstimatorKind::Logit => dist::logistic_pdf(z),
        }
    }

    /// Derivative of [`slope`](Self::slope); zero for the piecewise-linear links.
    pub fn slope_derivative(self, z: f64) -> f64 {
        match self {
            EstimatorKind::OlsLpm | EstimatorKind::RampNls => 0.0,
            EstimatorKind::Probit => -z * dist::norm_pdf(z),
            EstimatorKind::Logit => {
                let p = dist::logistic_cdf(z);
                p * (1.0 - p) * (1.0 - 2.0 * p)
            }
        }
    }

    /// Short lowercase name used on the command line.
    pub fn key(self) -> &'static str {
        match self {
            EstimatorKind::OlsLpm => "ols",
            EstimatorKind::RampNls => "ramp",
            EstimatorKind::Probit => "probit",
            EstimatorKind::Logit => "logit",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        match key.trim().to_ascii_lowercase().as_str() {
            "ols" | "lpm" => Some(EstimatorKind::OlsLpm),
            "ramp" | "nls" => Some(EstimatorKind::RampNls),
            "probit" => Some(EstimatorKind::Probit),
            "logit" => Some(EstimatorKind::Logit),
            _ => None,
        }
    }

    /// Table heading, e.g. "LPM (OLS)".
    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::OlsLpm => "LPM (OLS)",
            EstimatorKind::RampNls => "Ramp (NLS)",
            EstimatorKind::Probit => "Probit (QMLE)",
            EstimatorKind::Logit => "Logit (QMLE)",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    ClosedForm,
    /// Newton-Raphson with step halving (probit, logit).
    Newton,
    /// Iterative trimming, the Newton iteration for the ramp objective.
    NewtonTrim,
    FallbackSimplex,
}

/// Why the trimming iteration handed over to the simplex search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackReason {
    EmptyTrimSet,
    RankDeficientTrimSet,
    Cycle,
    MaxIter,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub kind: EstimatorKind,
    pub beta: Coefficients,
    /// Robust covariance of beta-hat (V_hat / N), once attached by the inference module.
    pub vcov: Option<DMatrix<f64>>,
    pub index: DVector<f64>,
    pub prob: DVector<f64>,
    /// SSR for OLS and ramp NLS, log-likelihood for probit and logit.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub solver_path: SolverPath,
    pub fallback: Option<FallbackReason>,
    /// Share of fitted values in [0, 1] (OLS, QMLE) or of indices in (0, 1) (ramp).
    pub frac_unit_interval: f64,
}

impl FitResult {
    pub(crate) fn assemble(
        kind: EstimatorKind,
        design: &DesignMatrix,
        beta: Coefficients,
        objective: f64,
        iterations: usize,
        converged: bool,
        solver_path: SolverPath,
    ) -> Self {
        let index = &design.x * &beta;
        let prob = index.map(|z| kind.link(z));
        let frac_unit_interval = unit_share(kind, &index, &prob);
        FitResult {
            kind,
            beta,
            vcov: None,
            index,
            prob,
            objective,
            iterations,
            converged,
            solver_path,
            fallback: None,
            frac_unit_interval,
        }
    }

    /// Turns a non-converged fit into [`Error::DidNotConverge`].
    pub fn ensure_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::DidNotConverge {
                estimator: self.kind.key(),
                iterations: self.iterations,
            })
        }
    }

    /// Robust standard errors, if a covariance has been attached.
    pub fn std_errors(&self) -> Option<DVector<f64>> {
        self.vcov
            .as_ref()
            .map(|v| v.diagonal().map(|d| d.max(0.0).sqrt()))
    }

    /// Mean squared prediction error N^-1 sum (y_i - p_i)^2.
    pub fn mse(&self, design: &DesignMatrix) -> f64 {
        let n = design.n() as f64;
        design
            .y
            .iter()
            .zip(self.prob.iter())
            .map(|(y, p)| (y - p).powi(2))
            .sum::<f64>()
            / n
    }
}

fn unit_share(kind: EstimatorKind, index: &DVector<f64>, prob: &DVector<f64>) -> f64 {
    let n = index.len() as f64;
    let count = match kind {
        EstimatorKind::RampNls => index.iter().filter(|&&z| dist::in_unit_open(z)).count(),
        _ => prob.iter().filter(|&&p| (0.0..=1.0).contains(&p)).count(),
    };
    count as f64 / n
}

/// Index and probabilities of `fit` on another design with the same columns.
pub fn predict(fit: &FitResult, design: &DesignMatrix) -> Result<(DVector<f64>, DVector<f64>)> {
    if design.k() != fit.beta.len() {
        return Err(Error::DimensionMismatch {
            expected: fit.beta.len(),
            got: design.k(),
        });
    }
    let index = &design.x * &fit.beta;
    let prob = index.map(|z| fit.kind.link(z));
    Ok((index, prob))
}

/// Fits `kind` with default options.
pub fn fit(design: &DesignMatrix, kind: EstimatorKind) -> Result<FitResult> {
    match kind {
        EstimatorKind::OlsLpm => fit_ols(design),
        EstimatorKind::RampNls => fit_ramp_nls(design, &RampOptions::default()),
        EstimatorKind::Probit => fit_probit(design),
        EstimatorKind::Logit => fit_logit(design),
    }
}
