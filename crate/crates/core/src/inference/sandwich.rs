//! Sandwich covariance matrices A^-1 Omega A^-1.
//!
//! Scores follow the minimisation convention: s_i is the gradient of the per-observation
//! criterion being minimised (half squared error, or minus the log-likelihood), and A is the
//! matching Hessian analogue, so that sqrt(N)(b - b0) ~ -A^-1 N^-1/2 sum s_i.

use nalgebra::{DMatrix, DVector};

use crate::dataset::DesignMatrix;
use crate::dist::in_unit_open;
use crate::estimators::{EstimatorKind, FitResult};
use crate::linalg;
use crate::{Error, Result};

/// Clamp for fitted probabilities in the QMLE weights.
pub const PROB_CLAMP: f64 = 1e-12;

/// N x K matrix whose row i is s_i(b)'.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub s: DMatrix<f64>,
}

impl ScoreMatrix {
    /// Column means; near zero at an interior optimum.
    pub fn mean(&self) -> DVector<f64> {
        self.s.row_mean().transpose()
    }
}

#[derive(Debug, Clone)]
pub struct SandwichParts {
    /// Hessian analogue.
    pub a: DMatrix<f64>,
    /// Score outer-product mean.
    pub omega: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
    pub v_hat: DMatrix<f64>,
    pub scores: ScoreMatrix,
    pub n: usize,
    /// Fitted probabilities pushed back inside [PROB_CLAMP, 1 - PROB_CLAMP].
    pub clamped: usize,
}

impl SandwichParts {
    /// Estimated covariance of the coefficients, V_hat / N.
    pub fn vcov(&self) -> DMatrix<f64> {
        &self.v_hat / self.n as f64
    }

    pub fn std_errors(&self) -> DVector<f64> {
        self.vcov().diagonal().map(|d| d.max(0.0).sqrt())
    }

    /// Symmetric, with smallest eigenvalue at least -1e-10 * trace.
    pub fn is_psd(&self) -> bool {
        let v = &self.v_hat;
        let scale = v
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let asym = (v - v.transpose())
            .iter()
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        asym <= 1e-12 * scale && linalg::min_eigenvalue(v) >= -1e-10 * v.trace().abs()
    }
}

fn outer_mean(x: &DMatrix<f64>, weights: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let (n, k) = (x.nrows(), x.ncols());
    let mut m = DMatrix::zeros(k, k);
    for i in 0..n {
        let w = weights(i);
        if w == 0.0 {
            continue;
        }
        for a in 0..k {
            let xa = x[(i, a)] * w;
            for b in 0..=a {
                m[(a, b)] += xa * x[(i, b)];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            m[(b, a)] = m[(a, b)];
        }
    }
    m / n as f64
}

fn assemble(a: DMatrix<f64>, scores: ScoreMatrix, clamped: usize) -> Result<SandwichParts> {
    let n = scores.s.nrows();
    let a_inv = linalg::spd_inverse(&a).ok_or(Error::SingularA)?;
    let omega = linalg::symmetrize(&(scores.s.transpose() * &scores.s / n as f64));
    let v_hat = linalg::symmetrize(&(&a_inv * &omega * &a_inv));
    Ok(SandwichParts {
        a,
        omega,
        a_inv,
        v_hat,
        scores,
        n,
        clamped,
    })
}

fn scaled_rows(x: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * w[i])
}

/// Per-observation scores of `fit` on `design`, with the count of clamped probabilities.
pub fn scores(design: &DesignMatrix, fit: &FitResult) -> (ScoreMatrix, usize) {
    let n = design.n();
    let index = &design.x * &fit.beta;
    let mut clamped = 0;
    let w: Vec<f64> = (0..n)
        .map(|i| {
            let (y, z) = (design.y[i], index[i]);
            match fit.kind {
                EstimatorKind::OlsLpm => -(y - z),
                EstimatorKind::RampNls => {
                    if in_unit_open(z) {
                        -(y - z)
                    } else {
                        0.0
                    }
                }
                kind => {
                    let (g, pdf) = clamp_prob(kind, z, &mut clamped);
                    -(y - g) * pdf / (g * (1.0 - g))
                }
            }
        })
        .collect();
    (
        ScoreMatrix {
            s: scaled_rows(&design.x, &w),
        },
        clamped,
    )
}

fn clamp_prob(kind: EstimatorKind, z: f64, clamped: &mut usize) -> (f64, f64) {
    let g = kind.link(z);
    let pdf = kind.slope(z);
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&g) {
        *clamped += 1;
        (g.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP), pdf)
    } else {
        (g, pdf)
    }
}

/// HC0 covariance for OLS: A = N^-1 X'X, Omega = N^-1 sum x_i'x_i u_i^2.
pub fn vcov_ols_robust(design: &DesignMatrix, fit: &FitResult) -> Result<SandwichParts> {
    let a = outer_mean(&design.x, |_| 1.0);
    let (s, _) = scores(
        design,
        &FitResult {
            kind: EstimatorKind::OlsLpm,
            ..fit.clone()
        },
    );
    assemble(a, s, 0).map_err(|e| match e {
        Error::SingularA => Error::RankDeficient {
            column: design.names[design.k() - 1].clone(),
        },
        other => other,
    })
}

/// Ramp-model sandwich restricted to observations with x_i b in (0, 1).
pub fn vcov_ramp_sandwich(design: &DesignMatrix, fit: &FitResult) -> Result<SandwichParts> {
    let index = &design.x * &fit.beta;
    let a = outer_mean(
        &design.x,
        |i| if in_unit_open(index[i]) { 1.0 } else { 0.0 },
    );
    let (s, _) = scores(design, fit);
    assemble(a, s, 0)
}

/// Probit/logit QMLE sandwich with the expected-Hessian A.
pub fn vcov_qmle_sandwich(design: &DesignMatrix, fit: &FitResult) -> Result<SandwichParts> {
    let index = &design.x * &fit.beta;
    let mut ignored = 0;
    let w: Vec<f64> = index
        .iter()
        .map(|&z| {
            let (g, pdf) = clamp_prob(fit.kind, z, &mut ignored);
            pdf * pdf / (g * (1.0 - g))
        })
        .collect();
    let a = outer_mean(&design.x, |i| w[i]);
    let (s, clamped) = scores(design, fit);
    if clamped > 0 {
        log::warn!(
            "{clamped} fitted probabilities clamped to [{PROB_CLAMP:e}, 1 - {PROB_CLAMP:e}]"
        );
    }
    assemble(a, s, clamped)
}

/// The sandwich matching `fit.kind`.
pub fn sandwich(design: &DesignMatrix, fit: &FitResult) -> Result<SandwichParts> {
    match fit.kind {
        EstimatorKind::OlsLpm => vcov_ols_robust(design, fit),
        EstimatorKind::RampNls => vcov_ramp_sandwich(design, fit),
        EstimatorKind::Probit | EstimatorKind::Logit => vcov_qmle_sandwich(design, fit),
    }
}

/// Computes the sandwich and stores V_hat / N on the fit.
pub fn attach_vcov(design: &DesignMatrix, fit: &mut FitResult) -> Result<SandwichParts> {
    let parts = sandwich(design, fit)?;
    fit.vcov = Some(parts.vcov());
    Ok(parts)
}
