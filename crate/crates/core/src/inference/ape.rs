//! Average partial effects and their delta-method standard errors.

use nalgebra::DVector;

use super::sandwich::SandwichParts;
use crate::dataset::{ColumnKind, DesignMatrix};
use crate::dist::in_unit_open;
use crate::estimators::{EstimatorKind, FitResult};
use crate::linalg::KahanSum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApeKind {
    /// Average of derivatives.
    Derivative,
    /// Average of the change in probability as a binary regressor goes from 0 to 1.
    DiscreteDiff,
}

#[derive(Debug, Clone)]
pub struct ApeEstimate {
    pub variable: String,
    pub kind: ApeKind,
    pub estimate: f64,
    /// Delta-method standard error, once computed.
    pub se: Option<f64>,
    pub pe_i: DVector<f64>,
    /// Share of indices in (0, 1); ramp derivative effects only.
    pub p_hat: Option<f64>,
    /// Sample mean of d pe_i / d b.
    pub gradient: DVector<f64>,
}

fn mean(v: &DVector<f64>) -> f64 {
    v.iter().copied().collect::<KahanSum>().total() / v.len() as f64
}

fn finish(
    design: &DesignMatrix,
    fit: &FitResult,
    col: usize,
    kind: ApeKind,
    pe_i: DVector<f64>,
    gradient: DVector<f64>,
) -> ApeEstimate {
    let p_hat = (fit.kind == EstimatorKind::RampNls && kind == ApeKind::Derivative)
        .then(|| fit.index.iter().filter(|&&z| in_unit_open(z)).count() as f64 / design.n() as f64);
    ApeEstimate {
        variable: design.names[col].clone(),
        kind,
        estimate: mean(&pe_i),
        se: None,
        pe_i,
        p_hat,
        gradient: gradient / design.n() as f64,
    }
}

fn check_dims(design: &DesignMatrix, fit: &FitResult) -> Result<()> {
    if fit.beta.len() != design.k() {
        return Err(Error::DimensionMismatch {
            expected: design.k(),
            got: fit.beta.len(),
        });
    }
    Ok(())
}

/// Derivative APE of a continuous regressor that enters no interaction: mean of b_k g(x_i b).
pub fn ape_continuous(
    design: &DesignMatrix,
    fit: &FitResult,
    variable: &str,
) -> Result<ApeEstimate> {
    check_dims(design, fit)?;
    let col = design.index_of(variable)?;
    if design.kinds[col] != ColumnKind::Continuous {
        return Err(Error::NotContinuous(variable.to_string()));
    }
    if !design.interactions_of(col).is_empty() {
        return Err(Error::VariableInInteraction(variable.to_string()));
    }
    let index = &design.x * &fit.beta;
    let bk = fit.beta[col];
    let link = fit.kind;
    let pe_i = index.map(|z| bk * link.slope(z));
    let mut grad = DVector::zeros(design.k());
    let mut slope_sum = KahanSum::default();
    for i in 0..design.n() {
        let z = index[i];
        slope_sum.add(link.slope(z));
        grad[col] += link.slope(z);
        let d = bk * link.slope_derivative(z);
        if d != 0.0 {
            grad += design.x.row(i).transpose() * d;
        }
    }
    let mut ape = finish(design, fit, col, ApeKind::Derivative, pe_i, grad);
    // b_k times the mean slope: exact for the piecewise-linear links, where the slope sum is a count.
    ape.estimate = bk * (slope_sum.total() / design.n() as f64);
    Ok(ape)
}

/// Derivative APE of a continuous regressor through every interaction it enters:
/// pe_i = g(x_i b) (b_k + sum_m b_m x_other).
pub fn ape_chain(design: &DesignMatrix, fit: &FitResult, variable: &str) -> Result<ApeEstimate> {
    check_dims(design, fit)?;
    let col = design.index_of(variable)?;
    if design.kinds[col] != ColumnKind::Continuous {
        return Err(Error::NotContinuous(variable.to_string()));
    }
    let inter = design.interactions_of(col);
    let index = &design.x * &fit.beta;
    let link = fit.kind;
    let k = design.k();
    let mut pe_i = DVector::zeros(design.n());
    let mut grad = DVector::zeros(k);
    for i in 0..design.n() {
        let z = index[i];
        let mut dz = DVector::zeros(k);
        dz[col] = 1.0;
        for &(m, other) in &inter {
            dz[m] = design.x[(i, other)];
        }
        let c = fit.beta.dot(&dz);
        let g = link.slope(z);
        pe_i[i] = g * c;
        grad += &dz * g;
        let d = link.slope_derivative(z) * c;
        if d != 0.0 {
            grad += design.x.row(i).transpose() * d;
        }
    }
    Ok(finish(design, fit, col, ApeKind::Derivative, pe_i, grad))
}

/// Discrete-difference APE of a binary regressor, recomputing dependent interaction columns.
pub fn ape_discrete(design: &DesignMatrix, fit: &FitResult, variable: &str) -> Result<ApeEstimate> {
    check_dims(design, fit)?;
    let col = design.index_of(variable)?;
    if design.kinds[col] != ColumnKind::Binary {
        return Err(Error::NotBinary(variable.to_string()));
    }
    let link = fit.kind;
    let mut pe_i = DVector::zeros(design.n());
    let mut grad = DVector::zeros(design.k());
    for i in 0..design.n() {
        let x1 = design.counterfactual_row(i, col, 1.0);
        let x0 = design.counterfactual_row(i, col, 0.0);
        let (z1, z0) = (x1.dot(&fit.beta), x0.dot(&fit.beta));
        pe_i[i] = link.link(z1) - link.link(z0);
        grad += x1 * link.slope(z1) - x0 * link.slope(z0);
    }
    Ok(finish(design, fit, col, ApeKind::DiscreteDiff, pe_i, grad))
}

/// Discrete difference for binary regressors, chain-rule derivative otherwise.
pub fn ape_auto(design: &DesignMatrix, fit: &FitResult, variable: &str) -> Result<ApeEstimate> {
    let col = design.index_of(variable)?;
    match design.kinds[col] {
        ColumnKind::Binary => ape_discrete(design, fit, variable),
        _ => ape_chain(design, fit, variable),
    }
}

/// Delta-method SE: sqrt(N^-1 var(h_i)) with h_i = pe_i - mean - G A^-1 s_i.
///
/// The variance uses the 1/N denominator, matching the HC0 sandwich.
pub fn ape_se(ape: &ApeEstimate, parts: &SandwichParts) -> Result<f64> {
    let n = ape.pe_i.len();
    if parts.scores.s.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: parts.scores.s.nrows(),
        });
    }
    if parts.a_inv.nrows() != ape.gradient.len() {
        return Err(Error::DimensionMismatch {
            expected: ape.gradient.len(),
            got: parts.a_inv.nrows(),
        });
    }
    // Row vector G A^-1, applied to every score.
    let ga = parts.a_inv.transpose() * &ape.gradient;
    let correction = &parts.scores.s * ga;
    let h: DVector<f64> = DVector::from_fn(n, |i, _| ape.pe_i[i] - ape.estimate - correction[i]);
    let hbar = mean(&h);
    let var = h
        .iter()
        .map(|v| (v - hbar).powi(2))
        .collect::<KahanSum>()
        .total()
        / n as f64;
    Ok((var / n as f64).sqrt())
}

/// Fills in `ape.se`.
pub fn with_se(mut ape: ApeEstimate, parts: &SandwichParts) -> Result<ApeEstimate> {
    ape.se = Some(ape_se(&ape, parts)?);
    Ok(ape)
}
