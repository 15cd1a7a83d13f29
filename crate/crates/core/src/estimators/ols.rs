use super::{EstimatorKind, FitResult, SolverPath};
use crate::dataset::DesignMatrix;
use crate::linalg;
use crate::{Error, Result};

/// OLS on the linear probability model. Fitted probabilities are the raw, unclamped index.
pub fn fit_ols(design: &DesignMatrix) -> Result<FitResult> {
    let beta = linalg::lstsq(&design.x, &design.y).ok_or_else(|| Error::RankDeficient {
        column: design.names.last().cloned().unwrap_or_default(),
    })?;
    let resid = &design.y - &design.x * &beta;
    let ssr = resid.norm_squared();
    Ok(FitResult::assemble(
        EstimatorKind::OlsLpm,
        design,
        beta,
        ssr,
        1,
        true,
        SolverPath::ClosedForm,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn exclusive_dummies_give_group_mean_differences() {
        // Base group plus two mutually exclusive, exhaustive dummies.
        let groups = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2];
        let y = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let x = DMatrix::from_fn(12, 3, |i, j| match j {
            0 => 1.0,
            _ => (groups[i] == j) as u8 as f64,
        });
        let d = DesignMatrix::from_parts(
            x,
            DVector::from_column_slice(&y),
            vec!["_cons".into(), "g1".into(), "g2".into()],
        )
        .unwrap();
        let fit = fit_ols(&d).unwrap();
        let mean = |g: usize| {
            let v: Vec<f64> = (0..12).filter(|&i| groups[i] == g).map(|i| y[i]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!((fit.beta[0] - mean(0)).abs() < 1e-14);
        assert!((fit.beta[1] - (mean(1) - mean(0))).abs() < 1e-14);
        assert!((fit.beta[2] - (mean(2) - mean(0))).abs() < 1e-14);
    }

    #[test]
    fn perfect_fit_has_zero_ssr() {
        let xs = [0.0, 1.0, 1.0, 0.0, 1.0];
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let d = DesignMatrix::from_parts(
            x,
            DVector::from_column_slice(&xs),
            vec!["_cons".into(), "x".into()],
        )
        .unwrap();
        let fit = fit_ols(&d).unwrap();
        assert!(fit.objective < 1e-28);
        assert_eq!(fit.solver_path, SolverPath::ClosedForm);
        assert!((fit.beta[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_outcome_gives_unit_intercept() {
        let xs = [0.3, 1.1, -0.4, 2.0, 0.5];
        let x = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let d = DesignMatrix::from_parts(
            x,
            DVector::from_element(5, 1.0),
            vec!["_cons".into(), "x".into()],
        )
        .unwrap();
        let fit = fit_ols(&d).unwrap();
        assert!((fit.beta[0] - 1.0).abs() < 1e-14 && fit.beta[1].abs() < 1e-14);
    }
}
