//! Bernoulli quasi-MLE with probit and logit links.

use nalgebra::{DMatrix, DVector};

use super::{EstimatorKind, FitResult, SolverPath};
use crate::dataset::DesignMatrix;
use crate::dist::{norm_cdf, norm_pdf, norm_sf, softplus};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct QmleOptions {
    /// Stop once the Newton step moves no fitted index by more than this.
    pub index_tol: f64,
    pub max_iter: usize,
    /// An index beyond this magnitude on a non-converging path signals separation, as does
    /// a fitted probability within 1e-10 of 0 or 1.
    pub separation_index: f64,
}

impl Default for QmleOptions {
    fn default() -> Self {
        QmleOptions {
            index_tol: 1e-9,
            max_iter: 100,
            separation_index: 30.0,
        }
    }
}

/// phi(z) / Phi(z), with an asymptotic expansion deep in the lower tail.
fn mills(z: f64) -> f64 {
    if z > -30.0 {
        norm_pdf(z) / norm_cdf(z)
    } else {
        let z2 = z * z;
        -z / (1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2))
    }
}

fn ln_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Per-observation log-likelihood, d/dz and -d2/dz2 (the Newton weight).
fn obs_terms(kind: EstimatorKind, y: f64, z: f64) -> (f64, f64, f64) {
    match kind {
        EstimatorKind::Probit => {
            if y > 0.5 {
                let lam = mills(z);
                let ll = if z > -30.0 {
                    norm_cdf(z).ln()
                } else {
                    ln_norm_pdf(z) - lam.ln()
                };
                (ll, lam, lam * (lam + z))
            } else {
                let lam = mills(-z);
                let ll = if z < 30.0 {
                    norm_sf(z).ln()
                } else {
                    ln_norm_pdf(z) - lam.ln()
                };
                (ll, -lam, lam * (lam - z))
            }
        }
        EstimatorKind::Logit => {
            let e = (-z.abs()).exp();
            let w = e / ((1.0 + e) * (1.0 + e));
            if y > 0.5 {
                // 1 - Lambda(z) = Lambda(-z)
                let r = if z >= 0.0 {
                    e / (1.0 + e)
                } else {
                    1.0 / (1.0 + e)
                };
                (-softplus(-z), r, w)
            } else {
                let p = if z >= 0.0 {
                    1.0 / (1.0 + e)
                } else {
                    e / (1.0 + e)
                };
                (-softplus(z), -p, w)
            }
        }
        _ => unreachable!("QMLE links are probit and logit"),
    }
}

fn loglik(kind: EstimatorKind, design: &DesignMatrix, beta: &DVector<f64>) -> f64 {
    let index = &design.x * beta;
    (0..design.n())
        .map(|i| obs_terms(kind, design.y[i], index[i]).0)
        .sum()
}

fn fit_qmle(kind: EstimatorKind, design: &DesignMatrix, opts: &QmleOptions) -> Result<FitResult> {
    let (n, k) = (design.n(), design.k());
    let mut beta = DVector::zeros(k);
    let mut ll = loglik(kind, design, &beta);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let index = &design.x * &beta;
        let mut score = DVector::zeros(k);
        let mut hess = DMatrix::zeros(k, k);
        for i in 0..n {
            let (_, d1, w) = obs_terms(kind, design.y[i], index[i]);
            let row = design.x.row(i);
            for a in 0..k {
                score[a] += d1 * row[a];
                let wa = w * row[a];
                for b in 0..=a {
                    hess[(a, b)] += wa * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                hess[(b, a)] = hess[(a, b)];
            }
        }
        let Some(chol) = hess.clone().cholesky() else {
            break;
        };
        let step = chol.solve(&score);
        // Largest change in any fitted index: invariant to the scale of the regressors.
        let index_step = (&design.x * &step).amax();
        if index_step < opts.index_tol {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &beta + &step * t;
            let cand_ll = loglik(kind, design, &cand);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 * ll.abs() {
                beta = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Step halving exhausted: the log-likelihood is flat to rounding along the step.
            converged = index_step < 1e-6;
            break;
        }
    }

    let fit = FitResult::assemble(
        kind,
        design,
        beta,
        ll,
        iterations,
        converged,
        SolverPath::Newton,
    );
    if !converged {
        let saturated = fit
            .prob
            .iter()
            .any(|&p| !(1e-10..=1.0 - 1e-10).contains(&p));
        if saturated || fit.index.amax() > opts.separation_index {
            return Err(Error::PerfectSeparation);
        }
    }
    Ok(fit)
}

/// Probit quasi-MLE by Newton-Raphson with step halving.
pub fn fit_probit(design: &DesignMatrix) -> Result<FitResult> {
    fit_qmle(EstimatorKind::Probit, design, &QmleOptions::default())
}

/// Logit quasi-MLE by Newton-Raphson with step halving.
pub fn fit_logit(design: &DesignMatrix) -> Result<FitResult> {
    fit_qmle(EstimatorKind::Logit, design, &QmleOptions::default())
}

/// Mean score N^-1 sum d log f_i / d beta at `beta`.
#[cfg(test)]
pub(crate) fn mean_score(
    kind: EstimatorKind,
    design: &DesignMatrix,
    beta: &DVector<f64>,
) -> DVector<f64> {
    let index = &design.x * beta;
    let mut score = DVector::zeros(design.k());
    for i in 0..design.n() {
        let (_, d1, _) = obs_terms(kind, design.y[i], index[i]);
        score += design.x.row(i).transpose() * d1;
    }
    score / design.n() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    fn design_from(x1: &[f64], y: &[f64]) -> DesignMatrix {
        let n = x1.len();
        let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x1[i] });
        DesignMatrix::from_parts(
            x,
            DVector::from_column_slice(y),
            vec!["_cons".into(), "x1".into()],
        )
        .unwrap()
    }

    fn probit_sample(seed: u64, n: usize) -> DesignMatrix {
        let mut s = Stream::new(seed, 0);
        let x1: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        let y: Vec<f64> = x1
            .iter()
            .map(|x| (0.3 + 0.8 * x + s.normal() > 0.0) as u8 as f64)
            .collect();
        design_from(&x1, &y)
    }

    #[test]
    fn intercept_only_logit_recovers_mean() {
        let mut y = vec![1.0; 88];
        y.extend(vec![0.0; 12]);
        let x = DMatrix::from_element(100, 1, 1.0);
        let d = DesignMatrix::from_parts(x, DVector::from_vec(y), vec!["_cons".into()]).unwrap();
        let fit = fit_logit(&d).unwrap();
        assert!(fit.converged);
        assert!(fit.prob.iter().all(|p| (p - 0.88).abs() < 1e-12));
        let fit = fit_probit(&d).unwrap();
        assert!(fit.prob.iter().all(|p| (p - 0.88).abs() < 1e-12));
    }

    #[test]
    fn score_conditions_at_convergence() {
        for seed in 0..5 {
            let d = probit_sample(seed, 500);
            for kind in [EstimatorKind::Probit, EstimatorKind::Logit] {
                let fit = fit_qmle(kind, &d, &QmleOptions::default()).unwrap();
                assert!(fit.converged);
                assert!(mean_score(kind, &d, &fit.beta).amax() < 1e-10);
            }
            let logit = fit_logit(&d).unwrap();
            let mean_p = logit.prob.sum() / 500.0;
            let mean_y = d.y.sum() / 500.0;
            assert!((mean_p - mean_y).abs() < 1e-10);
        }
    }

    #[test]
    fn probit_recovers_parameters() {
        let d = probit_sample(42, 20_000);
        let fit = fit_probit(&d).unwrap();
        assert!((fit.beta[0] - 0.3).abs() < 0.05);
        assert!((fit.beta[1] - 0.8).abs() < 0.05);
    }

    #[test]
    fn analytic_score_matches_loglik_differences() {
        let d = probit_sample(8, 200);
        for kind in [EstimatorKind::Probit, EstimatorKind::Logit] {
            let beta = DVector::from_vec(vec![0.2, 0.5]);
            let s = mean_score(kind, &d, &beta);
            for j in 0..2 {
                let h = 1e-6;
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (loglik(kind, &d, &up) - loglik(kind, &d, &dn)) / (2.0 * h) / 200.0;
                assert!((fd - s[j]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn separated_dummy_is_detected() {
        let x1 = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let y = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let d = design_from(&x1, &y);
        assert!(matches!(fit_probit(&d), Err(Error::PerfectSeparation)));
        assert!(matches!(fit_logit(&d), Err(Error::PerfectSeparation)));
    }

    #[test]
    fn constant_outcome_is_separation() {
        let x1 = [0.3, -1.0, 2.0, 0.7, 1.5];
        let d = design_from(&x1, &[1.0; 5]);
        assert!(matches!(fit_logit(&d), Err(Error::PerfectSeparation)));
        assert!(matches!(fit_probit(&d), Err(Error::PerfectSeparation)));
    }

    #[test]
    fn extreme_tail_terms_are_finite() {
        for z in [-45.0, -31.0, -29.0, 0.0, 29.0, 31.0, 45.0] {
            for y in [0.0, 1.0] {
                let (ll, d1, w) = obs_terms(EstimatorKind::Probit, y, z);
                assert!(
                    ll.is_finite() && d1.is_finite() && w.is_finite() && w >= 0.0,
                    "z={z} y={y}"
                );
            }
        }
    }
}
