use std::fmt::Write as _;
use std::str::FromStr;

use super::{Replication, SimScenario};
use crate::estimators::{EstimatorKind, SolverPath};
use crate::linalg::KahanSum;
use crate::{Error, Result};

/// Mean and sample sd across replications; `sd` is undefined for fewer than two values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub sd: Option<f64>,
    pub count: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        let mean = values.iter().copied().collect::<KahanSum>().total() / n as f64;
        let sd = (n >= 2).then(|| {
            let ss = values
                .iter()
                .map(|v| (v - mean).powi(2))
                .collect::<KahanSum>()
                .total();
            (ss / (n - 1) as f64).sqrt()
        });
        Stat { mean, sd, count: n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSummary {
    pub kind: EstimatorKind,
    pub ape1: Stat,
    pub ape2: Stat,
    /// Mean delta-method SE over replications where the sandwich exists.
    pub mean_se1: Option<f64>,
    pub mean_se2: Option<f64>,
    /// Mean share of fitted values in the unit interval.
    pub frac_unit: f64,
    pub failed: usize,
    /// Successful fits that needed the simplex fallback.
    pub fallbacks: usize,
    /// Covariance estimates that failed the symmetric-PSD check.
    pub non_psd: usize,
    pub first_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scenario: SimScenario,
    pub reps: usize,
    pub truth_ape1: Stat,
    pub truth_ape2: Stat,
    pub p_y1: f64,
    pub p_band: Option<f64>,
    /// In [`EstimatorKind::ALL`] order.
    pub estimators: Vec<EstimatorSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::InvalidInput(format!(
                "unknown format {other:?} (expected csv or markdown)"
            ))),
        }
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| Stat::of(&v).mean)
}

impl SimReport {
    /// Aggregates replications in index order.
    pub fn aggregate(scenario: &SimScenario, reps: &[Replication]) -> Result<SimReport> {
        let total = reps.len();
        let col = |f: &dyn Fn(&Replication) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
        let truth_ape1 = Stat::of(&col(&|r| r.true_ape1));
        let truth_ape2 = Stat::of(&col(&|r| r.true_ape2));
        let p_y1 = Stat::of(&col(&|r| r.p_y1)).mean;
        let p_band = reps
            .iter()
            .map(|r| r.p_band)
            .collect::<Option<Vec<f64>>>()
            .filter(|v| !v.is_empty())
            .map(|v| Stat::of(&v).mean);

        let mut estimators = Vec::with_capacity(4);
        for (j, &kind) in EstimatorKind::ALL.iter().enumerate() {
            let ok: Vec<_> = reps
                .iter()
                .filter_map(|r| r.fits[j].as_ref().ok())
                .collect();
            let failed = total - ok.len();
            if failed * 20 > total {
                return Err(Error::TooManyFailures {
                    estimator: kind.key(),
                    failed,
                    total,
                });
            }
            let first_error = reps.iter().find_map(|r| r.fits[j].as_ref().err().cloned());
            estimators.push(EstimatorSummary {
                kind,
                ape1: Stat::of(&ok.iter().map(|e| e.ape1).collect::<Vec<_>>()),
                ape2: Stat::of(&ok.iter().map(|e| e.ape2).collect::<Vec<_>>()),
                mean_se1: mean_of(ok.iter().filter_map(|e| e.se1)),
                mean_se2: mean_of(ok.iter().filter_map(|e| e.se2)),
                frac_unit: Stat::of(&ok.iter().map(|e| e.frac_unit).collect::<Vec<_>>()).mean,
                failed,
                fallbacks: ok
                    .iter()
                    .filter(|e| e.solver_path == SolverPath::FallbackSimplex)
                    .count(),
                non_psd: ok.iter().filter(|e| e.vcov_psd == Some(false)).count(),
                first_error,
            });
        }
        Ok(SimReport {
            scenario: scenario.clone(),
            reps: total,
            truth_ape1,
            truth_ape2,
            p_y1,
            p_band,
            estimators,
        })
    }

    pub fn estimator(&self, kind: EstimatorKind) -> &EstimatorSummary {
        &self.estimators[EstimatorKind::ALL.iter().position(|&k| k == kind).unwrap()]
    }

    /// (statistic, truth value, per-estimator values) in display order.
    fn rows(&self) -> Vec<(&'static str, Option<f64>, [Option<f64>; 4])> {
        let per = |f: &dyn Fn(&EstimatorSummary) -> Option<f64>| {
            let mut out = [None; 4];
            for (o, e) in out.iter_mut().zip(&self.estimators) {
                *o = f(e);
            }
            out
        };
        vec![
            (
                "ape1_mean",
                Some(self.truth_ape1.mean),
                per(&|e| Some(e.ape1.mean)),
            ),
            ("ape1_sd", self.truth_ape1.sd, per(&|e| e.ape1.sd)),
            (
                "ape2_mean",
                Some(self.truth_ape2.mean),
                per(&|e| Some(e.ape2.mean)),
            ),
            ("ape2_sd", self.truth_ape2.sd, per(&|e| e.ape2.sd)),
            ("ape1_se_mean", None, per(&|e| e.mean_se1)),
            ("ape2_se_mean", None, per(&|e| e.mean_se2)),
            ("p_y1", Some(self.p_y1), [None; 4]),
            ("p_unit", None, per(&|e| Some(e.frac_unit))),
            ("p_band", self.p_band, [None; 4]),
        ]
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        match format {
            Format::Markdown => self.to_markdown(precision),
            Format::Csv => self.to_csv(precision),
        }
    }

    pub fn to_markdown(&self, precision: usize) -> String {
        let fmt =
            |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.precision$}"));
        let s = &self.scenario;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "design {}, u ~ {}, beta = {:?}, N = {}, reps = {}, seed = {}\n",
            s.covariate_design, s.error_law, s.betas, s.n_obs, self.reps, s.seed
        );
        out.push_str("| | Simulated Truth |");
        for e in &self.estimators {
            let _ = write!(out, " {} |", e.kind.label());
        }
        out.push_str("\n|---|---:|---:|---:|---:|---:|\n");
        for (name, truth, vals) in self.rows() {
            let label = match name {
                "ape1_mean" => "APE x1",
                "ape2_mean" => "APE x2",
                "ape1_sd" | "ape2_sd" => "(sd)",
                "ape1_se_mean" => "mean SE, x1",
                "ape2_se_mean" => "mean SE, x2",
                "p_y1" => "P(y = 1)",
                "p_unit" => "P(0 <= yhat <= 1)",
                _ => "P(-a <= xb <= a)",
            };
            let shown_truth = match name {
                "ape1_se_mean" | "ape2_se_mean" | "p_unit" => String::new(),
                _ => fmt(truth),
            };
            let _ = write!(out, "| {label} | {shown_truth} |");
            for v in vals {
                let cell = if matches!(name, "p_y1" | "p_band") {
                    String::new()
                } else {
                    fmt(v)
                };
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        out.push_str("| failed reps | |");
        for e in &self.estimators {
            let _ = write!(out, " {} |", e.failed);
        }
        out.push('\n');
        out
    }

    /// One row per estimator and statistic: `estimator,statistic,value`.
    pub fn to_csv(&self, precision: usize) -> String {
        let fmt =
            |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.precision$}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut put = |who: &str, stat: &str, val: String| {
            w.write_record([who, stat, val.as_str()])
                .expect("writing to memory");
        };
        put("estimator", "statistic", "value".into());
        for (name, truth, vals) in self.rows() {
            if (truth.is_some() || matches!(name, "ape1_sd" | "ape2_sd" | "p_band"))
                && !(name == "p_band" && truth.is_none())
            {
                put("truth", name, fmt(truth));
            }
            for (e, v) in self.estimators.iter().zip(vals) {
                if !matches!(name, "p_y1" | "p_band") {
                    put(e.kind.key(), name, fmt(v));
                }
            }
        }
        for e in &self.estimators {
            put(e.kind.key(), "failed", e.failed.to_string());
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}
