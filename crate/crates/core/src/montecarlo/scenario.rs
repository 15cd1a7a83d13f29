use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::dataset::{build_design, Dataset, DesignMatrix, DesignSpec};
use crate::dist::{norm_cdf, norm_pdf, uniform_cdf};
use crate::linalg::KahanSum;
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateDesign {
    /// x1 standard normal, x2 a symmetric binary correlated with x1.
    SymNormal,
    /// x1 lognormal, x2 an asymmetric binary.
    AsymLognormal,
    /// x1 uniform on (-10, 10) independent of x2.
    UniformWide,
}

impl FromStr for CovariateDesign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sym" | "symnormal" => Ok(CovariateDesign::SymNormal),
            "asym" | "asymlognormal" => Ok(CovariateDesign::AsymLognormal),
            "uniwide" | "uniformwide" => Ok(CovariateDesign::UniformWide),
            other => Err(Error::InvalidInput(format!(
                "unknown design {other:?} (expected sym, asym or uniwide)"
            ))),
        }
    }
}

impl fmt::Display for CovariateDesign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CovariateDesign::SymNormal => "sym",
            CovariateDesign::AsymLognormal => "asym",
            CovariateDesign::UniformWide => "uniwide",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ErrorLaw {
    /// u ~ Uniform(-a, a).
    Uniform(f64),
    StdNormal,
}

impl ErrorLaw {
    /// P(u > -z), the true response probability at index z.
    pub fn cdf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::Uniform(a) => uniform_cdf(z, a),
            ErrorLaw::StdNormal => norm_cdf(z),
        }
    }

    /// Density of u at z, with the closed-interval convention at the uniform's edges.
    pub fn pdf(self, z: f64) -> f64 {
        match self {
            ErrorLaw::Uniform(a) => {
                if (-a..=a).contains(&z) {
                    1.0 / (2.0 * a)
                } else {
                    0.0
                }
            }
            ErrorLaw::StdNormal => norm_pdf(z),
        }
    }
}

impl FromStr for ErrorLaw {
    type Err = Error;
    /// `uniform:A` or `normal`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "normal" {
            return Ok(ErrorLaw::StdNormal);
        }
        let a = s.strip_prefix("uniform:").ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown error law {s:?} (expected uniform:A or normal)"
            ))
        })?;
        let a: f64 = a
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad uniform half-width {a:?}")))?;
        Ok(ErrorLaw::Uniform(a))
    }
}

impl fmt::Display for ErrorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorLaw::Uniform(a) => write!(f, "uniform:{a}"),
            ErrorLaw::StdNormal => f.write_str("normal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub covariate_design: CovariateDesign,
    pub error_law: ErrorLaw,
    /// (b0, b1, b2) or, with the interaction, (b0, b1, b2, b3).
    pub betas: Vec<f64>,
    pub interaction: bool,
    pub n_obs: usize,
    pub reps: usize,
    pub seed: u64,
}

impl SimScenario {
    pub fn new(
        covariate_design: CovariateDesign,
        error_law: ErrorLaw,
        betas: Vec<f64>,
        seed: u64,
    ) -> Self {
        let interaction = betas.len() == 4;
        SimScenario {
            covariate_design,
            error_law,
            betas,
            interaction,
            n_obs: 1000,
            reps: 1000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ErrorLaw::Uniform(a) = self.error_law {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::NonPositiveA(a));
            }
        }
        let want = if self.interaction { 4 } else { 3 };
        if self.betas.len() != want {
            return Err(Error::InvalidInput(format!(
                "expected {want} coefficients {}, got {}",
                if self.interaction {
                    "with the interaction"
                } else {
                    "without an interaction"
                },
                self.betas.len()
            )));
        }
        if self.betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        if self.reps == 0 {
            return Err(Error::InvalidInput("reps must be positive".into()));
        }
        if self.n_obs < 10 {
            return Err(Error::InvalidInput(format!(
                "n must be at least 10 (got {})",
                self.n_obs
            )));
        }
        Ok(())
    }

    pub fn spec(&self) -> DesignSpec {
        let spec = DesignSpec::new(&["x1", "x2"]);
        if self.interaction {
            spec.interact("x1", "x2")
        } else {
            spec
        }
    }

    fn index(&self, x1: f64, x2: f64) -> f64 {
        let b = &self.betas;
        let z = b[0] + b[1] * x1 + b[2] * x2;
        if self.interaction {
            z + b[3] * x1 * x2
        } else {
            z
        }
    }
}

/// One simulated sample with its APEs at the true parameters.
#[derive(Debug, Clone)]
pub struct TruthDraw {
    pub design: DesignMatrix,
    pub true_index: DVector<f64>,
    pub true_ape1: f64,
    pub true_ape2: f64,
    pub p_y1: f64,
    /// Share with -a <= x b <= a; uniform errors only.
    pub p_band: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.collect::<KahanSum>().total() / n as f64
}

/// Draw `rep` of `scenario`, from RNG stream (seed, rep).
pub fn gen_draw(scenario: &SimScenario, rep: usize) -> Result<TruthDraw> {
    scenario.validate()?;
    let n = scenario.n_obs;
    let mut s = Stream::new(scenario.seed, rep as u64);
    let (mut x1, mut x2, mut y) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let mut idx = Vec::with_capacity(n);
    for _ in 0..n {
        let v = s.normal();
        let e = s.normal();
        let r = s.normal();
        let (a, b) = match scenario.covariate_design {
            CovariateDesign::SymNormal => (
                v * std::f64::consts::FRAC_1_SQRT_2 + e * std::f64::consts::FRAC_1_SQRT_2,
                v / 2.0 + r > 0.0,
            ),
            CovariateDesign::AsymLognormal => {
                ((0.5 + v / 2.0 + e / 2.0).exp(), -0.5 + v / 2.0 + r > 0.0)
            }
            CovariateDesign::UniformWide => (-10.0 + 20.0 * s.uniform(), v / 2.0 + r > 0.0),
        };
        let b = b as u8 as f64;
        let u = match scenario.error_law {
            ErrorLaw::Uniform(half) => half * (2.0 * s.uniform() - 1.0),
            ErrorLaw::StdNormal => s.normal(),
        };
        let z = scenario.index(a, b);
        x1.push(a);
        x2.push(b);
        idx.push(z);
        y.push((z + u > 0.0) as u8 as f64);
    }

    let law = scenario.error_law;
    let b1 = scenario.betas[1];
    let b3 = if scenario.interaction {
        scenario.betas[3]
    } else {
        0.0
    };
    let true_ape1 = mean((0..n).map(|i| (b1 + b3 * x2[i]) * law.pdf(idx[i])), n);
    let true_ape2 = mean(
        (0..n).map(|i| law.cdf(scenario.index(x1[i], 1.0)) - law.cdf(scenario.index(x1[i], 0.0))),
        n,
    );
    let p_y1 = mean(y.iter().copied(), n);
    let p_band = match law {
        ErrorLaw::Uniform(a) => {
            Some(idx.iter().filter(|&&z| (-a..=a).contains(&z)).count() as f64 / n as f64)
        }
        ErrorLaw::StdNormal => None,
    };

    let data = Dataset::new(y, vec![("x1".into(), x1), ("x2".into(), x2)])?;
    let design = build_design(&data, &scenario.spec())?;
    Ok(TruthDraw {
        design,
        true_index: DVector::from_vec(idx),
        true_ape1,
        true_ape2,
        p_y1,
        p_band,
    })
}

/// Scenario behind a reproducible table id, with N = 1000 and 1000 replications.
pub fn table_scenario(id: u32, seed: u64) -> Result<SimScenario> {
    use CovariateDesign::*;
    use ErrorLaw::*;
    let base = vec![0.1, 0.2, -0.3];
    let inter = vec![0.1, 0.2, -0.3, -0.3];
    let (design, law, betas) = match id {
        1 => (SymNormal, Uniform(0.5), base),
        2 => (SymNormal, Uniform(0.25), base),
        3 => (SymNormal, Uniform(1.0), base),
        4 => (SymNormal, Uniform(0.5), inter),
        5 => (SymNormal, Uniform(0.25), inter),
        6 => (AsymLognormal, Uniform(0.25), base),
        7 => (AsymLognormal, Uniform(1.0), base),
        8 => (UniformWide, Uniform(1.0), base),
        11 => (SymNormal, StdNormal, base),
        12 => (SymNormal, StdNormal, inter),
        13 => (AsymLognormal, StdNormal, base),
        other => return Err(Error::UnknownTable(other)),
    };
    Ok(SimScenario::new(design, law, betas, seed))
}

/// Ids accepted by [`table_scenario`].
pub const TABLE_IDS: [u32; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 11, 12, 13];
