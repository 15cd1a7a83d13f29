//! Monte Carlo comparison of the four estimators on simulated binary-response designs.

mod report;
mod scenario;

use rayon::prelude::*;

pub use report::{EstimatorSummary, Format, SimReport, Stat};
pub use scenario::{
    gen_draw, table_scenario, CovariateDesign, ErrorLaw, SimScenario, TruthDraw, TABLE_IDS,
};

use crate::estimators::{fit, EstimatorKind, FallbackReason, SolverPath};
use crate::inference::{ape_auto, ape_discrete, sandwich, with_se};
use crate::{Error, Result};

/// One estimator on one draw.
#[derive(Debug, Clone)]
pub struct EstimatorRecord {
    pub ape1: f64,
    pub ape2: f64,
    /// Delta-method SEs; `None` when the sandwich is unavailable.
    pub se1: Option<f64>,
    pub se2: Option<f64>,
    /// Share of fitted probabilities in [0, 1] (ramp: indices in (0, 1)).
    pub frac_unit: f64,
    pub vcov_psd: Option<bool>,
    pub solver_path: SolverPath,
    pub fallback: Option<FallbackReason>,
}

#[derive(Debug, Clone)]
pub struct Replication {
    pub rep: usize,
    pub true_ape1: f64,
    pub true_ape2: f64,
    pub p_y1: f64,
    pub p_band: Option<f64>,
    /// Indexed like [`EstimatorKind::ALL`].
    pub fits: Vec<std::result::Result<EstimatorRecord, String>>,
}

fn fit_one(draw: &TruthDraw, kind: EstimatorKind) -> Result<EstimatorRecord> {
    let d = &draw.design;
    let f = fit(d, kind)?.ensure_converged()?;
    let ape1 = ape_auto(d, &f, "x1")?;
    let ape2 = ape_discrete(d, &f, "x2")?;
    let (se1, se2, psd) = match sandwich(d, &f) {
        Ok(parts) => (
            with_se(ape1.clone(), &parts)?.se,
            with_se(ape2.clone(), &parts)?.se,
            Some(parts.is_psd()),
        ),
        Err(Error::SingularA) => (None, None, None),
        Err(e) => return Err(e),
    };
    Ok(EstimatorRecord {
        ape1: ape1.estimate,
        ape2: ape2.estimate,
        se1,
        se2,
        frac_unit: f.frac_unit_interval,
        vcov_psd: psd,
        solver_path: f.solver_path,
        fallback: f.fallback,
    })
}

/// Fits every estimator on `draw`; failures are recorded per estimator.
pub fn run_replication(draw: &TruthDraw, rep: usize) -> Replication {
    let fits = EstimatorKind::ALL
        .iter()
        .map(|&kind| fit_one(draw, kind).map_err(|e| e.to_string()))
        .collect();
    Replication {
        rep,
        true_ape1: draw.true_ape1,
        true_ape2: draw.true_ape2,
        p_y1: draw.p_y1,
        p_band: draw.p_band,
        fits,
    }
}

/// Every replication of `scenario`, in replication order. Runs on the current rayon pool.
pub fn simulate(scenario: &SimScenario) -> Result<Vec<Replication>> {
    scenario.validate()?;
    (0..scenario.reps)
        .into_par_iter()
        .map(|rep| gen_draw(scenario, rep).map(|draw| run_replication(&draw, rep)))
        .collect()
}

/// Runs and aggregates `scenario`; fails when more than 5% of replications fail for an estimator.
pub fn run_mc(scenario: &SimScenario) -> Result<SimReport> {
    let reps = simulate(scenario)?;
    SimReport::aggregate(scenario, &reps)
}

/// The simulation behind table `id`, optionally with fewer replications.
pub fn reproduce_table(id: u32, seed: u64, reps: Option<usize>) -> Result<SimReport> {
    let mut scenario = table_scenario(id, seed)?;
    if let Some(r) = reps {
        scenario.reps = r;
    }
    run_mc(&scenario)
}
