//! Command-line front end: `fit`, `table` and `simulate`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::dataset::{build_design, load_csv, DesignMatrix, DesignSpec};
use crate::estimators::{fit, EstimatorKind, FitResult, SolverPath};
use crate::inference::{
    ape_auto, bootstrap_design_ape_se, sandwich, with_se, ApeEstimate, ApeKind,
};
use crate::montecarlo::{reproduce_table, run_mc, CovariateDesign, ErrorLaw, Format, SimScenario};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CONVERGENCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ramplab",
    version,
    about = "Linear and nonlinear estimators for binary outcomes"
)]
pub struct Cli {
    /// Worker threads for replications and bootstrap (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Decimal places in printed output.
    #[arg(long, global = true, default_value_t = 4)]
    pub precision: usize,
    /// Output format: markdown or csv.
    #[arg(long, global = true, default_value = "markdown")]
    pub format: Format,
    /// Write the report to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the selected estimators on a CSV file.
    Fit(FitArgs),
    /// Reproduce one of the fixed simulation tables.
    Table(TableArgs),
    /// Run a custom simulation scenario.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Binary outcome column.
    #[arg(long)]
    pub y: String,
    /// Regressor columns, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
    /// Interaction `A:B`; repeatable.
    #[arg(long)]
    pub interact: Vec<String>,
    /// Binary column interacted with every other regressor.
    #[arg(long)]
    pub full_interact: Option<String>,
    /// Subset of ols,ramp,probit,logit.
    #[arg(long, value_delimiter = ',', default_value = "ols,ramp,probit,logit")]
    pub estimators: Vec<String>,
    /// Regressors whose average partial effects are reported (default: all).
    #[arg(long, value_delimiter = ',')]
    pub ape: Vec<String>,
    /// Also report bootstrap APE standard errors with this many replications.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long, env = "RAMPLAB_SEED", default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// One of 1-8, 11, 12, 13.
    pub id: u32,
    #[arg(long, env = "RAMPLAB_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// sym, asym or uniwide.
    #[arg(long)]
    pub design: CovariateDesign,
    /// uniform:A or normal.
    #[arg(long)]
    pub error: ErrorLaw,
    /// b0,b1,b2 (and b3 with --interaction).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub beta: Vec<f64>,
    #[arg(long)]
    pub interaction: bool,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, env = "RAMPLAB_SEED", default_value_t = 1)]
    pub seed: u64,
}

/// Exit code for an error: 3 for solver failures, 2 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_convergence() {
        EXIT_CONVERGENCE
    } else {
        EXIT_INPUT
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let pool = match cli.jobs {
        Some(0) => {
            let _ = writeln!(stderr, "error: --jobs must be positive");
            return EXIT_INPUT;
        }
        Some(j) => rayon::ThreadPoolBuilder::new().num_threads(j).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let (text, code) = pool.install(|| match &cli.command {
        Command::Fit(args) => cmd_fit(args, cli.format, cli.precision),
        Command::Table(args) => render_sim(
            reproduce_table(args.id, args.seed, args.reps),
            cli.format,
            cli.precision,
        ),
        Command::Simulate(args) => render_sim(simulate_scenario(args), cli.format, cli.precision),
    });
    let code = match text {
        Ok(text) => match emit(&text, cli.out.as_ref(), stdout) {
            Ok(()) => code,
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                EXIT_INPUT
            }
        },
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    };
    if code == EXIT_CONVERGENCE {
        let _ = writeln!(
            stderr,
            "error: at least one estimator failed to converge; see report"
        );
    }
    code
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render_sim(
    report: Result<crate::montecarlo::SimReport>,
    format: Format,
    precision: usize,
) -> (Result<String>, i32) {
    (report.map(|r| r.render(format, precision)), EXIT_OK)
}

fn simulate_scenario(args: &SimulateArgs) -> Result<crate::montecarlo::SimReport> {
    let scenario = SimScenario {
        covariate_design: args.design,
        error_law: args.error,
        betas: args.beta.clone(),
        interaction: args.interaction,
        n_obs: args.n,
        reps: args.reps,
        seed: args.seed,
    };
    run_mc(&scenario)
}

/// Everything reported for one estimator by `fit`.
#[derive(Debug, Clone)]
pub struct EstimatorReport {
    pub fit: FitResult,
    pub std_errors: Option<Vec<f64>>,
    pub apes: Vec<ApeEstimate>,
    /// Bootstrap SE per APE, aligned with `apes`.
    pub bootstrap: Vec<Option<f64>>,
    pub mse: f64,
}

#[derive(Debug)]
pub struct FitReport {
    pub n: usize,
    pub dropped: usize,
    pub names: Vec<String>,
    pub ape_vars: Vec<String>,
    pub estimators: Vec<(EstimatorKind, std::result::Result<EstimatorReport, Error>)>,
}

fn parse_estimators(keys: &[String]) -> Result<Vec<EstimatorKind>> {
    let mut kinds = Vec::new();
    for key in keys {
        let kind = EstimatorKind::from_key(key)
            .ok_or_else(|| Error::InvalidInput(format!("unknown estimator {key:?}")))?;
        if !kinds.contains(&kind) {
            kinds.push(kind);
        }
    }
    if kinds.is_empty() {
        return Err(Error::InvalidInput("no estimators selected".into()));
    }
    Ok(kinds)
}

fn design_spec(args: &FitArgs) -> Result<DesignSpec> {
    let mut spec = DesignSpec {
        regressors: args.x.clone(),
        ..Default::default()
    };
    if let Some(w) = &args.full_interact {
        if !spec.regressors.contains(w) {
            spec.regressors.push(w.clone());
        }
        spec.full_interactions_with = Some(w.clone());
    }
    for pair in &args.interact {
        let (a, b) = pair.split_once(':').ok_or_else(|| {
            Error::InvalidInput(format!("interaction {pair:?} is not of the form A:B"))
        })?;
        spec.interactions
            .push((a.trim().to_string(), b.trim().to_string()));
    }
    Ok(spec)
}

fn estimate_one(
    design: &DesignMatrix,
    kind: EstimatorKind,
    ape_vars: &[String],
    bootstrap: Option<usize>,
    seed: u64,
) -> Result<EstimatorReport> {
    let mut f = fit(design, kind)?.ensure_converged()?;
    let parts = sandwich(design, &f)?;
    f.vcov = Some(parts.vcov());
    let apes = ape_vars
        .iter()
        .map(|v| with_se(ape_auto(design, &f, v)?, &parts))
        .collect::<Result<Vec<_>>>()?;
    let bootstrap = match bootstrap {
        Some(reps) => ape_vars
            .iter()
            .map(|v| bootstrap_design_ape_se(design, kind, v, reps, seed).map(|b| Some(b.se)))
            .collect::<Result<Vec<_>>>()?,
        None => vec![None; ape_vars.len()],
    };
    Ok(EstimatorReport {
        std_errors: f.std_errors().map(|s| s.iter().copied().collect()),
        mse: f.mse(design),
        fit: f,
        apes,
        bootstrap,
    })
}

/// Loads the data, fits every selected estimator and collects the results.
pub fn fit_report(args: &FitArgs) -> Result<FitReport> {
    let kinds = parse_estimators(&args.estimators)?;
    let spec = design_spec(args)?;
    let mut needed = spec.regressors.clone();
    for (a, b) in &spec.interactions {
        for c in [a, b] {
            if !needed.contains(c) {
                needed.push(c.clone());
            }
        }
    }
    let data = load_csv(&args.data, &args.y, &needed)?;
    let design = build_design(&data, &spec)?;
    let ape_vars = if args.ape.is_empty() {
        spec.regressors.clone()
    } else {
        args.ape.clone()
    };
    for v in &ape_vars {
        design.index_of(v)?;
    }
    if let Some(0 | 1) = args.bootstrap {
        return Err(Error::InvalidInput(
            "--bootstrap needs at least 2 replications".into(),
        ));
    }
    let estimators = kinds
        .iter()
        .map(|&kind| {
            (
                kind,
                estimate_one(&design, kind, &ape_vars, args.bootstrap, args.seed),
            )
        })
        .collect();
    Ok(FitReport {
        n: design.n(),
        dropped: data.dropped,
        names: design.names.clone(),
        ape_vars,
        estimators,
    })
}

fn cmd_fit(args: &FitArgs, format: Format, precision: usize) -> (Result<String>, i32) {
    let report = match fit_report(args) {
        Ok(r) => r,
        Err(e) => return (Err(e), 0),
    };
    let code = report
        .estimators
        .iter()
        .filter_map(|(_, r)| r.as_ref().err())
        .map(exit_code)
        .max()
        .unwrap_or(EXIT_OK);
    let text = match format {
        Format::Markdown => report.to_markdown(precision),
        Format::Csv => report.to_csv(precision),
    };
    (Ok(text), code)
}

fn solver_label(path: SolverPath) -> &'static str {
    match path {
        SolverPath::ClosedForm => "closed form",
        SolverPath::Newton => "Newton",
        SolverPath::NewtonTrim => "iterative trimming",
        SolverPath::FallbackSimplex => "simplex fallback",
    }
}

fn ape_label(kind: ApeKind) -> &'static str {
    match kind {
        ApeKind::Derivative => "derivative",
        ApeKind::DiscreteDiff => "discrete",
    }
}

impl FitReport {
    pub fn to_markdown(&self, precision: usize) -> String {
        let f = |x: f64| format!("{x:.precision$}");
        let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), f);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "N = {} ({} incomplete rows dropped), K = {}\n",
            self.n,
            self.dropped,
            self.names.len()
        );
        for (kind, result) in &self.estimators {
            let _ = writeln!(out, "## {}\n", kind.label());
            let r = match result {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(out, "failed: {e}\n");
                    continue;
                }
            };
            let _ = writeln!(
                out,
                "solver: {}, iterations: {}\n",
                solver_label(r.fit.solver_path),
                r.fit.iterations
            );
            out.push_str("| term | coef | robust SE |\n|---|---:|---:|\n");
            for (j, name) in self.names.iter().enumerate() {
                let se = r.std_errors.as_ref().map(|s| s[j]);
                let _ = writeln!(out, "| {name} | {} | {} |", f(r.fit.beta[j]), opt(se));
            }
            out.push_str(
                "\n| APE | kind | estimate | delta SE | bootstrap SE |\n|---|---|---:|---:|---:|\n",
            );
            for (a, b) in r.apes.iter().zip(&r.bootstrap) {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    a.variable,
                    ape_label(a.kind),
                    f(a.estimate),
                    opt(a.se),
                    opt(*b)
                );
            }
            let _ = writeln!(
                out,
                "\nP(0 <= yhat <= 1) = {}, MSE = {}\n",
                f(r.fit.frac_unit_interval),
                f(r.mse)
            );
        }

        out.push_str("## Summary\n\n|");
        for (kind, _) in &self.estimators {
            let _ = write!(out, " | {}", kind.label());
        }
        out.push_str(" |\n|---|");
        out.push_str(&"---:|".repeat(self.estimators.len()));
        out.push('\n');
        let row = |out: &mut String, label: String, cell: &dyn Fn(&EstimatorReport) -> String| {
            let _ = write!(out, "| {label} |");
            for (_, r) in &self.estimators {
                let _ = write!(
                    out,
                    " {} |",
                    r.as_ref().map_or_else(|_| "failed".to_string(), cell)
                );
            }
            out.push('\n');
        };
        for (i, v) in self.ape_vars.iter().enumerate() {
            row(&mut out, format!("APE {v}"), &|r| f(r.apes[i].estimate));
            row(&mut out, "(robust SE)".into(), &|r| opt(r.apes[i].se));
            if self
                .estimators
                .iter()
                .any(|(_, r)| r.as_ref().is_ok_and(|r| r.bootstrap[i].is_some()))
            {
                row(&mut out, "(bootstrap SE)".into(), &|r| opt(r.bootstrap[i]));
            }
        }
        row(&mut out, "P(0 <= yhat <= 1)".into(), &|r| {
            f(r.fit.frac_unit_interval)
        });
        row(&mut out, "MSE".into(), &|r| f(r.mse));
        out
    }

    /// Rows of `estimator,term,statistic,value`.
    pub fn to_csv(&self, precision: usize) -> String {
        let f = |x: f64| format!("{x:.precision$}");
        let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), f);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut put = |a: &str, b: &str, c: &str, d: String| {
            w.write_record([a, b, c, d.as_str()])
                .expect("writing to memory");
        };
        put("estimator", "term", "statistic", "value".into());
        put("all", "", "n", self.n.to_string());
        put("all", "", "dropped", self.dropped.to_string());
        for (kind, result) in &self.estimators {
            let key = kind.key();
            let r = match result {
                Ok(r) => r,
                Err(e) => {
                    put(key, "", "error", e.to_string());
                    continue;
                }
            };
            for (j, name) in self.names.iter().enumerate() {
                put(key, name, "coef", f(r.fit.beta[j]));
                put(
                    key,
                    name,
                    "robust_se",
                    opt(r.std_errors.as_ref().map(|s| s[j])),
                );
            }
            for (a, b) in r.apes.iter().zip(&r.bootstrap) {
                put(key, &a.variable, "ape", f(a.estimate));
                put(key, &a.variable, "ape_se", opt(a.se));
                if b.is_some() {
                    put(key, &a.variable, "ape_bootstrap_se", opt(*b));
                }
            }
            put(key, "", "p_unit", f(r.fit.frac_unit_interval));
            put(key, "", "mse", f(r.mse));
        }
        String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
    }
}
