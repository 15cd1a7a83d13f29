use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use ramplab::rng::Stream;

fn ramplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ramplab"))
        .args(args)
        .env_remove("RAMPLAB_SEED")
        .output()
        .expect("run ramplab")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// y, x1 (continuous), d (binary); one row with a blank x1.
fn write_sample(dir: &Path) -> String {
    let path = dir.join("sample.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "y,x1,d").unwrap();
    let mut s = Stream::new(5, 0);
    for i in 0..400 {
        let x1 = s.normal();
        let d = (s.uniform() < 0.4) as u8;
        let y = (0.2 + 0.6 * x1 - 0.5 * d as f64 + s.normal() > 0.0) as u8;
        if i == 17 {
            writeln!(f, "{y},,{d}").unwrap();
        } else {
            writeln!(f, "{y},{x1:.6},{d}").unwrap();
        }
    }
    path.to_str().unwrap().to_string()
}

fn csv_value(text: &str, estimator: &str, term: &str, statistic: &str) -> f64 {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.unwrap();
        if &rec[0] == estimator && &rec[1] == term && &rec[2] == statistic {
            return rec[3].parse().unwrap();
        }
    }
    panic!("no row {estimator},{term},{statistic}");
}

#[test]
fn fit_reports_every_estimator() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_sample(dir.path());
    let o = ramplab(&[
        "fit", "--data", &data, "--y", "y", "--x", "x1,d", "--format", "csv",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = stdout(&o);
    assert_eq!(csv_value(&text, "all", "", "n"), 399.0);
    assert_eq!(csv_value(&text, "all", "", "dropped"), 1.0);
    for est in ["ols", "ramp", "probit", "logit"] {
        for term in ["x1", "d"] {
            assert!(csv_value(&text, est, term, "ape_se") > 0.0);
        }
        assert!(csv_value(&text, est, "", "mse") < 0.25);
    }
    // Without interactions the OLS effects are its coefficients.
    assert_eq!(
        csv_value(&text, "ols", "x1", "ape"),
        csv_value(&text, "ols", "x1", "coef")
    );
}

#[test]
fn markdown_and_csv_carry_the_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_sample(dir.path());
    let base = [
        "fit",
        "--data",
        &data,
        "--y",
        "y",
        "--x",
        "x1,d",
        "--estimators",
        "probit",
    ];
    let csv_out = stdout(&ramplab(&[&base[..], &["--format", "csv"]].concat()));
    let md_out = stdout(&ramplab(&base));
    let ape = csv_value(&csv_out, "probit", "x1", "ape");
    assert!(md_out.contains(&format!("{ape:.4}")), "{md_out}");
    assert!(md_out.contains("Probit"));
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_sample(dir.path());
    let target = dir.path().join("report.csv");
    let o = ramplab(&[
        "fit",
        "--data",
        &data,
        "--y",
        "y",
        "--x",
        "x1",
        "--estimators",
        "ols",
        "--format",
        "csv",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.starts_with("estimator,term,statistic,value"));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_sample(dir.path());
    for args in [
        vec!["table", "99"],
        vec![
            "simulate",
            "--design",
            "sym",
            "--error",
            "uniform:0",
            "--beta",
            "0.1,0.2,-0.3",
        ],
        vec![
            "simulate", "--design", "sym", "--error", "normal", "--beta", "0.1,0.2",
        ],
        vec!["fit", "--data", &data, "--y", "y", "--x", "nope"],
        vec!["fit", "--data", &data, "--y", "x1", "--x", "d"],
        vec![
            "fit",
            "--data",
            "/definitely/not/here.csv",
            "--y",
            "y",
            "--x",
            "x1",
        ],
        vec![
            "fit",
            "--data",
            &data,
            "--y",
            "y",
            "--x",
            "x1",
            "--estimators",
            "tobit",
        ],
        vec!["bogus"],
    ] {
        let o = ramplab(&args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn separated_data_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sep.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "y,x").unwrap();
    for i in 0..40 {
        let x = i as f64 / 4.0 - 5.0;
        writeln!(f, "{},{x}", (x > 0.0) as u8).unwrap();
    }
    drop(f);
    let o = ramplab(&[
        "fit",
        "--data",
        path.to_str().unwrap(),
        "--y",
        "y",
        "--x",
        "x",
        "--estimators",
        "probit,ols",
    ]);
    assert_eq!(o.status.code(), Some(3));
    // The estimators that did fit are still reported.
    assert!(stdout(&o).contains("LPM"));
}

#[test]
fn seed_comes_from_the_environment_when_not_given() {
    let with_flag = ramplab(&[
        "table", "3", "--reps", "3", "--seed", "11", "--format", "csv",
    ]);
    let with_env = Command::new(env!("CARGO_BIN_EXE_ramplab"))
        .args(["table", "3", "--reps", "3", "--format", "csv"])
        .env("RAMPLAB_SEED", "11")
        .output()
        .unwrap();
    let other = ramplab(&[
        "table", "3", "--reps", "3", "--seed", "12", "--format", "csv",
    ]);
    assert_eq!(with_flag.status.code(), Some(0));
    assert_eq!(stdout(&with_flag), stdout(&with_env));
    assert_ne!(stdout(&with_flag), stdout(&other));
}

#[test]
fn simulate_matches_the_equivalent_table() {
    let table = ramplab(&[
        "table", "7", "--reps", "4", "--seed", "3", "--format", "csv",
    ]);
    let sim = ramplab(&[
        "simulate",
        "--design",
        "asym",
        "--error",
        "uniform:1",
        "--beta",
        "0.1,0.2,-0.3",
        "--reps",
        "4",
        "--seed",
        "3",
        "--format",
        "csv",
    ]);
    assert_eq!(table.status.code(), Some(0));
    assert_eq!(stdout(&table), stdout(&sim));
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let run = |jobs: &str| {
        stdout(&ramplab(&[
            "--jobs", jobs, "table", "11", "--reps", "6", "--format", "csv",
        ]))
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn bootstrap_column_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_sample(dir.path());
    let args = [
        "fit",
        "--data",
        &data,
        "--y",
        "y",
        "--x",
        "x1,d",
        "--estimators",
        "logit",
        "--bootstrap",
        "50",
        "--seed",
        "9",
        "--format",
        "csv",
    ];
    let a = stdout(&ramplab(&args));
    let b = stdout(&ramplab(&args));
    assert_eq!(a, b);
    let boot = csv_value(&a, "logit", "x1", "ape_bootstrap_se");
    let delta = csv_value(&a, "logit", "x1", "ape_se");
    assert!((boot / delta - 1.0).abs() < 0.5, "{boot} vs {delta}");
}
