//! Writes a synthetic loan-approval dataset: 1989 applications, 13 with a missing field,
//! the binary outcome `approve` and 23 covariates including the race indicator `white`.
//!
//! Usage: cargo run --example synth_loans -- [PATH] [SEED]

use std::io::Write;

use ramplab::dist::norm_cdf;
use ramplab::rng::Stream;

const N: usize = 1989;
const MISSING: usize = 13;

const COLUMNS: [&str; 24] = [
    "approve", "white", "loanamt", "suffolk", "appinc", "unit", "married", "dep", "emp", "yjob",
    "atotinc", "self", "other", "rep", "pubrec", "hrat", "obrat", "cosign", "sch", "mortno",
    "mortlat1", "mortlat2", "chist", "loanprc",
];

fn bern(s: &mut Stream, p: f64) -> f64 {
    (s.uniform() < p) as u8 as f64
}

fn lognormal(s: &mut Stream, mu: f64, sigma: f64) -> f64 {
    (mu + sigma * s.normal()).exp()
}

fn row(s: &mut Stream) -> [f64; 24] {
    let white = bern(s, 0.85);
    let loanamt = lognormal(s, 4.85, 0.45);
    let suffolk = bern(s, 0.15);
    let appinc = lognormal(s, 4.2, 0.6);
    let unit = 1.0 + bern(s, 0.1) + bern(s, 0.02);
    let married = bern(s, 0.66);
    let dep = [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0][s.below(10)] + bern(s, 0.05);
    let emp = if s.uniform() < 0.2 {
        lognormal(s, 0.3, 0.8)
    } else {
        0.0
    };
    let yjob = if s.uniform() < 0.2 {
        lognormal(s, 0.3, 0.8)
    } else {
        0.0
    };
    let atotinc = appinc * 1000.0 / 12.0 * (1.0 + 0.4 * married * s.uniform());
    let selfemp = bern(s, 0.13);
    let other = if s.uniform() < 0.12 {
        lognormal(s, 3.0, 1.0)
    } else {
        0.0
    };
    let rep = 1.0 + [0.0, 0.0, 0.0, 1.0, 1.0, 2.0, 3.0][s.below(7)];
    let pubrec = bern(s, 0.08);
    let hrat = (24.8 + 7.0 * s.normal()).max(2.0);
    let obrat = (hrat + 7.6 + 4.5 * s.normal()).max(hrat);
    let cosign = bern(s, 0.1);
    let sch = bern(s, 0.77);
    let mortno = bern(s, 0.33);
    let mortlat1 = (1.0 - mortno) * bern(s, 0.1);
    let mortlat2 = (1.0 - mortno) * (1.0 - mortlat1) * bern(s, 0.08);
    let chist = bern(s, 0.84);
    let loanprc = (0.77 + 0.15 * s.normal()).clamp(0.1, 1.3);

    // Probit-style approval with race-specific slopes on credit history and debt burden.
    let index = 0.45 + 0.7 * white + 1.1 * chist
        - 1.4 * pubrec
        - 0.05 * (obrat - 32.0)
        - 0.4 * mortlat1
        - 0.8 * mortlat2
        - 0.9 * (loanprc - 0.77)
        + 0.15 * married
        + 0.3 * cosign
        - 0.1 * (rep - 1.5)
        + 0.002 * (appinc - 85.0)
        + white * (0.02 * (obrat - 32.0) - 0.5 * chist + 0.4 * pubrec);
    let approve = bern(s, norm_cdf(index));

    [
        approve, white, loanamt, suffolk, appinc, unit, married, dep, emp, yjob, atotinc, selfemp,
        other, rep, pubrec, hrat, obrat, cosign, sch, mortno, mortlat1, mortlat2, chist, loanprc,
    ]
}

fn main() -> std::io::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "loans_synthetic.csv".into());
    let seed: u64 = args
        .next()
        .map_or(1989, |s| s.parse().expect("seed must be an integer"));

    let mut s = Stream::new(seed, 0);
    let rows: Vec<[f64; 24]> = (0..N).map(|_| row(&mut s)).collect();
    // Blank one field in each of MISSING distinct rows.
    let mut blanks = Vec::with_capacity(MISSING);
    while blanks.len() < MISSING {
        let cell = (s.below(N), 1 + s.below(COLUMNS.len() - 1));
        if !blanks.iter().any(|&(r, _)| r == cell.0) {
            blanks.push(cell);
        }
    }

    let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
    writeln!(out, "{}", COLUMNS.join(","))?;
    for (i, r) in rows.iter().enumerate() {
        let fields: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(j, v)| {
                if blanks.contains(&(i, j)) {
                    String::new()
                } else if v.fract() == 0.0 {
                    format!("{v}")
                } else {
                    format!("{v:.4}")
                }
            })
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    eprintln!("wrote {N} rows to {path}");
    Ok(())
}
