//! Tabular input, design-matrix construction and column diagnostics.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::linalg;
use crate::{Error, Result};

/// Binary outcome plus named real-valued columns, complete cases only.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    /// Rows removed by the complete-case rule.
    pub dropped: usize,
}

impl Dataset {
    /// Builds a dataset from already-complete columns.
    pub fn new(y: Vec<f64>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::TooFewObservations {
                n,
                k: columns.len() + 1,
            });
        }
        for (row, &v) in y.iter().enumerate() {
            if v != 0.0 && v != 1.0 {
                return Err(Error::NonBinaryOutcome {
                    column: "y".into(),
                    row,
                    value: v,
                });
            }
        }
        if let Some((_, col)) = columns.iter().find(|(_, c)| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: col.len(),
            });
        }
        Ok(Dataset {
            y,
            columns,
            dropped: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    /// Rows picked by `rows` (with repetition allowed), in that order.
    pub fn resample(&self, rows: &[usize]) -> Dataset {
        Dataset {
            y: rows.iter().map(|&i| self.y[i]).collect(),
            columns: self
                .columns
                .iter()
                .map(|(n, c)| (n.clone(), rows.iter().map(|&i| c[i]).collect()))
                .collect(),
            dropped: 0,
        }
    }
}

fn is_binary(col: &[f64]) -> bool {
    col.iter().all(|&v| v == 0.0 || v == 1.0)
}

/// Reads `outcome` and `regressors` from a headed, comma-separated file.
///
/// Empty fields are missing; any row missing one of the requested columns is dropped.
pub fn load_csv(path: impl AsRef<Path>, outcome: &str, regressors: &[String]) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let y_pos = position(outcome)?;
    let x_pos: Vec<usize> = regressors
        .iter()
        .map(|r| position(r))
        .collect::<Result<_>>()?;

    let mut y = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); regressors.len()];
    let mut dropped = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |pos: usize, name: &str| -> Result<Option<f64>> {
            let field = record.get(pos).unwrap_or("");
            if field.is_empty() {
                return Ok(None);
            }
            field.parse::<f64>().map(Some).map_err(|_| Error::Parse {
                column: name.to_string(),
                row: row + 1,
                value: field.to_string(),
            })
        };
        let yv = parse(y_pos, outcome)?;
        let xs: Vec<Option<f64>> = x_pos
            .iter()
            .zip(regressors)
            .map(|(&p, name)| parse(p, name))
            .collect::<Result<_>>()?;
        let Some(yv) = yv else {
            dropped += 1;
            continue;
        };
        if xs.iter().any(|v| v.is_none()) {
            dropped += 1;
            continue;
        }
        if yv != 0.0 && yv != 1.0 {
            return Err(Error::NonBinaryOutcome {
                column: outcome.to_string(),
                row: row + 1,
                value: yv,
            });
        }
        y.push(yv);
        for (col, v) in cols.iter_mut().zip(xs) {
            col.push(v.unwrap());
        }
    }
    if y.is_empty() {
        return Err(Error::EmptyAfterCompleteCase { dropped });
    }
    let columns = regressors.iter().cloned().zip(cols).collect();
    Ok(Dataset {
        y,
        columns,
        dropped,
    })
}

/// How a design column was built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnKind {
    Intercept,
    Continuous,
    Binary,
    /// Elementwise product of two earlier design columns (by index).
    Interaction(usize, usize),
}

/// Which regressors and interactions enter the design.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DesignSpec {
    pub regressors: Vec<String>,
    pub interactions: Vec<(String, String)>,
    /// Binary column interacted with every other regressor, giving `[1, z, w, w*z]`.
    pub full_interactions_with: Option<String>,
}

impl DesignSpec {
    pub fn new(regressors: &[&str]) -> Self {
        DesignSpec {
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn interact(mut self, a: &str, b: &str) -> Self {
        self.interactions.push((a.to_string(), b.to_string()));
        self
    }

    pub fn full_interactions(mut self, w: &str) -> Self {
        self.full_interactions_with = Some(w.to_string());
        self
    }
}

/// N x K regressor matrix whose first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub kinds: Vec<ColumnKind>,
    pub names: Vec<String>,
}

impl DesignMatrix {
    /// Wraps a raw matrix, tagging columns as binary or continuous and checking rank.
    ///
    /// Column 0 must be the intercept.
    pub fn from_parts(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>) -> Result<Self> {
        let kinds = (0..x.ncols())
            .map(|j| {
                let col: Vec<f64> = x.column(j).iter().copied().collect();
                if j == 0 {
                    ColumnKind::Intercept
                } else if is_binary(&col) {
                    ColumnKind::Binary
                } else {
                    ColumnKind::Continuous
                }
            })
            .collect();
        let design = DesignMatrix { x, y, kinds, names };
        design.check()?;
        Ok(design)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Interaction columns that have `col` as a parent, with the other parent's index.
    pub fn interactions_of(&self, col: usize) -> Vec<(usize, usize)> {
        self.kinds
            .iter()
            .enumerate()
            .filter_map(|(m, kind)| match *kind {
                ColumnKind::Interaction(a, b) if a == col => Some((m, b)),
                ColumnKind::Interaction(a, b) if b == col => Some((m, a)),
                _ => None,
            })
            .collect()
    }

    /// Row `i` with column `col` set to `value` and every dependent interaction recomputed.
    pub fn counterfactual_row(&self, i: usize, col: usize, value: f64) -> DVector<f64> {
        let mut row: DVector<f64> = self.x.row(i).transpose();
        row[col] = value;
        for (m, kind) in self.kinds.iter().enumerate() {
            if let ColumnKind::Interaction(a, b) = *kind {
                row[m] = row[a] * row[b];
            }
        }
        row
    }

    /// The design restricted to `rows` (repeats allowed), with column tags kept.
    pub fn resample(&self, rows: &[usize]) -> Result<DesignMatrix> {
        let design = DesignMatrix {
            x: linalg::select_rows(&self.x, rows),
            y: linalg::select_entries(&self.y, rows),
            kinds: self.kinds.clone(),
            names: self.names.clone(),
        };
        design.check()?;
        Ok(design)
    }

    fn check(&self) -> Result<()> {
        let (n, k) = (self.n(), self.k());
        if k < 1 || n <= k {
            return Err(Error::TooFewObservations { n, k });
        }
        if self.y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.y.len(),
            });
        }
        if self.x.column(0).iter().any(|&v| v != 1.0) {
            return Err(Error::RankDeficient {
                column: self.names[0].clone(),
            });
        }
        if linalg::is_full_rank(&self.x) {
            return Ok(());
        }
        // Find the first column that makes the leading block deficient.
        for j in 1..k {
            let lead = self.x.columns(0, j + 1).into_owned();
            if !linalg::is_full_rank(&lead) {
                return Err(Error::RankDeficient {
                    column: self.names[j].clone(),
                });
            }
        }
        Err(Error::RankDeficient {
            column: self.names[k - 1].clone(),
        })
    }
}

/// Assembles `[1, regressors, interactions]`, or `[1, z, w, w*z, interactions]` under full interactions.
pub fn build_design(data: &Dataset, spec: &DesignSpec) -> Result<DesignMatrix> {
    let n = data.n();
    let fetch = |name: &str| {
        data.column(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };

    let mut names = vec!["_cons".to_string()];
    let mut kinds = vec![ColumnKind::Intercept];
    let mut cols: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let push_base = |name: &str,
                     names: &mut Vec<String>,
                     kinds: &mut Vec<ColumnKind>,
                     cols: &mut Vec<Vec<f64>>|
     -> Result<usize> {
        let col = fetch(name)?.to_vec();
        kinds.push(if is_binary(&col) {
            ColumnKind::Binary
        } else {
            ColumnKind::Continuous
        });
        names.push(name.to_string());
        cols.push(col);
        Ok(cols.len() - 1)
    };

    match &spec.full_interactions_with {
        Some(w) => {
            let w_col = fetch(w)?;
            if !is_binary(w_col) {
                return Err(Error::NotBinary(w.clone()));
            }
            let z: Vec<&String> = spec.regressors.iter().filter(|r| *r != w).collect();
            let z_idx: Vec<usize> = z
                .iter()
                .map(|name| push_base(name, &mut names, &mut kinds, &mut cols))
                .collect::<Result<_>>()?;
            let w_idx = push_base(w, &mut names, &mut kinds, &mut cols)?;
            for (&zi, name) in z_idx.iter().zip(&z) {
                let prod: Vec<f64> = cols[w_idx]
                    .iter()
                    .zip(&cols[zi])
                    .map(|(a, b)| a * b)
                    .collect();
                cols.push(prod);
                names.push(format!("{w}:{name}"));
                kinds.push(ColumnKind::Interaction(w_idx, zi));
            }
        }
        None => {
            for name in &spec.regressors {
                push_base(name, &mut names, &mut kinds, &mut cols)?;
            }
        }
    }

    for (a, b) in &spec.interactions {
        let lookup = |name: &str, names: &[String]| {
            names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownColumn(name.to_string()))
        };
        let ia = lookup(a, &names)?;
        let ib = lookup(b, &names)?;
        let prod: Vec<f64> = cols[ia].iter().zip(&cols[ib]).map(|(p, q)| p * q).collect();
        cols.push(prod);
        names.push(format!("{a}:{b}"));
        kinds.push(ColumnKind::Interaction(ia, ib));
    }

    let k = cols.len();
    if k < 2 {
        return Err(Error::TooFewObservations { n, k });
    }
    let x = DMatrix::from_fn(n, k, |i, j| cols[j][i]);
    let design = DesignMatrix {
        x,
        y: DVector::from_column_slice(&data.y),
        kinds,
        names,
    };
    design.check()?;
    Ok(design)
}

/// Moments of one design column. Skewness and kurtosis are `None` for a constant column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    /// m3 / m2^(3/2) with population central moments.
    pub skewness: Option<f64>,
    /// m4 / m2^2 (not excess).
    pub kurtosis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub outcome: ColumnStats,
    pub columns: Vec<ColumnStats>,
    pub singular_ratio: f64,
    pub full_rank: bool,
}

pub fn column_stats(name: &str, values: &[f64]) -> ColumnStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let sd = if values.len() > 1 {
        (m2 / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let degenerate = m2 <= f64::EPSILON * mean.abs().max(1.0).powi(2);
    ColumnStats {
        name: name.to_string(),
        mean,
        sd: if degenerate { 0.0 } else { sd },
        skewness: (!degenerate).then(|| m3 / m2.powf(1.5)),
        kurtosis: (!degenerate).then(|| m4 / (m2 * m2)),
    }
}

pub fn validate(design: &DesignMatrix) -> Diagnostics {
    let columns = (0..design.k())
        .map(|j| {
            let col: Vec<f64> = design.x.column(j).iter().copied().collect();
            column_stats(&design.names[j], &col)
        })
        .collect();
    let ratio = linalg::singular_ratio(&design.x);
    Diagnostics {
        outcome: column_stats("y", design.y.as_slice()),
        columns,
        singular_ratio: ratio,
        full_rank: ratio > linalg::RANK_TOL,
    }
}
