//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Minimum ratio of smallest to largest singular value for a design to count as full rank.
pub const RANK_TOL: f64 = 1e-10;

/// Smallest eigenvalue of a unit-diagonal scaled symmetric matrix accepted as nonsingular.
const SCALED_EIG_TOL: f64 = 1e-13;

/// sigma_min / sigma_max of `x`, computed from the R factor of a QR decomposition.
pub fn singular_ratio(x: &DMatrix<f64>) -> f64 {
    if x.ncols() == 0 {
        return 1.0;
    }
    if x.nrows() < x.ncols() {
        return 0.0;
    }
    let r = x.clone().qr().r();
    let sv = r.singular_values();
    let max = sv.max();
    if max == 0.0 || !max.is_finite() {
        return 0.0;
    }
    sv.min() / max
}

pub fn is_full_rank(x: &DMatrix<f64>) -> bool {
    singular_ratio(x) > RANK_TOL
}

/// Least squares by Householder QR. Returns `None` when `x` is numerically rank deficient.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let k = x.ncols();
    if x.nrows() < k || k == 0 {
        return None;
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let sv = r.singular_values();
    let max = sv.max();
    if !(max > 0.0) || sv.min() / max <= RANK_TOL {
        return None;
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, k).into_owned();
    r.solve_upper_triangular(&rhs)
}

/// Inverse of a symmetric positive definite matrix, `None` if it is numerically singular.
///
/// The check runs on the diagonally rescaled matrix so column units do not matter.
pub fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let k = a.nrows();
    let mut scale = DVector::zeros(k);
    for j in 0..k {
        let d = a[(j, j)];
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        scale[j] = 1.0 / d.sqrt();
    }
    let scaled = DMatrix::from_fn(k, k, |i, j| a[(i, j)] * scale[i] * scale[j]);
    let eig = scaled.clone().symmetric_eigenvalues();
    if eig.min() <= SCALED_EIG_TOL {
        return None;
    }
    let inv = scaled.cholesky()?.inverse();
    Some(DMatrix::from_fn(k, k, |i, j| {
        inv[(i, j)] * scale[i] * scale[j]
    }))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m).symmetric_eigenvalues().min()
}

/// Rows of `x` selected by `keep`, in order.
pub fn select_rows(x: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(keep.len(), x.ncols(), |i, j| x[(keep[i], j)])
}

pub fn select_entries(v: &DVector<f64>, keep: &[usize]) -> DVector<f64> {
    DVector::from_iterator(keep.len(), keep.iter().map(|&i| v[i]))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}
