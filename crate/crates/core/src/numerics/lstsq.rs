//! Least squares by Householder QR.
//!
//! The normal equations square the condition number of the design, so the
//! solver factors `X = QR` directly and reads the coefficient covariance
//! shape `(XᵀX)⁻¹ = R⁻¹R⁻ᵀ` off the triangular factor.

use super::Matrix;
use crate::error::{Error, Result};

/// Relative threshold on `|R_jj|` below which a column counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub beta: Vec<f64>,
    pub residual_ss: f64,
    /// Diagonal of `(XᵀX)⁻¹`.
    pub xtx_inverse_diag: Vec<f64>,
}

/// Upper-triangular factor of a thin QR plus the rotated response.
struct Qr {
    r: Matrix,
    qty: Vec<f64>,
}

fn householder_qr(x: &Matrix, y: &[f64]) -> Qr {
    let n = x.rows();
    let p = x.cols();
    let mut a = x.clone();
    let mut b = y.to_vec();
    let mut v = vec![0.0; n];
    for k in 0..p.min(n) {
        let norm: f64 = (k..n).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
        for i in k..n {
            v[i] = a[(i, k)];
        }
        v[k] -= alpha;
        let vnorm2: f64 = (k..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..p {
            let dot: f64 = (k..n).map(|i| v[i] * a[(i, j)]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..n {
                a[(i, j)] -= s * v[i];
            }
        }
        let dot: f64 = (k..n).map(|i| v[i] * b[i]).sum();
        let s = 2.0 * dot / vnorm2;
        for i in k..n {
            b[i] -= s * v[i];
        }
    }
    let mut r = Matrix::zeros(p, p);
    for i in 0..p.min(n) {
        for j in i..p {
            r[(i, j)] = a[(i, j)];
        }
    }
    b.truncate(p);
    Qr { r, qty: b }
}

/// Minimises `‖y − Xβ‖²`.
///
/// Columns are scaled to unit norm before factoring. Fails with
/// [`Error::RankDeficient`] naming the first column whose triangular pivot
/// falls below `RANK_TOLERANCE` times the largest pivot.
/// Column names default to `x{j}`; use [`solve_least_squares_named`] to
/// carry real term names into the error.
pub fn solve_least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares> {
    solve_least_squares_named(x, y, None)
}

pub fn solve_least_squares_named(x: &Matrix, y: &[f64], names: Option<&[String]>) -> Result<LeastSquares> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    if p == 0 || n < p {
        return Err(Error::Parameter(format!(
            "least squares needs n >= p >= 1 (n={n}, p={p})"
        )));
    }
    // Unit-norm columns make the pivot test independent of units, so a
    // volume column in shares does not mask a return column in fractions.
    let scale: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| x[(i, j)] * x[(i, j)]).sum::<f64>().sqrt())
        .collect();
    let mut xs = x.clone();
    for i in 0..n {
        for (v, s) in xs.row_mut(i).iter_mut().zip(&scale) {
            if *s > 0.0 {
                *v /= s;
            }
        }
    }
    let Qr { r, qty } = householder_qr(&xs, y);

    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    for j in 0..p {
        if !(scale[j] > 0.0 && r[(j, j)].abs() > RANK_TOLERANCE * max_diag) {
            let name = names
                .and_then(|ns| ns.get(j).cloned())
                .unwrap_or_else(|| format!("x{j}"));
            return Err(Error::RankDeficient { index: j, name });
        }
    }

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r[(i, j)] * beta[j]).sum();
        beta[i] = (qty[i] - s) / r[(i, i)];
    }

    // Columns of R⁻¹ by back substitution against the identity.
    let mut rinv = Matrix::zeros(p, p);
    for c in 0..p {
        for i in (0..=c).rev() {
            let e = if i == c { 1.0 } else { 0.0 };
            let s: f64 = ((i + 1)..=c).map(|j| r[(i, j)] * rinv[(j, c)]).sum();
            rinv[(i, c)] = (e - s) / r[(i, i)];
        }
    }
    for (b, s) in beta.iter_mut().zip(&scale) {
        *b /= s;
    }
    let xtx_inverse_diag = (0..p)
        .map(|j| (j..p).map(|c| rinv[(j, c)] * rinv[(j, c)]).sum::<f64>() / (scale[j] * scale[j]))
        .collect();

    let fitted = x.matvec(&beta)?;
    let residual_ss = y.iter().zip(&fitted).map(|(a, b)| (a - b) * (a - b)).sum();

    Ok(LeastSquares {
        beta,
        residual_ss,
        xtx_inverse_diag,
    })
}
