use serde::Serialize;

use super::Matrix;
use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance (divisor `n − 1`).
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn sample_covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Pearson correlation matrix with its column names.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.names.iter().position(|n| n == a)?;
        let j = self.names.iter().position(|n| n == b)?;
        Some(self.values[i][j])
    }
}

pub fn correlation_matrix(columns: &[(String, Vec<f64>)]) -> Result<CorrelationMatrix> {
    if columns.len() < 2 {
        return Err(Error::Parameter("correlation needs at least two columns".into()));
    }
    let n = columns[0].1.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mut centered = Vec::with_capacity(columns.len());
    for (name, col) in columns {
        if col.len() != n {
            return Err(Error::LengthMismatch {
                left: col.len(),
                right: n,
            });
        }
        if col.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "column '{name}' has non-finite values"
            )));
        }
        let m = mean(col);
        let c: Vec<f64> = col.iter().map(|v| v - m).collect();
        let ss: f64 = c.iter().map(|v| v * v).sum();
        if ss == 0.0 {
            return Err(Error::ConstantColumn(name.clone()));
        }
        centered.push((c, ss.sqrt()));
    }
    let k = columns.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in (i + 1)..k {
            let (a, na) = &centered[i];
            let (b, nb) = &centered[j];
            let r = (a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb)).clamp(-1.0, 1.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        names: columns.iter().map(|(n, _)| n.clone()).collect(),
        values,
    })
}

/// Column standardisation parameters.
#[derive(Debug, Clone)]
pub struct Scaling {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaling {
    pub fn inverse(&self, scaled: &Matrix) -> Matrix {
        let mut out = scaled.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.stds[j] + self.means[j];
            }
        }
        out
    }
}

/// Scales every column to mean 0 and sample standard deviation 1.
///
/// `names` is used only to label a constant column in the error; pass an
/// empty slice to get positional names.
pub fn zscore_columns(m: &Matrix, names: &[String]) -> Result<(Matrix, Scaling)> {
    if m.rows() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: m.rows(),
        });
    }
    let mut means = Vec::with_capacity(m.cols());
    let mut stds = Vec::with_capacity(m.cols());
    for j in 0..m.cols() {
        let col = m.column(j);
        let mu = mean(&col);
        let sd = sample_variance(&col).sqrt();
        let spread = col.iter().map(|v| (v - mu).abs()).fold(0.0, f64::max);
        if sd == 0.0 || spread <= 1e-14 * mu.abs() {
            let name = names.get(j).cloned().unwrap_or_else(|| format!("column {j}"));
            return Err(Error::ConstantColumn(name));
        }
        means.push(mu);
        stds.push(sd);
    }
    let mut out = m.clone();
    for i in 0..out.rows() {
        for (j, v) in out.row_mut(i).iter_mut().enumerate() {
            *v = (*v - means[j]) / stds[j];
        }
    }
    Ok((out, Scaling { means, stds }))
}
