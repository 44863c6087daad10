use serde::Serialize;

use super::significance_stars;
use crate::error::{Error, Result};
use crate::numerics::dist::{student_t_cdf, student_t_two_sided_p};
use crate::numerics::{solve_least_squares_named, Matrix};

#[derive(Debug, Clone, Serialize)]
pub struct RegressionFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub stars: Vec<&'static str>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub n_obs: usize,
    pub dof: usize,
    pub residual_ss: f64,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub has_intercept: bool,
}

pub(crate) fn intercept_column(x: &Matrix) -> Option<usize> {
    (0..x.cols()).find(|&j| (0..x.rows()).all(|i| x[(i, j)] == 1.0))
}

/// Two-sided `1 − alpha` critical value of Student's t, by bisection.
pub fn t_critical(alpha: f64, dof: f64) -> f64 {
    let target = 1.0 - alpha / 2.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while student_t_cdf(hi, dof) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, dof) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Ordinary least squares with classical inference.
///
/// R² is centred on the mean of `y` when `X` contains a column of ones and
/// uncentred otherwise.
pub fn fit_ols(x: &Matrix, y: &[f64], terms: &[String]) -> Result<RegressionFit> {
    let n = x.rows();
    let p = x.cols();
    if terms.len() != p {
        return Err(Error::LengthMismatch {
            left: terms.len(),
            right: p,
        });
    }
    if n <= p {
        return Err(Error::Parameter(format!(
            "OLS needs more rows than terms (n={n}, p={p})"
        )));
    }
    let ls = solve_least_squares_named(x, y, Some(terms))?;
    let dof = n - p;
    let sigma2 = ls.residual_ss / dof as f64;
    let se: Vec<f64> = ls.xtx_inverse_diag.iter().map(|d| (sigma2 * d).sqrt()).collect();
    let t: Vec<f64> = ls.beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let pv: Vec<f64> = t.iter().map(|t| student_t_two_sided_p(*t, dof as f64)).collect();
    let crit = t_critical(0.05, dof as f64);

    let has_intercept = intercept_column(x).is_some();
    let tss = if has_intercept {
        let m = y.iter().sum::<f64>() / n as f64;
        y.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
    } else {
        y.iter().map(|v| v * v).sum::<f64>()
    };
    let mut r2 = if tss > 0.0 {
        1.0 - ls.residual_ss / tss
    } else {
        1.0
    };
    if has_intercept {
        r2 = r2.clamp(0.0, 1.0);
    }
    let adj = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof as f64;

    Ok(RegressionFit {
        terms: terms.to_vec(),
        stars: pv.iter().map(|p| significance_stars(*p)).collect(),
        ci_low: ls.beta.iter().zip(&se).map(|(b, s)| b - crit * s).collect(),
        ci_high: ls.beta.iter().zip(&se).map(|(b, s)| b + crit * s).collect(),
        coefficients: ls.beta,
        standard_errors: se,
        t_statistics: t,
        p_values: pv,
        n_obs: n,
        dof,
        residual_ss: ls.residual_ss,
        r_squared: r2,
        adj_r_squared: adj,
        has_intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn noiseless_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let x = Matrix::from_columns(&[vec![1.0; 10], xs.clone()]).unwrap();
        let y: Vec<f64> = xs.iter().map(|v| 2.0 + 3.0 * v).collect();
        let f = fit_ols(&x, &y, &names(&["const", "x"])).unwrap();
        assert_abs_diff_eq!(f.coefficients[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.coefficients[1], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn intercept_only() {
        let y = [1.0, 4.0, 2.0, 9.0];
        let x = Matrix::from_columns(&[vec![1.0; 4]]).unwrap();
        let f = fit_ols(&x, &y, &names(&["const"])).unwrap();
        assert_abs_diff_eq!(f.coefficients[0], 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 0.0, epsilon = 1e-12);
        assert!(f.adj_r_squared <= f.r_squared);
    }

    #[test]
    fn rejects_square_and_rank_deficient() {
        let x = Matrix::identity(2);
        assert!(fit_ols(&x, &[1.0, 2.0], &names(&["a", "b"])).is_err());
        let x = Matrix::from_columns(&[vec![1.0; 4], vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 4.0, 6.0, 8.0]])
            .unwrap();
        let err = fit_ols(&x, &[1.0, 0.0, 2.0, 1.0], &names(&["const", "macd", "macd2"])).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { ref name, .. } if name == "macd2"));
    }

    #[test]
    fn t_critical_values() {
        assert_abs_diff_eq!(t_critical(0.05, 1e7), 1.959_963_984_540_054, epsilon = 1e-5);
        // Tabulated t_{0.975, 10}.
        assert_abs_diff_eq!(t_critical(0.05, 10.0), 2.228_138_851_986_273_5, epsilon = 1e-10);
    }
}
