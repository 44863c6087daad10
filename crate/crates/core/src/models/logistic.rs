//! Logistic regression by iteratively reweighted least squares.

use serde::{Deserialize, Serialize};

use super::significance_stars;
use crate::error::{Error, Result};
use crate::numerics::dist::{normal_two_sided_p, Z_975};
use crate::numerics::{solve_least_squares_named, Matrix};

/// Coefficient magnitude taken as evidence of (quasi-)separation.
pub const SEPARATION_BOUND: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LogisticFit {
    pub terms: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub z_statistics: Vec<f64>,
    pub p_values: Vec<f64>,
    pub stars: Vec<&'static str>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub separation_warning: bool,
}

impl LogisticFit {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(x.matvec(&self.coefficients)?.into_iter().map(sigmoid).collect())
    }
}

pub fn aic(n_terms: usize, log_likelihood: f64) -> f64 {
    2.0 * n_terms as f64 - 2.0 * log_likelihood
}

pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli log-likelihood `Σ yη − ln(1 + e^η)`.
pub fn log_likelihood(x: &Matrix, y: &[f64], beta: &[f64]) -> f64 {
    x.matvec(beta)
        .expect("shape checked by caller")
        .iter()
        .zip(y)
        .map(|(eta, yi)| yi * eta - softplus(*eta))
        .sum()
}

/// Score vector `Xᵀ(y − p̂)`.
pub fn gradient(x: &Matrix, y: &[f64], beta: &[f64]) -> Vec<f64> {
    let eta = x.matvec(beta).expect("shape checked by caller");
    let resid: Vec<f64> = eta.iter().zip(y).map(|(e, yi)| yi - sigmoid(*e)).collect();
    x.t_matvec(&resid).expect("shape checked by caller")
}

fn weighted_system(x: &Matrix, y: &[f64], beta: &[f64]) -> (Matrix, Vec<f64>) {
    let eta = x.matvec(beta).expect("shape checked by caller");
    let mut wx = x.clone();
    let mut wz = Vec::with_capacity(y.len());
    for (i, (e, yi)) in eta.iter().zip(y).enumerate() {
        let p = sigmoid(*e);
        let w = (p * (1.0 - p)).max(1e-300);
        let sw = w.sqrt();
        for v in wx.row_mut(i) {
            *v *= sw;
        }
        wz.push(sw * (e + (yi - p) / w));
    }
    (wx, wz)
}

/// Every fitted probability within `1e-6` of its label: the likelihood
/// has no interior maximum even when the coefficients stay moderate.
fn perfectly_classified(x: &Matrix, y: &[f64], beta: &[f64]) -> bool {
    let eta = x.matvec(beta).expect("shape checked by caller");
    eta.iter().zip(y).all(|(e, yi)| (yi - sigmoid(*e)).abs() < 1e-6)
}

fn check_binary(y: &[f64]) -> Result<()> {
    if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::Validation(format!("response value {v} is not 0/1")));
    }
    let pos = y.iter().filter(|v| **v == 1.0).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Maximum-likelihood logistic fit.
///
/// Each iteration is a Newton step solved as a weighted least-squares
/// problem, halved while it lowers the likelihood. Iteration stops when the
/// log-likelihood changes by less than `tol`. Standard errors come from the
/// inverse observed information at the final estimate.
///
/// Separable data never converges in the usual sense: the weights collapse
/// and the coefficients run off. That case returns a fit with
/// `converged = false` and/or `separation_warning = true` instead of an
/// error.
pub fn fit_logistic(x: &Matrix, y: &[f64], terms: &[String], opts: &LogisticOptions) -> Result<LogisticFit> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: n,
        });
    }
    if terms.len() != p {
        return Err(Error::LengthMismatch {
            left: terms.len(),
            right: p,
        });
    }
    check_binary(y)?;

    let mut beta = vec![0.0; p];
    let mut ll = log_likelihood(x, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (wx, wz) = weighted_system(x, y, &beta);
        let proposal = match solve_least_squares_named(&wx, &wz, Some(terms)) {
            Ok(ls) => ls.beta,
            // The first system has uniform weights, so a rank failure there
            // is a property of X itself.
            Err(e) if iterations == 1 => return Err(e),
            Err(_) => break,
        };
        let mut step: Vec<f64> = proposal.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let mut candidate: Vec<f64> = proposal;
        let mut ll_new = log_likelihood(x, y, &candidate);
        let mut halvings = 0;
        while !(ll_new >= ll - 1e-12 * ll.abs().max(1.0)) && halvings < 30 {
            for s in &mut step {
                *s *= 0.5;
            }
            candidate = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
            ll_new = log_likelihood(x, y, &candidate);
            halvings += 1;
        }
        let delta = (ll_new - ll).abs();
        beta = candidate;
        ll = ll_new;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }

    let separation_warning =
        beta.iter().any(|b| b.abs() > SEPARATION_BOUND) || perfectly_classified(x, y, &beta);
    let (wx, wz) = weighted_system(x, y, &beta);
    let se: Vec<f64> = match solve_least_squares_named(&wx, &wz, Some(terms)) {
        Ok(ls) => ls.xtx_inverse_diag.iter().map(|d| d.sqrt()).collect(),
        Err(_) => vec![f64::NAN; p],
    };
    let z: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let pv: Vec<f64> = z.iter().map(|z| normal_two_sided_p(*z)).collect();

    Ok(LogisticFit {
        terms: terms.to_vec(),
        stars: pv.iter().map(|p| significance_stars(*p)).collect(),
        ci_low: beta.iter().zip(&se).map(|(b, s)| b - Z_975 * s).collect(),
        ci_high: beta.iter().zip(&se).map(|(b, s)| b + Z_975 * s).collect(),
        z_statistics: z,
        p_values: pv,
        standard_errors: se,
        coefficients: beta,
        aic: aic(p, ll),
        log_likelihood: ll,
        n_obs: n,
        converged,
        iterations,
        separation_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn intercept_only_is_logit_of_base_rate() {
        let y: Vec<f64> = (0..100).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        let x = Matrix::from_columns(&[vec![1.0; 100]]).unwrap();
        let f = fit_logistic(&x, &y, &["const".into()], &LogisticOptions::default()).unwrap();
        assert!(f.converged);
        assert_abs_diff_eq!(f.coefficients[0], (1.0f64 / 3.0).ln(), epsilon = 1e-8);
        assert_abs_diff_eq!(f.aic, 2.0 - 2.0 * f.log_likelihood, epsilon = 0.0);
        assert!(f.log_likelihood <= 0.0);
        // Var(β₀) = 1 / (n p (1 − p)).
        assert_abs_diff_eq!(
            f.standard_errors[0],
            (1.0 / (100.0 * 0.25 * 0.75f64)).sqrt(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn separated_data_flags_without_panicking() {
        let xs: Vec<f64> = (0..20).map(|i| if i < 10 { -1.0 } else { 1.0 }).collect();
        let y: Vec<f64> = xs.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
        let x = Matrix::from_columns(&[vec![1.0; 20], xs]).unwrap();
        let f = fit_logistic(&x, &y, &["const".into(), "x".into()], &LogisticOptions::default()).unwrap();
        assert!(!f.converged || f.separation_warning);
        assert!(f.separation_warning);
    }

    #[test]
    fn single_class_rejected() {
        let x = Matrix::from_columns(&[vec![1.0; 5]]).unwrap();
        assert!(matches!(
            fit_logistic(&x, &[0.0; 5], &["c".into()], &LogisticOptions::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn aic_identity_at_27_terms() {
        assert_abs_diff_eq!(aic(27, -143.841), 341.682, epsilon = 1e-9);
    }
}
