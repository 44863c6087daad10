//! Regression tables in the usual journal layout, and their JSON form.

use serde::Serialize;

use super::logistic::LogisticFit;
use super::ols::RegressionFit;

/// `***` p < 0.01, `**` p < 0.05, `*` p < 0.1.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

pub const STAR_NOTE: &str = "Note: * p<0.1; ** p<0.05; *** p<0.01";

fn num(v: f64) -> String {
    if !v.is_finite() {
        return "NA".into();
    }
    let a = v.abs();
    if a != 0.0 && !(0.001..1e7).contains(&a) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TermRow {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    pub statistic: f64,
    pub p: f64,
    pub stars: &'static str,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub model: &'static str,
    pub dependent: String,
    pub terms: Vec<TermRow>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adj_r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn rows(
    terms: &[String],
    est: &[f64],
    se: &[f64],
    stat: &[f64],
    p: &[f64],
    stars: &[&'static str],
    lo: &[f64],
    hi: &[f64],
) -> Vec<TermRow> {
    (0..terms.len())
        .map(|i| TermRow {
            term: terms[i].clone(),
            estimate: est[i],
            se: se[i],
            statistic: stat[i],
            p: p[i],
            stars: stars[i],
            ci_low: lo[i],
            ci_high: hi[i],
        })
        .collect()
}

impl FitSummary {
    pub fn from_ols(fit: &RegressionFit, dependent: &str) -> Self {
        FitSummary {
            model: "ols",
            dependent: dependent.to_string(),
            terms: rows(
                &fit.terms,
                &fit.coefficients,
                &fit.standard_errors,
                &fit.t_statistics,
                &fit.p_values,
                &fit.stars,
                &fit.ci_low,
                &fit.ci_high,
            ),
            n: fit.n_obs,
            r2: Some(fit.r_squared),
            adj_r2: Some(fit.adj_r_squared),
            log_likelihood: None,
            aic: None,
            converged: None,
            notes: Vec::new(),
        }
    }

    pub fn from_logistic(fit: &LogisticFit, dependent: &str) -> Self {
        let mut notes = Vec::new();
        if !fit.converged {
            notes.push(format!("did not converge in {} iterations", fit.iterations));
        }
        if fit.separation_warning {
            notes.push("possible separation: perfect fit or a coefficient above 30 in magnitude".into());
        }
        FitSummary {
            model: "logistic",
            dependent: dependent.to_string(),
            terms: rows(
                &fit.terms,
                &fit.coefficients,
                &fit.standard_errors,
                &fit.z_statistics,
                &fit.p_values,
                &fit.stars,
                &fit.ci_low,
                &fit.ci_high,
            ),
            n: fit.n_obs,
            r2: None,
            adj_r2: None,
            log_likelihood: Some(fit.log_likelihood),
            aic: Some(fit.aic),
            converged: Some(fit.converged),
            notes,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Two lines per term: estimate with stars (plus the 95% interval for
    /// logistic fits), then the standard error in parentheses. The footer
    /// carries observations and R²/adjusted R² or log-likelihood/AIC.
    pub fn to_text_table(&self) -> String {
        let label_w = self
            .terms
            .iter()
            .map(|t| t.term.len())
            .chain([20])
            .max()
            .unwrap_or(20)
            + 2;
        let body: Vec<(String, String, String)> = self
            .terms
            .iter()
            .map(|t| {
                let first = format!("{}{}", num(t.estimate), t.stars);
                let ci = if self.model == "logistic" {
                    format!("({}, {})", num(t.ci_low), num(t.ci_high))
                } else {
                    String::new()
                };
                (t.term.clone(), first, ci)
            })
            .collect();
        let val_w = body
            .iter()
            .map(|(_, a, _)| a.len())
            .chain(self.terms.iter().map(|t| num(t.se).len() + 2))
            .max()
            .unwrap_or(10)
            .max(10)
            + 2;
        let ci_w = body.iter().map(|(_, _, c)| c.len()).max().unwrap_or(0);
        let width = label_w + val_w + ci_w;
        let rule = "=".repeat(width);
        let thin = "-".repeat(width);

        let mut out = String::new();
        out.push_str(&rule);
        out.push('\n');
        out.push_str(&format!(
            "{:<label_w$}Dependent variable: {}\n",
            "", self.dependent
        ));
        out.push_str(&thin);
        out.push('\n');
        for ((term, first, ci), t) in body.iter().zip(&self.terms) {
            out.push_str(format!("{term:<label_w$}{first:<val_w$}{ci}").trim_end());
            out.push('\n');
            out.push_str(&format!("{:<label_w$}({})\n", "", num(t.se)));
        }
        out.push_str(&thin);
        out.push('\n');
        out.push_str(&format!("{:<label_w$}{}\n", "Observations", self.n));
        if let (Some(r2), Some(adj)) = (self.r2, self.adj_r2) {
            out.push_str(&format!("{:<label_w$}{:.3}\n", "R-squared", r2));
            out.push_str(&format!("{:<label_w$}{:.3}\n", "Adjusted R-squared", adj));
        }
        if let (Some(ll), Some(aic)) = (self.log_likelihood, self.aic) {
            out.push_str(&format!("{:<label_w$}{:.3}\n", "Log Likelihood", ll));
            out.push_str(&format!("{:<label_w$}{:.3}\n", "Akaike Inf. Crit.", aic));
        }
        out.push_str(&rule);
        out.push('\n');
        out.push_str(STAR_NOTE);
        out.push('\n');
        for n in &self.notes {
            out.push_str(&format!("Note: {n}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn star_thresholds() {
        assert_eq!(significance_stars(0.009), "***");
        assert_eq!(significance_stars(0.01), "**");
        assert_eq!(significance_stars(0.049), "**");
        assert_eq!(significance_stars(0.05), "*");
        assert_eq!(significance_stars(0.099), "*");
        assert_eq!(significance_stars(0.1), "");
        assert_eq!(significance_stars(f64::NAN), "");
    }

    #[test]
    fn number_format() {
        assert_eq!(num(-0.2931), "-0.293");
        assert_eq!(num(0.0003), "3.000e-4");
        assert_eq!(num(f64::NAN), "NA");
    }
}
