//! Backward elimination for logistic models.

use serde::Serialize;

use super::logistic::{fit_logistic, LogisticFit, LogisticOptions};
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::par::{map_indices, Exec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub removed: String,
    pub aic_before: f64,
    pub aic_after: f64,
}

fn fit_subset(
    x: &Matrix,
    y: &[f64],
    terms: &[String],
    keep: &[usize],
    opts: &LogisticOptions,
) -> Result<LogisticFit> {
    let names: Vec<String> = keep.iter().map(|&j| terms[j].clone()).collect();
    fit_logistic(&x.select_columns(keep), y, &names, opts)
}

fn check_protected(terms: &[String], protected: &[String]) -> Result<()> {
    for p in protected {
        if !terms.contains(p) {
            return Err(Error::MissingColumn(p.clone()));
        }
    }
    Ok(())
}

/// Greedy backward elimination on AIC.
///
/// Each round refits the model once per removable term (in parallel under
/// `exec`) and drops the term whose removal gives the lowest AIC, provided
/// that AIC is strictly below the current one. Ties go to the earlier term.
/// Candidate fits that fail are skipped.
pub fn backward_stepwise_aic(
    x: &Matrix,
    y: &[f64],
    terms: &[String],
    protected: &[String],
    opts: &LogisticOptions,
    exec: Exec,
) -> Result<(LogisticFit, Vec<StepRecord>)> {
    check_protected(terms, protected)?;
    let mut keep: Vec<usize> = (0..x.cols()).collect();
    let mut current = fit_subset(x, y, terms, &keep, opts)?;
    let mut log = Vec::new();
    loop {
        let removable: Vec<usize> = (0..keep.len())
            .filter(|&pos| !protected.contains(&terms[keep[pos]]))
            .collect();
        if removable.is_empty() {
            break;
        }
        let fits = map_indices(exec, removable.len(), |c| {
            let mut subset = keep.clone();
            subset.remove(removable[c]);
            fit_subset(x, y, terms, &subset, opts).ok()
        });
        let best = fits
            .into_iter()
            .enumerate()
            .filter_map(|(c, f)| f.map(|f| (c, f)))
            .filter(|(_, f)| f.aic.is_finite())
            .min_by(|a, b| a.1.aic.total_cmp(&b.1.aic).then(a.0.cmp(&b.0)));
        match best {
            Some((c, fit)) if fit.aic < current.aic => {
                let removed = keep.remove(removable[c]);
                log.push(StepRecord {
                    removed: terms[removed].clone(),
                    aic_before: current.aic,
                    aic_after: fit.aic,
                });
                current = fit;
            }
            _ => break,
        }
    }
    Ok((current, log))
}

/// Repeatedly drops the least significant unprotected term while its
/// p-value exceeds `alpha`.
pub fn pvalue_prune(
    x: &Matrix,
    y: &[f64],
    terms: &[String],
    protected: &[String],
    alpha: f64,
    opts: &LogisticOptions,
) -> Result<(LogisticFit, Vec<String>)> {
    check_protected(terms, protected)?;
    let mut keep: Vec<usize> = (0..x.cols()).collect();
    let mut fit = fit_subset(x, y, terms, &keep, opts)?;
    let mut removed = Vec::new();
    loop {
        let worst = fit
            .p_values
            .iter()
            .enumerate()
            .filter(|(pos, _)| !protected.contains(&terms[keep[*pos]]))
            .filter(|(_, p)| p.is_finite() && **p > alpha)
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)));
        let Some((pos, _)) = worst else { break };
        if keep.len() == 1 {
            break;
        }
        removed.push(terms[keep.remove(pos)].clone());
        fit = fit_subset(x, y, terms, &keep, opts)?;
    }
    Ok((fit, removed))
}
