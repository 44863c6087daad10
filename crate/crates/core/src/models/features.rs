use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AlignedPanel;
use crate::numerics::Matrix;

pub const INTERCEPT: &str = "const";

/// Which panel columns enter a model, and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub bases: Vec<String>,
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
    #[serde(default = "yes")]
    pub intercept: bool,
}

fn yes() -> bool {
    true
}

impl FeatureSpec {
    pub fn new(bases: impl IntoIterator<Item = impl Into<String>>) -> Self {
        FeatureSpec {
            bases: bases.into_iter().map(Into::into).collect(),
            interactions: Vec::new(),
            intercept: true,
        }
    }

    pub fn term_names(&self) -> Result<Vec<String>> {
        let mut names = Vec::new();
        if self.intercept {
            names.push(INTERCEPT.to_string());
        }
        names.extend(self.bases.iter().cloned());
        names.extend(self.interactions.iter().map(|(a, b)| format!("{a}:{b}")));
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateTerm(n.clone()));
            }
        }
        Ok(names)
    }

    fn referenced(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self.bases.iter().map(String::as_str).collect();
        for (a, b) in &self.interactions {
            cols.push(a);
            cols.push(b);
        }
        cols
    }
}

#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    pub matrix: Matrix,
    pub terms: Vec<String>,
    /// Panel row index of each matrix row.
    pub rows: Vec<usize>,
    /// Panel rows dropped because a referenced cell was undefined.
    pub excluded: usize,
}

/// Assembles `[intercept, bases…, interaction products…]`, dropping rows
/// where any referenced column (or any of `also_require`, typically the
/// response) is undefined.
pub fn build_feature_matrix(
    panel: &AlignedPanel,
    spec: &FeatureSpec,
    also_require: &[&str],
) -> Result<FeatureMatrix> {
    let terms = spec.term_names()?;
    let mut needed: Vec<&str> = spec.referenced();
    needed.extend_from_slice(also_require);
    let cols = needed
        .iter()
        .map(|n| panel.require(n).map(|c| &c.values))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<usize> = (0..panel.len())
        .filter(|&i| cols.iter().all(|c| c[i].is_some_and(f64::is_finite)))
        .collect();
    let value =
        |name: &str, i: usize| -> f64 { panel.column(name).expect("checked").values[i].expect("checked") };
    let mut data = Vec::with_capacity(rows.len() * terms.len());
    for &i in &rows {
        if spec.intercept {
            data.push(1.0);
        }
        for b in &spec.bases {
            data.push(value(b, i));
        }
        for (a, b) in &spec.interactions {
            data.push(value(a, i) * value(b, i));
        }
    }
    Ok(FeatureMatrix {
        matrix: Matrix::from_row_major(rows.len(), terms.len(), data)?,
        terms,
        excluded: panel.len() - rows.len(),
        rows,
    })
}
