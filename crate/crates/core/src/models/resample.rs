use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    Up,
    Down,
    None,
}

impl FromStr for ResampleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "up" => Ok(ResampleMode::Up),
            "down" => Ok(ResampleMode::Down),
            "none" => Ok(ResampleMode::None),
            _ => Err(Error::Parameter(format!("unknown resample mode '{s}'"))),
        }
    }
}

/// Balances a binary training set.
///
/// `Up` keeps every row and appends minority rows drawn with replacement
/// until the classes are equal; `Down` keeps every minority row and a
/// without-replacement draw of the majority. The combined rows are then
/// shuffled. Draws are taken from `rng` in that order, so a seed fixes the
/// output exactly.
pub fn resample(
    x: &Matrix,
    y: &[f64],
    mode: ResampleMode,
    rng: &mut SeededRng,
) -> Result<(Matrix, Vec<f64>)> {
    if y.len() != x.rows() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: x.rows(),
        });
    }
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1.0).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0.0).collect();
    if pos.len() + neg.len() != y.len() {
        return Err(Error::Validation("response must be 0/1".into()));
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let (minority, majority) = if pos.len() <= neg.len() {
        (&pos, &neg)
    } else {
        (&neg, &pos)
    };
    let mut rows: Vec<usize> = match mode {
        ResampleMode::None => (0..y.len()).collect(),
        ResampleMode::Up => {
            let extra = rng.choose_with_replacement(minority.len(), majority.len() - minority.len());
            let mut r: Vec<usize> = (0..y.len()).collect();
            r.extend(extra.into_iter().map(|k| minority[k]));
            r
        }
        ResampleMode::Down => {
            let picked = rng.choose_without_replacement(majority.len(), minority.len());
            let mut r = minority.clone();
            r.extend(picked.into_iter().map(|k| majority[k]));
            r
        }
    };
    if mode != ResampleMode::None {
        rng.shuffle(&mut rows);
    }
    let ys = rows.iter().map(|&i| y[i]).collect();
    Ok((x.select_rows(&rows), ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng_stream;

    fn data(pos: usize, neg: usize) -> (Matrix, Vec<f64>) {
        let n = pos + neg;
        let y: Vec<f64> = (0..n).map(|i| if i < pos { 1.0 } else { 0.0 }).collect();
        let x = Matrix::from_columns(&[(0..n).map(|i| i as f64).collect()]).unwrap();
        (x, y)
    }

    fn counts(y: &[f64]) -> (usize, usize) {
        let p = y.iter().filter(|v| **v == 1.0).count();
        (p, y.len() - p)
    }

    #[test]
    fn balances_both_ways() {
        let (x, y) = data(12, 5555);
        let (_, yu) = resample(&x, &y, ResampleMode::Up, &mut rng_stream(1)).unwrap();
        assert_eq!(counts(&yu), (5555, 5555));
        let (_, yd) = resample(&x, &y, ResampleMode::Down, &mut rng_stream(1)).unwrap();
        assert_eq!(counts(&yd), (12, 12));
    }

    #[test]
    fn seeded_output_is_stable() {
        let (x, y) = data(5, 40);
        let a = resample(&x, &y, ResampleMode::Up, &mut rng_stream(7)).unwrap();
        let b = resample(&x, &y, ResampleMode::Up, &mut rng_stream(7)).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn rows_keep_their_labels() {
        let (x, y) = data(5, 40);
        for mode in [ResampleMode::Up, ResampleMode::Down] {
            let (xs, ys) = resample(&x, &y, mode, &mut rng_stream(3)).unwrap();
            for (i, label) in ys.iter().enumerate() {
                let original = xs[(i, 0)] as usize;
                assert_eq!(y[original], *label);
            }
        }
    }

    #[test]
    fn single_class_rejected() {
        let (x, y) = data(0, 4);
        assert!(matches!(
            resample(&x, &y, ResampleMode::Up, &mut rng_stream(1)),
            Err(Error::SingleClass)
        ));
    }
}
