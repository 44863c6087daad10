//! Drawdown episodes and the downturn target.
//!
//! An episode opens at the standing running maximum (the peak) on the first
//! day price closes at or below `peak·(1 − min_depth)`. It ends on the first
//! day price regains the peak; the running maximum restarts from there. The
//! trough is the lowest close in between.

use chrono::NaiveDate;
use serde::Serialize;

use crate::error::{Error, Result};

pub const PULLBACK_DEPTH: f64 = 0.05;
pub const CORRECTION_DEPTH: f64 = 0.10;
pub const CRASH_DEPTH: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthClass {
    Pullback,
    Correction,
    Crash,
}

impl DepthClass {
    pub fn of(depth: f64) -> Option<DepthClass> {
        if depth >= CRASH_DEPTH {
            Some(DepthClass::Crash)
        } else if depth >= CORRECTION_DEPTH {
            Some(DepthClass::Correction)
        } else if depth >= PULLBACK_DEPTH {
            Some(DepthClass::Pullback)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DepthClass::Pullback => "pullback",
            DepthClass::Correction => "correction",
            DepthClass::Crash => "crash",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawdownEpisode {
    pub peak_index: usize,
    pub peak_price: f64,
    /// First close at or below the detection threshold.
    pub onset_index: usize,
    pub trough_index: usize,
    pub trough_price: f64,
    /// `None` while the episode is still open at the end of the series.
    pub recovery_index: Option<usize>,
    pub depth: f64,
    /// Trading days from peak to recovery, or to the last close.
    pub duration_days: usize,
    pub class: DepthClass,
}

/// Raw scan; `class` is filled by the caller.
fn scan(prices: &[f64], min_depth: f64) -> Result<Vec<(usize, usize, usize, Option<usize>)>> {
    if prices.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some(i) = prices.iter().position(|p| !(*p > 0.0) || !p.is_finite()) {
        return Err(Error::Validation(format!("price at index {i} is not positive")));
    }
    let mut out = Vec::new();
    let mut peak = 0usize;
    // (onset, trough) of the open episode.
    let mut open: Option<(usize, usize)> = None;
    for i in 1..prices.len() {
        let p = prices[i];
        match open {
            Some((onset, trough)) => {
                if p >= prices[peak] {
                    out.push((peak, onset, trough, Some(i)));
                    open = None;
                    peak = i;
                } else if p < prices[trough] {
                    open = Some((onset, i));
                }
            }
            None => {
                if p > prices[peak] {
                    peak = i;
                } else if p <= prices[peak] * (1.0 - min_depth) {
                    open = Some((i, i));
                }
            }
        }
    }
    if let Some((onset, trough)) = open {
        out.push((peak, onset, trough, None));
    }
    Ok(out)
}

pub fn detect_episodes(prices: &[f64], min_depth: f64) -> Result<Vec<DrawdownEpisode>> {
    if !(PULLBACK_DEPTH..1.0).contains(&min_depth) {
        return Err(Error::Parameter(format!(
            "min_depth must lie in [{PULLBACK_DEPTH}, 1), got {min_depth}"
        )));
    }
    let last = prices.len().saturating_sub(1);
    scan(prices, min_depth).map(|raw| {
        raw.into_iter()
            .map(|(peak, onset, trough, recovery)| {
                let depth = 1.0 - prices[trough] / prices[peak];
                DrawdownEpisode {
                    peak_index: peak,
                    peak_price: prices[peak],
                    onset_index: onset,
                    trough_index: trough,
                    trough_price: prices[trough],
                    recovery_index: recovery,
                    depth,
                    duration_days: recovery.unwrap_or(last) - peak,
                    class: DepthClass::of(depth).expect("depth at least min_depth"),
                }
            })
            .collect()
    })
}

/// Binary downturn target: 1 on the day an episode first closes at or below
/// `peak·(1 − target_depth)` and on the `lookahead` trading days before it.
/// Episodes shorter than `min_duration` trading days are ignored.
pub fn label_target(
    prices: &[f64],
    target_depth: f64,
    lookahead: usize,
    min_duration: usize,
) -> Result<Vec<u8>> {
    if !(target_depth > 0.0 && target_depth < 1.0) {
        return Err(Error::Parameter(format!(
            "target_depth must lie in (0, 1), got {target_depth}"
        )));
    }
    let last = prices.len().saturating_sub(1);
    let mut labels = vec![0u8; prices.len()];
    for (peak, onset, _, recovery) in scan(prices, target_depth)? {
        if recovery.unwrap_or(last) - peak < min_duration {
            continue;
        }
        for l in &mut labels[onset.saturating_sub(lookahead)..=onset] {
            *l = 1;
        }
    }
    Ok(labels)
}

/// Largest peak-to-trough decline of the path as a fraction of the peak.
pub fn max_drawdown(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for &v in values {
        peak = peak.max(v);
        if peak > 0.0 {
            worst = worst.max(1.0 - v / peak);
        }
    }
    worst
}

/// Episode table row with dates resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRow {
    pub peak_date: NaiveDate,
    pub trough_date: NaiveDate,
    pub recovery_date: Option<NaiveDate>,
    pub depth: f64,
    pub class: DepthClass,
}

/// CSV with header `peak_date,trough_date,recovery_date,depth,class`; an
/// open episode has an empty recovery date.
pub fn episodes_csv(dates: &[NaiveDate], episodes: &[DrawdownEpisode]) -> String {
    let mut out = String::from("peak_date,trough_date,recovery_date,depth,class\n");
    for e in episodes {
        let rec = e.recovery_index.map(|i| dates[i].to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            dates[e.peak_index],
            dates[e.trough_index],
            rec,
            e.depth,
            e.class.as_str()
        ));
    }
    out
}

/// Episode and onset counts at the pullback, correction and crash depths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdCounts {
    pub depth: f64,
    pub episodes: usize,
    pub onsets: usize,
}

pub fn threshold_counts(prices: &[f64]) -> Result<Vec<ThresholdCounts>> {
    [PULLBACK_DEPTH, CORRECTION_DEPTH, CRASH_DEPTH]
        .iter()
        .map(|&d| {
            let episodes = detect_episodes(prices, d)?.len();
            let onsets = label_target(prices, d, 0, 0)?.iter().filter(|l| **l == 1).count();
            Ok(ThresholdCounts {
                depth: d,
                episodes,
                onsets,
            })
        })
        .collect()
}
