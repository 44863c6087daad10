//! Long/cash trading simulation for the downturn signal and its baselines.
//!
//! All strategies share one recurrence. The book starts fully invested at
//! equity 1.0 on day 0. On each later day the equity is multiplied by
//! `p_t / p_{t-1}` if the position was held overnight. At day `t`'s close
//! the strategy may switch position; every switch multiplies equity by
//! `1 − cost_bps / 10⁴`.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::drawdown::max_drawdown;
use crate::error::{Error, Result};
use crate::numerics::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyConfig {
    pub exit_threshold: f64,
    pub reentry_threshold: f64,
    pub cost_bps: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            exit_threshold: 0.5,
            reentry_threshold: 0.3,
            cost_bps: 0.0,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        let (re, ex) = (self.reentry_threshold, self.exit_threshold);
        if !(0.0 < re && re <= ex && ex < 1.0) {
            return Err(Error::Parameter(format!(
                "thresholds must satisfy 0 < reentry ({re}) <= exit ({ex}) < 1"
            )));
        }
        validate_cost(self.cost_bps)
    }
}

fn validate_cost(cost_bps: f64) -> Result<()> {
    if !(0.0..10_000.0).contains(&cost_bps) {
        return Err(Error::Parameter(format!(
            "cost_bps must lie in [0, 10000), got {cost_bps}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Exit,
    Enter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trade {
    pub date: NaiveDate,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub strategy: String,
    pub total_return: f64,
    pub max_drawdown: f64,
    pub n_trades: usize,
    pub equity_curve: Vec<(NaiveDate, f64)>,
    pub trades: Vec<Trade>,
}

impl BacktestReport {
    pub fn final_equity(&self) -> f64 {
        self.equity_curve.last().map_or(1.0, |(_, e)| *e)
    }

    pub fn equity_csv(&self) -> String {
        let mut out = String::from("date,equity\n");
        for (d, e) in &self.equity_curve {
            out.push_str(&format!("{d},{e}\n"));
        }
        out
    }
}

fn check_path(dates: &[NaiveDate], prices: &[f64]) -> Result<()> {
    if dates.len() != prices.len() {
        return Err(Error::LengthMismatch {
            left: dates.len(),
            right: prices.len(),
        });
    }
    if prices.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(Error::Validation(format!("price at index {i} is not positive")));
    }
    Ok(())
}

/// Runs the recurrence; `decide(t, invested)` says whether to switch at
/// day `t`'s close.
fn simulate(
    strategy: &str,
    dates: &[NaiveDate],
    prices: &[f64],
    cost_bps: f64,
    mut decide: impl FnMut(usize, bool) -> bool,
) -> BacktestReport {
    let keep = 1.0 - cost_bps / 10_000.0;
    let mut invested = true;
    let mut equity = 1.0;
    let mut curve = Vec::with_capacity(prices.len());
    let mut trades = Vec::new();
    for t in 0..prices.len() {
        if t > 0 && invested {
            equity *= prices[t] / prices[t - 1];
        }
        if decide(t, invested) {
            invested = !invested;
            if keep != 1.0 {
                equity *= keep;
            }
            trades.push(Trade {
                date: dates[t],
                action: if invested { Action::Enter } else { Action::Exit },
            });
        }
        curve.push((dates[t], equity));
    }
    let values: Vec<f64> = curve.iter().map(|(_, e)| *e).collect();
    BacktestReport {
        strategy: strategy.to_string(),
        total_return: equity - 1.0,
        max_drawdown: max_drawdown(&values),
        n_trades: trades.len(),
        equity_curve: curve,
        trades,
    }
}

/// Exits when the downturn probability reaches `exit_threshold` and
/// re-enters once it falls to `reentry_threshold`.
pub fn run_signal_strategy(
    dates: &[NaiveDate],
    prices: &[f64],
    probabilities: &[f64],
    config: &StrategyConfig,
) -> Result<BacktestReport> {
    check_path(dates, prices)?;
    config.validate()?;
    if probabilities.len() != prices.len() {
        return Err(Error::LengthMismatch {
            left: probabilities.len(),
            right: prices.len(),
        });
    }
    if let Some(i) = probabilities.iter().position(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Validation(format!(
            "probability at index {i} outside [0, 1]"
        )));
    }
    Ok(simulate(
        "signal",
        dates,
        prices,
        config.cost_bps,
        |t, invested| {
            let p = probabilities[t];
            if invested {
                p >= config.exit_threshold
            } else {
                p <= config.reentry_threshold
            }
        },
    ))
}

pub fn run_buy_and_hold(dates: &[NaiveDate], prices: &[f64]) -> Result<BacktestReport> {
    check_path(dates, prices)?;
    Ok(simulate("buy_and_hold", dates, prices, 0.0, |_, _| false))
}

/// Flips position at a day's close when a uniform draw is below
/// `trade_probability`. One draw is consumed per day, starting at day 0.
pub fn run_random_trader(
    dates: &[NaiveDate],
    prices: &[f64],
    trade_probability: f64,
    cost_bps: f64,
    rng: &mut SeededRng,
) -> Result<BacktestReport> {
    check_path(dates, prices)?;
    validate_cost(cost_bps)?;
    if !(0.0..=1.0).contains(&trade_probability) {
        return Err(Error::Parameter(format!(
            "trade_probability must lie in [0, 1], got {trade_probability}"
        )));
    }
    Ok(simulate("random", dates, prices, cost_bps, |_, _| {
        rng.uniform() < trade_probability
    }))
}
