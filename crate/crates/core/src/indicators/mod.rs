//! Technical and valuation indicators.

mod ratios;
mod technical;

pub use ratios::{fundamental_ratios, RatioSet};
pub use technical::{
    bollinger, ema, macd, obv, rolling_beta, rolling_std, rsi, simple_returns, Bollinger, Macd, Series,
};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{AlignedPanel, Column};
use crate::par::{map_indices, Exec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorParams {
    pub rsi_period: usize,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub bb_window: usize,
    pub bb_nbdev: f64,
    pub std_window: usize,
    pub beta_window: usize,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        IndicatorParams {
            rsi_period: 14,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            bb_window: 20,
            bb_nbdev: 2.0,
            std_window: 20,
            beta_window: 252,
        }
    }
}

/// All per-date indicators of one ticker, aligned with its bars.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    pub rsi: Series,
    pub macd: Series,
    pub macd_signal: Series,
    pub macd_hist: Series,
    pub obv: Series,
    pub bb_upper: Series,
    pub bb_middle: Series,
    pub bb_lower: Series,
    pub rolling_std: Series,
    pub simple_return: Series,
    /// Only present when a market series was supplied.
    pub beta: Option<Series>,
}

impl IndicatorSet {
    /// `(column suffix, values)` pairs in output order.
    pub fn named(&self) -> Vec<(&'static str, &Series)> {
        let mut v = vec![
            ("rsi", &self.rsi),
            ("macd", &self.macd),
            ("macd_signal", &self.macd_signal),
            ("macd_hist", &self.macd_hist),
            ("obv", &self.obv),
            ("bb_upper", &self.bb_upper),
            ("bb_middle", &self.bb_middle),
            ("bb_lower", &self.bb_lower),
            ("rolling_std", &self.rolling_std),
            ("return", &self.simple_return),
        ];
        if let Some(b) = &self.beta {
            v.push(("beta", b));
        }
        v
    }
}

fn lag_returns(prices: &[f64]) -> Result<Series> {
    let mut out = vec![None];
    out.extend(simple_returns(prices)?.into_iter().map(Some));
    Ok(out)
}

/// Computes every indicator from adjusted closes and volumes. `market`
/// (a benchmark level series on the same dates) enables beta.
pub fn compute_indicator_set(
    closes: &[f64],
    volumes: &[f64],
    market: Option<&[f64]>,
    params: &IndicatorParams,
) -> Result<IndicatorSet> {
    let m = macd(closes, params.macd_fast, params.macd_slow, params.macd_signal)?;
    let bb = bollinger(closes, params.bb_window, params.bb_nbdev)?;
    let returns = lag_returns(closes)?;
    let beta = match market {
        Some(mk) if mk.len() > params.beta_window => {
            let asset: Vec<f64> = returns[1..].iter().map(|r| r.expect("defined")).collect();
            let market_returns = simple_returns(mk)?;
            let mut b = vec![None];
            b.extend(rolling_beta(&asset, &market_returns, params.beta_window)?);
            Some(b)
        }
        _ => None,
    };
    Ok(IndicatorSet {
        rsi: rsi(closes, params.rsi_period)?,
        macd: m.macd,
        macd_signal: m.signal,
        macd_hist: m.hist,
        obv: obv(closes, volumes)?.into_iter().map(Some).collect(),
        bb_upper: bb.upper,
        bb_middle: bb.middle,
        bb_lower: bb.lower,
        rolling_std: rolling_std(closes, params.std_window)?,
        simple_return: returns,
        beta,
    })
}

/// Appends `{ticker}.{indicator}` columns for each ticker, computed from its
/// `adjusted_close` and `volume` columns. A `market_value` column, when
/// present, is used as the benchmark for beta.
pub fn add_indicator_columns(
    panel: &mut AlignedPanel,
    tickers: &[String],
    params: &IndicatorParams,
    exec: Exec,
) -> Result<()> {
    let market = panel
        .column("market_value")
        .map(|_| panel.dense("market_value"))
        .transpose()?;
    let snapshot = &*panel;
    let sets = map_indices(exec, tickers.len(), |i| -> Result<IndicatorSet> {
        let t = &tickers[i];
        let closes = snapshot.dense(&format!("{t}.adjusted_close"))?;
        let volumes = snapshot.dense(&format!("{t}.volume"))?;
        compute_indicator_set(&closes, &volumes, market.as_deref(), params)
    });
    for (t, set) in tickers.iter().zip(sets) {
        let set = set?;
        for (name, values) in set.named() {
            panel.push_column(Column::ticker_column(t, name, values.clone()))?;
        }
    }
    Ok(())
}
