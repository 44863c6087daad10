use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trading day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adjusted_close: f64,
    pub volume: f64,
}

impl Bar {
    /// Checks price positivity, OHLC consistency and volume sign. `row` is
    /// only used to label the error.
    pub fn validate(&self, row: usize) -> Result<()> {
        let prices = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
            ("adjusted_close", self.adjusted_close),
        ];
        for (name, v) in prices {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Validation(format!("{name} not positive at row {row}")));
            }
        }
        if !self.volume.is_finite() {
            return Err(Error::Validation(format!("volume not finite at row {row}")));
        }
        if self.volume < 0.0 {
            return Err(Error::Validation(format!("volume negative at row {row}")));
        }
        if self.low > self.open.min(self.close) || self.high < self.open.max(self.close) {
            return Err(Error::Validation(format!("OHLC inconsistent at row {row}")));
        }
        if self.low > self.high {
            return Err(Error::Validation(format!("low above high at row {row}")));
        }
        Ok(())
    }
}

/// Date-sorted bars for one ticker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickerSeries {
    pub ticker: String,
    bars: Vec<Bar>,
}

impl TickerSeries {
    /// Sorts by date and validates every bar. `rows` carries the source row
    /// number of each bar for error messages; pass `None` to number bars
    /// from 1.
    pub fn new(ticker: impl Into<String>, bars: Vec<Bar>) -> Result<Self> {
        let rows: Vec<usize> = (1..=bars.len()).collect();
        Self::with_rows(ticker.into(), bars, rows)
    }

    pub(crate) fn with_rows(ticker: String, bars: Vec<Bar>, rows: Vec<usize>) -> Result<Self> {
        for (bar, row) in bars.iter().zip(&rows) {
            bar.validate(*row)?;
        }
        let mut indexed: Vec<(Bar, usize)> = bars.into_iter().zip(rows).collect();
        indexed.sort_by_key(|(b, _)| b.date);
        for w in indexed.windows(2) {
            if w[0].0.date == w[1].0.date {
                return Err(Error::DuplicateDate {
                    date: w[1].0.date.to_string(),
                    row: w[0].1.max(w[1].1),
                });
            }
        }
        Ok(TickerSeries {
            ticker,
            bars: indexed.into_iter().map(|(b, _)| b).collect(),
        })
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn adjusted_closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.adjusted_close).collect()
    }
}

/// The macro series the pipeline knows how to ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroName {
    ConsumerSentiment,
    Cpi,
    DurableGoods,
    FedFunds,
    Gdp,
    Inflation,
    RetailSales,
    Yield10y,
    Yield5y,
    Yield30y,
    Unemployment,
    MarketValue,
}

impl MacroName {
    pub const ALL: [MacroName; 12] = [
        MacroName::ConsumerSentiment,
        MacroName::Cpi,
        MacroName::DurableGoods,
        MacroName::FedFunds,
        MacroName::Gdp,
        MacroName::Inflation,
        MacroName::RetailSales,
        MacroName::Yield10y,
        MacroName::Yield5y,
        MacroName::Yield30y,
        MacroName::Unemployment,
        MacroName::MarketValue,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MacroName::ConsumerSentiment => "consumer_sentiment",
            MacroName::Cpi => "cpi",
            MacroName::DurableGoods => "durable_goods",
            MacroName::FedFunds => "fed_funds",
            MacroName::Gdp => "gdp",
            MacroName::Inflation => "inflation",
            MacroName::RetailSales => "retail_sales",
            MacroName::Yield10y => "yield_10y",
            MacroName::Yield5y => "yield_5y",
            MacroName::Yield30y => "yield_30y",
            MacroName::Unemployment => "unemployment",
            MacroName::MarketValue => "market_value",
        }
    }
}

impl fmt::Display for MacroName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MacroName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MacroName::ALL
            .iter()
            .copied()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownSeries(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroObservation {
    pub date: NaiveDate,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroSeries {
    pub name: MacroName,
    observations: Vec<MacroObservation>,
}

impl MacroSeries {
    pub fn new(name: MacroName, mut observations: Vec<MacroObservation>) -> Result<Self> {
        if let Some(o) = observations.iter().find(|o| !o.value.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value in '{name}' at {}",
                o.date
            )));
        }
        observations.sort_by_key(|o| o.date);
        if let Some(w) = observations.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::DuplicateDate {
                date: w[0].date.to_string(),
                row: 0,
            });
        }
        Ok(MacroSeries { name, observations })
    }

    pub fn observations(&self) -> &[MacroObservation] {
        &self.observations
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.observations.first().map(|o| o.date)
    }
}

/// Company fundamentals as of one date.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalsRecord {
    pub date: NaiveDate,
    pub eps: f64,
    pub dividends_per_share: f64,
    pub book_value_per_share: f64,
    pub net_income: f64,
    /// Annual earnings growth as a decimal fraction (0.10 = 10%).
    pub earnings_growth_rate: f64,
}
