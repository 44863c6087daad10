//! Date-keyed join of ticker bars and macro series.

use std::collections::{BTreeSet, HashSet};

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use super::csv_io::parse_date;
use super::types::{MacroSeries, TickerSeries};
use crate::error::{Error, Result};

/// Fields copied from each bar into the panel, in column order.
pub const BAR_FIELDS: [&str; 6] = ["open", "high", "low", "close", "adjusted_close", "volume"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Daily,
    /// Lower-frequency series forward-filled onto the date axis.
    Macro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub ticker: Option<String>,
    pub feature: String,
    pub frequency: Frequency,
    /// `None` marks an undefined cell (warm-up, missing bar).
    pub values: Vec<Option<f64>>,
}

impl Column {
    pub fn ticker_column(ticker: &str, feature: &str, values: Vec<Option<f64>>) -> Self {
        Column {
            name: format!("{ticker}.{feature}"),
            ticker: Some(ticker.to_string()),
            feature: feature.to_string(),
            frequency: Frequency::Daily,
            values,
        }
    }

    pub fn macro_column(name: &str, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.to_string(),
            ticker: None,
            feature: name.to_string(),
            frequency: Frequency::Macro,
            values,
        }
    }

    /// Infers metadata from a `{ticker}.{feature}` or bare macro name.
    pub fn from_name(name: &str, values: Vec<Option<f64>>) -> Self {
        match name.split_once('.') {
            Some((t, f)) => Column::ticker_column(t, f, values),
            None => Column::macro_column(name, values),
        }
    }
}

/// The merged analysis table: one row per date, one column per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPanel {
    dates: Vec<NaiveDate>,
    columns: Vec<Column>,
}

impl AlignedPanel {
    pub fn new(dates: Vec<NaiveDate>, columns: Vec<Column>) -> Result<Self> {
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "panel dates must be strictly increasing".into(),
            ));
        }
        let mut names = HashSet::new();
        for c in &columns {
            if c.values.len() != dates.len() {
                return Err(Error::Validation(format!(
                    "column '{}' has {} values for {} dates",
                    c.name,
                    c.values.len(),
                    dates.len()
                )));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::DuplicateTerm(c.name.clone()));
            }
        }
        Ok(AlignedPanel { dates, columns })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn require(&self, name: &str) -> Result<&Column> {
        self.column(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Column values with undefined cells rejected.
    pub fn dense(&self, name: &str) -> Result<Vec<f64>> {
        let col = self.require(name)?;
        col.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| Error::Validation(format!("column '{name}' undefined at {}", self.dates[i])))
            })
            .collect()
    }

    pub fn tickers(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.columns.iter().filter_map(|c| c.ticker.as_deref()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    pub fn push_column(&mut self, column: Column) -> Result<()> {
        if column.values.len() != self.dates.len() {
            return Err(Error::LengthMismatch {
                left: column.values.len(),
                right: self.dates.len(),
            });
        }
        if self.column(&column.name).is_some() {
            return Err(Error::DuplicateTerm(column.name));
        }
        self.columns.push(column);
        Ok(())
    }

    /// Rows `range` of every column.
    pub fn slice(&self, range: std::ops::Range<usize>) -> AlignedPanel {
        AlignedPanel {
            dates: self.dates[range.clone()].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    values: c.values[range.clone()].to_vec(),
                    ..c.clone()
                })
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("date");
        for c in &self.columns {
            out.push(',');
            out.push_str(&c.name);
        }
        out.push('\n');
        for (i, d) in self.dates.iter().enumerate() {
            out.push_str(&d.to_string());
            for c in &self.columns {
                out.push(',');
                if let Some(v) = c.values[i] {
                    out.push_str(&v.to_string());
                }
            }
            out.push('\n');
        }
        out
    }

    /// Reads the format written by [`AlignedPanel::to_csv`]; empty cells are
    /// undefined.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?.clone();
        if header.get(0) != Some("date") {
            return Err(Error::parse(1, "panel header must start with 'date'"));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut dates = Vec::new();
        let mut values: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
            dates.push(parse_date(&rec[0], row)?);
            for (j, cell) in rec.iter().skip(1).enumerate() {
                let v = if cell.is_empty() {
                    None
                } else {
                    Some(cell.parse::<f64>().map_err(|_| {
                        Error::parse(row, format!("invalid number '{cell}' in '{}'", names[j]))
                    })?)
                };
                values[j].push(v);
            }
        }
        let columns = names
            .iter()
            .zip(values)
            .map(|(n, v)| Column::from_name(n, v))
            .collect();
        AlignedPanel::new(dates, columns)
    }
}

/// Value of `series` carried forward onto each date, with the date of the
/// observation it came from. `None` before the first observation.
pub fn forward_fill(series: &MacroSeries, dates: &[NaiveDate]) -> Vec<Option<(NaiveDate, f64)>> {
    let obs = series.observations();
    let mut j = 0;
    let mut current = None;
    dates
        .iter()
        .map(|d| {
            while j < obs.len() && obs[j].date <= *d {
                current = Some((obs[j].date, obs[j].value));
                j += 1;
            }
            current
        })
        .collect()
}

/// Inner-joins ticker bars on date and forward-fills each macro series.
///
/// Columns come out sorted (tickers alphabetically with fields in
/// [`BAR_FIELDS`] order, then macro series by name), so the result does not
/// depend on the order of the inputs.
pub fn align_and_merge(tickers: &[TickerSeries], macros: &[MacroSeries]) -> Result<AlignedPanel> {
    if tickers.is_empty() {
        return Err(Error::EmptyPanel("no ticker series supplied".into()));
    }
    let mut seen = HashSet::new();
    for t in tickers {
        if !seen.insert(t.ticker.as_str()) {
            return Err(Error::Validation(format!("ticker '{}' supplied twice", t.ticker)));
        }
    }
    let mut seen = HashSet::new();
    for m in macros {
        if !seen.insert(m.name) {
            return Err(Error::Validation(format!(
                "macro series '{}' supplied twice",
                m.name
            )));
        }
    }

    let mut common: BTreeSet<NaiveDate> = tickers[0].dates().into_iter().collect();
    for t in &tickers[1..] {
        let d: BTreeSet<NaiveDate> = t.dates().into_iter().collect();
        common = common.intersection(&d).copied().collect();
    }
    if common.is_empty() {
        return Err(Error::EmptyPanel("tickers share no trading dates".into()));
    }
    let dates: Vec<NaiveDate> = common.into_iter().collect();

    let mut sorted: Vec<&TickerSeries> = tickers.iter().collect();
    sorted.sort_by(|a, b| a.ticker.cmp(&b.ticker));
    let mut columns = Vec::new();
    for t in sorted {
        let rows: Vec<_> = t
            .bars()
            .iter()
            .filter(|b| dates.binary_search(&b.date).is_ok())
            .collect();
        for field in BAR_FIELDS {
            let values = rows
                .iter()
                .map(|b| {
                    Some(match field {
                        "open" => b.open,
                        "high" => b.high,
                        "low" => b.low,
                        "close" => b.close,
                        "adjusted_close" => b.adjusted_close,
                        _ => b.volume,
                    })
                })
                .collect();
            columns.push(Column::ticker_column(&t.ticker, field, values));
        }
    }

    let mut sorted_macros: Vec<&MacroSeries> = macros.iter().collect();
    sorted_macros.sort_by_key(|m| m.name.as_str());
    for m in sorted_macros {
        let filled = forward_fill(m, &dates);
        if filled[0].is_none() {
            return Err(Error::LeadingGap {
                series: m.name.to_string(),
                starts: m.first_date().map_or("never".into(), |d| d.to_string()),
                panel_start: dates[0].to_string(),
            });
        }
        let values = filled.into_iter().map(|c| c.map(|(_, v)| v)).collect();
        columns.push(Column::macro_column(m.name.as_str(), values));
    }
    AlignedPanel::new(dates, columns)
}

/// Truncates the panel to the range where every listed ticker has data, and
/// then to the trailing `trailing_years` calendar years if given.
///
/// A ticker's range runs from its first to its last defined
/// `adjusted_close`.
pub fn restrict_common_range(
    panel: &AlignedPanel,
    tickers: &[String],
    trailing_years: Option<u32>,
) -> Result<AlignedPanel> {
    if panel.is_empty() {
        return Err(Error::EmptyPanel("input panel has no rows".into()));
    }
    let mut start = 0usize;
    let mut end = panel.len();
    for t in tickers {
        let col = panel.require(&format!("{t}.adjusted_close"))?;
        let first = col.values.iter().position(Option::is_some);
        let last = col.values.iter().rposition(Option::is_some);
        match (first, last) {
            (Some(f), Some(l)) => {
                start = start.max(f);
                end = end.min(l + 1);
            }
            _ => return Err(Error::EmptyPanel(format!("ticker '{t}' has no data"))),
        }
    }
    if start >= end {
        return Err(Error::EmptyPanel("ticker date ranges do not overlap".into()));
    }
    if let Some(years) = trailing_years {
        let last = panel.dates()[end - 1];
        let cutoff = last
            .checked_sub_months(Months::new(12 * years))
            .unwrap_or(NaiveDate::MIN);
        while start < end && panel.dates()[start] <= cutoff {
            start += 1;
        }
        if start >= end {
            return Err(Error::EmptyPanel(format!("no rows in trailing {years} years")));
        }
    }
    Ok(panel.slice(start..end))
}
