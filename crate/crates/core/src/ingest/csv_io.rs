//! CSV readers and writers for bars and macro series.
//!
//! Row numbers in errors are 1-based physical lines, so the header is row 1
//! and the first record is row 2.

use std::collections::HashMap;

use chrono::NaiveDate;

use super::types::{Bar, MacroName, MacroObservation, MacroSeries, TickerSeries};
use crate::error::{Error, Result};

pub const OHLCV_HEADER: [&str; 7] = ["date", "open", "high", "low", "close", "adjusted_close", "volume"];
pub const MACRO_HEADER: [&str; 2] = ["date", "value"];

pub(crate) fn parse_date(s: &str, row: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| Error::parse(row, format!("invalid date '{s}'")))
}

fn parse_number(s: &str, field: &str, row: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(row, format!("invalid {field} '{s}'")))
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = rdr.headers().map_err(|e| Error::parse(1, e.to_string()))?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::parse(
            1,
            format!("header must be exactly '{}'", expected.join(",")),
        ));
    }
    Ok(())
}

pub fn parse_ohlcv_csv(ticker: &str, text: &str) -> Result<TickerSeries> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &OHLCV_HEADER)?;
    let mut bars = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        if rec.len() != OHLCV_HEADER.len() {
            return Err(Error::parse(
                row,
                format!("expected {} fields, got {}", OHLCV_HEADER.len(), rec.len()),
            ));
        }
        let bar = Bar {
            date: parse_date(&rec[0], row)?,
            open: parse_number(&rec[1], "open", row)?,
            high: parse_number(&rec[2], "high", row)?,
            low: parse_number(&rec[3], "low", row)?,
            close: parse_number(&rec[4], "close", row)?,
            adjusted_close: parse_number(&rec[5], "adjusted_close", row)?,
            volume: parse_number(&rec[6], "volume", row)?,
        };
        bars.push(bar);
        rows.push(row);
    }
    TickerSeries::with_rows(ticker.to_string(), bars, rows)
}

pub fn parse_macro_csv(name: &str, text: &str) -> Result<MacroSeries> {
    let name: MacroName = name.parse()?;
    let mut rdr = reader(text);
    check_header(&mut rdr, &MACRO_HEADER)?;
    let mut seen: HashMap<NaiveDate, usize> = HashMap::new();
    let mut observations = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::parse(row, e.to_string()))?;
        if rec.len() != 2 {
            return Err(Error::parse(row, format!("expected 2 fields, got {}", rec.len())));
        }
        let date = parse_date(&rec[0], row)?;
        let value = parse_number(&rec[1], "value", row)?;
        if !value.is_finite() {
            return Err(Error::Validation(format!("non-finite value at row {row}")));
        }
        if seen.insert(date, row).is_some() {
            return Err(Error::DuplicateDate {
                date: date.to_string(),
                row,
            });
        }
        observations.push(MacroObservation { date, value });
    }
    MacroSeries::new(name, observations)
}

pub fn write_ohlcv_csv(series: &TickerSeries) -> String {
    let mut out = OHLCV_HEADER.join(",");
    out.push('\n');
    for b in series.bars() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            b.date, b.open, b.high, b.low, b.close, b.adjusted_close, b.volume
        ));
    }
    out
}

pub fn write_macro_csv(series: &MacroSeries) -> String {
    let mut out = MACRO_HEADER.join(",");
    out.push('\n');
    for o in series.observations() {
        out.push_str(&format!("{},{}\n", o.date, o.value));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "date,open,high,low,close,adjusted_close,volume\n";

    #[test]
    fn single_row() {
        let s = parse_ohlcv_csv("T", &format!("{HEADER}2020-01-02,10,11,9,10.5,10.5,1000\n")).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.bars()[0].close, 10.5);
        assert_eq!(s.bars()[0].volume, 1000.0);
    }

    #[test]
    fn descending_input_sorted() {
        let text = format!(
            "{HEADER}2020-01-03,10,11,9,10.5,10.5,1000\n2020-01-02,10,11,9,10,10,900\n2020-01-01,10,11,9,9.5,9.5,800\n"
        );
        let s = parse_ohlcv_csv("T", &text).unwrap();
        let dates: Vec<String> = s.dates().iter().map(|d| d.to_string()).collect();
        assert_eq!(dates, ["2020-01-01", "2020-01-02", "2020-01-03"]);
    }

    #[test]
    fn negative_volume_names_row() {
        let text = format!("{HEADER}2020-01-02,10,11,9,10.5,10.5,1000\n2020-01-03,10,11,9,10.5,10.5,-5\n");
        let err = parse_ohlcv_csv("T", &text).unwrap_err();
        assert_eq!(err.to_string(), "volume negative at row 3");
    }

    #[test]
    fn malformed_fields() {
        let err = parse_ohlcv_csv("T", &format!("{HEADER}2020-01-02,ten,11,9,10.5,10.5,1\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = parse_ohlcv_csv("T", &format!("{HEADER}2020-13-02,10,11,9,10.5,10.5,1\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
        let err = parse_ohlcv_csv("T", "date,open,high,low,close,volume\n").unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn duplicate_and_inconsistent_rows() {
        let text = format!("{HEADER}2020-01-02,10,11,9,10.5,10.5,1\n2020-01-02,10,11,9,10.5,10.5,1\n");
        assert!(matches!(
            parse_ohlcv_csv("T", &text),
            Err(Error::DuplicateDate { row: 3, .. })
        ));
        let text = format!("{HEADER}2020-01-02,10,10.2,9,10.5,10.5,1\n");
        let err = parse_ohlcv_csv("T", &text).unwrap_err();
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn macro_examples() {
        let s = parse_macro_csv("cpi", "date,value\n2020-01-01,2.3\n").unwrap();
        assert_eq!(s.name, MacroName::Cpi);
        assert_eq!(s.observations().len(), 1);
        let dup = parse_macro_csv("cpi", "date,value\n2020-01-01,2.3\n2020-01-01,2.4\n");
        assert!(matches!(dup, Err(Error::DuplicateDate { row: 3, .. })));
        assert!(matches!(
            parse_macro_csv("xyz", "date,value\n"),
            Err(Error::UnknownSeries(_))
        ));
        assert!(parse_macro_csv("cpi", "date,value\n2020-01-01,NaN\n").is_err());
        assert!(parse_macro_csv("cpi", "date,value\n2020-01-01,inf\n").is_err());
    }
}
