use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::FundamentalsRecord;

/// Valuation ratios. `None` marks a ratio whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSet {
    pub pe: Option<f64>,
    pub peg: Option<f64>,
    pub pb: Option<f64>,
    pub dpr: Option<f64>,
    pub dividend_yield: Option<f64>,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    let r = num / den;
    (den != 0.0 && r.is_finite()).then_some(r)
}

/// Growth enters PEG in percent: a growth rate of 0.10 divides P/E by 10.
pub fn fundamental_ratios(price: f64, f: &FundamentalsRecord) -> Result<RatioSet> {
    if !(price > 0.0) || !price.is_finite() {
        return Err(Error::Validation(format!("price {price} is not positive")));
    }
    let pe = ratio(price, f.eps);
    let peg = pe.and_then(|pe| ratio(pe, f.earnings_growth_rate * 100.0));
    Ok(RatioSet {
        pe,
        peg,
        pb: ratio(price, f.book_value_per_share),
        dpr: ratio(f.dividends_per_share, f.eps),
        dividend_yield: ratio(f.dividends_per_share, price),
    })
}
