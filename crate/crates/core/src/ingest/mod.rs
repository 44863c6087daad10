//! Input parsing, remote fetch and date alignment.

mod csv_io;
mod panel;
pub mod provider;
mod types;

pub use csv_io::{
    parse_macro_csv, parse_ohlcv_csv, write_macro_csv, write_ohlcv_csv, MACRO_HEADER, OHLCV_HEADER,
};
pub use panel::{
    align_and_merge, forward_fill, restrict_common_range, AlignedPanel, Column, Frequency, BAR_FIELDS,
};
pub use provider::{fetch_remote_daily, fetch_to_cache, ProviderClient, ProviderConfig};
pub use types::{Bar, FundamentalsRecord, MacroName, MacroObservation, MacroSeries, TickerSeries};
