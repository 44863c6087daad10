//! Downturn analysis toolkit.
//!
//! The crate covers the whole path from daily bars to a backtested downturn
//! signal:
//!
//! * [`ingest`] parses OHLCV and macro CSVs (or fetches bars from an
//!   Alpha-Vantage-compatible endpoint) and joins them into an
//!   [`ingest::AlignedPanel`] on the trading-date axis.
//! * [`indicators`] computes RSI, MACD, OBV, Bollinger bands, rolling
//!   dispersion, returns, beta and valuation ratios.
//! * [`drawdown`] segments prices into pullback/correction/crash episodes
//!   and produces the binary downturn target.
//! * [`numerics`] holds the QR least-squares solver, distribution functions,
//!   correlation/scaling and the seeded random stream.
//! * [`models`] fits OLS and logistic regressions, runs AIC stepwise
//!   selection, resamples imbalanced classes, clusters with k-means and
//!   scores classifiers.
//! * [`backtest`] trades the signal against buy-and-hold and a random trader.

pub mod backtest;
pub mod drawdown;
pub mod error;
pub mod indicators;
pub mod ingest;
pub mod models;
pub mod numerics;
pub mod par;

pub use error::{Error, Result};
pub use par::Exec;
