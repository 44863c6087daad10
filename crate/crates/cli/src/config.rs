use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use dlab_core::backtest::StrategyConfig;
use dlab_core::indicators::IndicatorParams;
use dlab_core::models::{FeatureSpec, ResampleMode};

/// The 29 symbols of the study's technology panel.
pub const DEFAULT_TICKERS: [&str; 29] = [
    "GLW", "IBM", "MSI", "TXN", "APH", "HPQ", "ADP", "NXPI", "IT", "STX", "V", "TER", "AVGO", "BR", "ADI",
    "MA", "TYL", "MU", "TRMB", "ORCL", "AMAT", "FIS", "ANSS", "WDC", "PAYX", "MSFT", "KLAC", "JKHY", "AAPL",
];

/// Table 2 regressors, as ticker-relative or macro column names.
pub const REGRESSION_BASES: [&str; 8] = [
    "rsi",
    "macd",
    "market_value",
    "cpi",
    "inflation",
    "unemployment",
    "gdp",
    "yield_10y",
];

/// Table 3 variables minus `macd_hist` and `bb_middle`, which are exact
/// linear combinations of other columns.
pub const CLASSIFIER_BASES: [&str; 19] = [
    "consumer_sentiment",
    "cpi",
    "durable_goods",
    "fed_funds",
    "gdp",
    "inflation",
    "retail_sales",
    "yield_10y",
    "yield_5y",
    "obv",
    "macd",
    "macd_signal",
    "bb_lower",
    "bb_upper",
    "open",
    "high",
    "close",
    "volume",
    "return",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrawdownSection {
    pub target_depth: f64,
    pub lookahead: usize,
    pub min_duration: usize,
}

impl Default for DrawdownSection {
    fn default() -> Self {
        DrawdownSection {
            target_depth: 0.10,
            lookahead: 0,
            min_duration: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionSection {
    pub ticker: Option<String>,
    pub target: String,
    pub bases: Vec<String>,
}

impl Default for RegressionSection {
    fn default() -> Self {
        RegressionSection {
            ticker: None,
            target: "adjusted_close".into(),
            bases: REGRESSION_BASES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSection {
    /// `None` uses [`CLASSIFIER_BASES`], skipping columns the panel lacks.
    pub features: Option<FeatureSpec>,
    pub resample: ResampleMode,
    pub stepwise: bool,
    pub prune_alpha: Option<f64>,
    pub decision_threshold: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClassifierSection {
    fn default() -> Self {
        ClassifierSection {
            features: None,
            resample: ResampleMode::Up,
            stepwise: false,
            prune_alpha: None,
            decision_threshold: 0.5,
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub k: Option<usize>,
    pub matrix: Option<PathBuf>,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection {
            k_min: 2,
            k_max: 10,
            restarts: 10,
            k: None,
            matrix: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    /// Defaults to `{data_dir}/macro`.
    pub macro_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub provider_base_url: String,
    pub tickers: Vec<String>,
    /// Trailing window applied after the common-range cut.
    pub years: Option<u32>,
    pub indicators: IndicatorParams,
    pub drawdown: DrawdownSection,
    pub regression: RegressionSection,
    pub classifier: ClassifierSection,
    pub train_ticker: String,
    pub test_ticker: String,
    pub cluster: ClusterSection,
    pub strategy: StrategyConfig,
    pub trade_probability: Option<f64>,
    pub seed: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: "data".into(),
            macro_dir: None,
            out_dir: "out".into(),
            provider_base_url: "https://www.alphavantage.co".into(),
            tickers: DEFAULT_TICKERS.iter().map(|s| s.to_string()).collect(),
            years: Some(40),
            indicators: IndicatorParams::default(),
            drawdown: DrawdownSection::default(),
            regression: RegressionSection::default(),
            classifier: ClassifierSection::default(),
            train_ticker: "IBM".into(),
            test_ticker: "MSFT".into(),
            cluster: ClusterSection::default(),
            strategy: StrategyConfig::default(),
            trade_probability: None,
            seed: None,
        }
    }
}

impl RunConfig {
    /// Reads a JSON config; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| crate::UsageError(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        anchor(&mut cfg.data_dir);
        anchor(&mut cfg.out_dir);
        if let Some(m) = cfg.macro_dir.as_mut() {
            anchor(m);
        }
        if let Some(m) = cfg.cluster.matrix.as_mut() {
            anchor(m);
        }
        Ok(cfg)
    }

    pub fn macro_dir(&self) -> PathBuf {
        self.macro_dir
            .clone()
            .unwrap_or_else(|| self.data_dir.join("macro"))
    }
}
