//! `dlab`: command-line front end for the downturn analysis pipeline.

mod analysis;
mod config;
mod data;
mod manifest;
mod trading;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde_json::json;

use dlab_core::models::ResampleMode;

use config::RunConfig;

/// Bad invocation or configuration; exits with code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "dlab", version, about = "Downturn analysis pipeline")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Directory with `{TICKER}.csv` bar files (and `macro/`).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated ticker list.
    #[arg(long, global = true, value_delimiter = ',')]
    tickers: Option<Vec<String>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download daily bars into the cache directory.
    Fetch {
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
    /// Merge bar and macro CSVs into `panel.csv`.
    Ingest {
        #[arg(long)]
        macro_dir: Option<PathBuf>,
        #[arg(long)]
        years: Option<u32>,
    },
    /// Add technical indicator columns.
    Indicators,
    /// Detect drawdown episodes and add the binary target.
    Label {
        #[arg(long = "ticker")]
        tickers: Vec<String>,
        #[arg(long)]
        depth: Option<f64>,
        #[arg(long)]
        lookahead: Option<usize>,
        #[arg(long)]
        min_duration: Option<usize>,
    },
    /// Correlation matrix of one ticker's features and the macro series.
    Correlate {
        #[arg(long)]
        ticker: Option<String>,
    },
    /// k-means sweep with elbow selection.
    Cluster {
        /// Inclusive range as `MIN:MAX`.
        #[arg(long, value_parser = parse_k_range)]
        k_range: Option<(usize, usize)>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// CSV with a label column followed by numeric features.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// OLS of a price column on indicators and macro series.
    Regress {
        #[arg(long)]
        ticker: Option<String>,
        #[arg(long)]
        target: Option<String>,
    },
    /// Logistic downturn classifier, trained on one ticker and tested on another.
    Classify {
        #[arg(long)]
        train_ticker: Option<String>,
        #[arg(long)]
        test_ticker: Option<String>,
        #[arg(long)]
        resample: Option<ResampleMode>,
        #[arg(long)]
        stepwise: bool,
        #[arg(long)]
        prune_alpha: Option<f64>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Trade the classifier signal against buy-and-hold and a random trader.
    Backtest {
        #[arg(long)]
        ticker: Option<String>,
        #[arg(long)]
        trade_probability: Option<f64>,
        #[arg(long)]
        exit_threshold: Option<f64>,
        #[arg(long)]
        reentry_threshold: Option<f64>,
        #[arg(long)]
        cost_bps: Option<f64>,
    },
    /// Collect tables and curves into `report/`.
    Report,
    /// Ingest through report in one go.
    Pipeline {
        #[arg(long)]
        trade_probability: Option<f64>,
    },
}

fn parse_k_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected MIN:MAX")?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a == 0 || a > b {
        return Err("need 1 <= MIN <= MAX".into());
    }
    Ok((a, b))
}

fn require_seed(cfg: &RunConfig, command: &str) -> Result<u64> {
    cfg.seed
        .ok_or_else(|| UsageError(format!("{command} needs --seed (or \"seed\" in the config)")).into())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    if let Some(d) = cli.data {
        cfg.data_dir = d;
    }
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if let Some(t) = cli.tickers {
        cfg.tickers = t;
    }
    match cli.command {
        Command::Fetch { cache_dir } => data::fetch(&cfg, cache_dir),
        Command::Ingest { macro_dir, years } => {
            if macro_dir.is_some() {
                cfg.macro_dir = macro_dir;
            }
            if years.is_some() {
                cfg.years = years;
            }
            data::ingest(&cfg)
        }
        Command::Indicators => data::indicators(&cfg),
        Command::Label {
            tickers,
            depth,
            lookahead,
            min_duration,
        } => {
            if let Some(d) = depth {
                cfg.drawdown.target_depth = d;
            }
            if let Some(l) = lookahead {
                cfg.drawdown.lookahead = l;
            }
            if let Some(m) = min_duration {
                cfg.drawdown.min_duration = m;
            }
            data::label(&cfg, &tickers)
        }
        Command::Correlate { ticker } => data::correlate(&cfg, ticker),
        Command::Cluster {
            k_range,
            restarts,
            k,
            matrix,
        } => {
            if let Some((a, b)) = k_range {
                cfg.cluster.k_min = a;
                cfg.cluster.k_max = b;
            }
            if let Some(r) = restarts {
                cfg.cluster.restarts = r;
            }
            if k.is_some() {
                cfg.cluster.k = k;
            }
            if matrix.is_some() {
                cfg.cluster.matrix = matrix;
            }
            let seed = require_seed(&cfg, "cluster")?;
            analysis::cluster(&cfg, seed)
        }
        Command::Regress { ticker, target } => {
            if ticker.is_some() {
                cfg.regression.ticker = ticker;
            }
            if let Some(t) = target {
                cfg.regression.target = t;
            }
            analysis::regress(&cfg)
        }
        Command::Classify {
            train_ticker,
            test_ticker,
            resample,
            stepwise,
            prune_alpha,
            threshold,
        } => {
            if let Some(t) = train_ticker {
                cfg.train_ticker = t;
            }
            if let Some(t) = test_ticker {
                cfg.test_ticker = t;
            }
            if let Some(r) = resample {
                cfg.classifier.resample = r;
            }
            if stepwise {
                cfg.classifier.stepwise = true;
            }
            if prune_alpha.is_some() {
                cfg.classifier.prune_alpha = prune_alpha;
            }
            if let Some(t) = threshold {
                cfg.classifier.decision_threshold = t;
            }
            let seed = require_seed(&cfg, "classify")?;
            analysis::classify(&cfg, seed)
        }
        Command::Backtest {
            ticker,
            trade_probability,
            exit_threshold,
            reentry_threshold,
            cost_bps,
        } => {
            if let Some(t) = ticker {
                cfg.test_ticker = t;
            }
            if trade_probability.is_some() {
                cfg.trade_probability = trade_probability;
            }
            if let Some(v) = exit_threshold {
                cfg.strategy.exit_threshold = v;
            }
            if let Some(v) = reentry_threshold {
                cfg.strategy.reentry_threshold = v;
            }
            if let Some(v) = cost_bps {
                cfg.strategy.cost_bps = v;
            }
            let seed = require_seed(&cfg, "backtest")?;
            trading::backtest(&cfg, seed)
        }
        Command::Report => trading::report(&cfg),
        Command::Pipeline { trade_probability } => {
            if trade_probability.is_some() {
                cfg.trade_probability = trade_probability;
            }
            let seed = require_seed(&cfg, "pipeline")?;
            trading::pipeline(&cfg, seed)
        }
    }
}

fn report_error(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!(
        "{}",
        json!({ "error": kind, "message": message, "exit_code": code })
    );
    ExitCode::from(code)
}

fn classify_error(err: &anyhow::Error) -> (&'static str, u8) {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return ("usage", 2);
        }
        if let Some(e) = cause.downcast_ref::<dlab_core::Error>() {
            return if e.is_numeric() {
                ("numeric", 4)
            } else {
                ("data", 3)
            };
        }
    }
    ("data", 3)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.render().to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ")
                .to_string();
            return report_error("usage", first, 2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = classify_error(&e);
            report_error(kind, format!("{e:#}"), code)
        }
    }
}
