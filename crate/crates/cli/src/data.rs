//! fetch, ingest, indicators, label, correlate.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::json;

use dlab_core::drawdown::{detect_episodes, episodes_csv, label_target, threshold_counts, PULLBACK_DEPTH};
use dlab_core::indicators::add_indicator_columns;
use dlab_core::ingest::{
    align_and_merge, fetch_to_cache, parse_macro_csv, parse_ohlcv_csv, restrict_common_range, AlignedPanel,
    Column, MacroName, ProviderClient, ProviderConfig,
};
use dlab_core::numerics::correlation_matrix;
use dlab_core::Exec;

use crate::config::RunConfig;
use crate::manifest::Run;

pub const PANEL: &str = "panel.csv";
pub const FEATURES: &str = "features.csv";
pub const LABELED: &str = "labeled.csv";

/// The most processed panel present, out of the given candidates.
pub fn pick_panel(out: &Path, candidates: &[&str]) -> Result<PathBuf> {
    candidates
        .iter()
        .map(|c| out.join(c))
        .find(|p| p.exists())
        .ok_or_else(|| {
            dlab_core::Error::Validation(format!(
                "none of {} found in {}; run the earlier steps first",
                candidates.join(", "),
                out.display()
            ))
            .into()
        })
}

pub fn load_panel(run: &mut Run, path: &Path) -> Result<AlignedPanel> {
    let text = run.read(path)?;
    Ok(AlignedPanel::from_csv(&text)?)
}

/// Columns of one ticker with the prefix removed, plus every macro column.
pub fn ticker_view(panel: &AlignedPanel, ticker: &str) -> Result<AlignedPanel> {
    if !panel.tickers().iter().any(|t| t == ticker) {
        return Err(dlab_core::Error::Validation(format!("ticker '{ticker}' not in panel")).into());
    }
    let cols = panel
        .columns()
        .iter()
        .filter_map(|c| match &c.ticker {
            Some(t) if t == ticker => Some(Column {
                name: c.feature.clone(),
                ticker: None,
                ..c.clone()
            }),
            Some(_) => None,
            None => Some(c.clone()),
        })
        .collect();
    Ok(AlignedPanel::new(panel.dates().to_vec(), cols)?)
}

pub fn fetch(cfg: &RunConfig, cache_dir: Option<PathBuf>) -> Result<()> {
    let cache = cache_dir.unwrap_or_else(|| cfg.data_dir.clone());
    let client = ProviderClient::http(ProviderConfig {
        base_url: cfg.provider_base_url.clone(),
        ..ProviderConfig::default()
    });
    let mut run = Run::new("fetch", &cfg.out_dir);
    for t in &cfg.tickers {
        let path = fetch_to_cache(t, &client, &cache)?;
        let text = std::fs::read(&path)?;
        // Re-record through the manifest so the cache file is hashed.
        run.write_at(&path, text)?;
    }
    run.finish(
        None,
        &json!({
            "tickers": cfg.tickers,
            "cache_dir": cache.to_string_lossy(),
            "provider_base_url": cfg.provider_base_url,
        }),
    )
}

pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let mut run = Run::new("ingest", &cfg.out_dir);
    let mut series = Vec::with_capacity(cfg.tickers.len());
    for t in &cfg.tickers {
        let path = cfg.data_dir.join(format!("{t}.csv"));
        let text = run.read(&path)?;
        series.push(parse_ohlcv_csv(t, &text).with_context(|| format!("parsing {}", path.display()))?);
    }
    let macro_dir = cfg.macro_dir();
    let mut macros = Vec::new();
    let mut used = Vec::new();
    for name in MacroName::ALL {
        let path = macro_dir.join(format!("{}.csv", name.as_str()));
        if path.exists() {
            let text = run.read(&path)?;
            macros.push(
                parse_macro_csv(name.as_str(), &text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            );
            used.push(name.as_str());
        }
    }
    let merged = align_and_merge(&series, &macros)?;
    let panel = restrict_common_range(&merged, &cfg.tickers, cfg.years)?;
    run.write(PANEL, panel.to_csv())?;
    run.finish(
        None,
        &json!({
            "tickers": cfg.tickers,
            "macros": used,
            "years": cfg.years,
            "rows": panel.len(),
        }),
    )
}

pub fn indicators(cfg: &RunConfig) -> Result<()> {
    let mut run = Run::new("indicators", &cfg.out_dir);
    let mut panel = load_panel(&mut run, &cfg.out_dir.join(PANEL))?;
    let tickers = panel.tickers();
    add_indicator_columns(&mut panel, &tickers, &cfg.indicators, Exec::default())?;
    run.write(FEATURES, panel.to_csv())?;
    run.finish(None, &json!({ "tickers": tickers, "params": cfg.indicators }))
}

pub fn label(cfg: &RunConfig, only: &[String]) -> Result<()> {
    let mut run = Run::new("label", &cfg.out_dir);
    let input = pick_panel(&cfg.out_dir, &[FEATURES, PANEL])?;
    let mut panel = load_panel(&mut run, &input)?;
    let tickers = if only.is_empty() {
        panel.tickers()
    } else {
        only.to_vec()
    };
    let d = &cfg.drawdown;
    let mut counts = BTreeMap::new();
    for t in &tickers {
        let prices = panel
            .dense(&format!("{t}.adjusted_close"))
            .with_context(|| format!("ticker {t}"))?;
        let episodes = detect_episodes(&prices, PULLBACK_DEPTH)?;
        run.write(
            &format!("labels/{t}.episodes.csv"),
            episodes_csv(panel.dates(), &episodes),
        )?;
        let target = label_target(&prices, d.target_depth, d.lookahead, d.min_duration)?;
        counts.insert(t.clone(), threshold_counts(&prices)?);
        panel.push_column(Column::ticker_column(
            t,
            "target",
            target.into_iter().map(|v| Some(f64::from(v))).collect(),
        ))?;
    }
    run.write_json("labels/threshold_counts.json", &counts)?;
    run.write(LABELED, panel.to_csv())?;
    run.finish(None, &json!({ "tickers": tickers, "drawdown": d }))
}

/// Ticker columns (beta excluded for its long warm-up) and macros, over the
/// rows where all of them are defined. Constant columns are left out.
pub fn correlate(cfg: &RunConfig, ticker: Option<String>) -> Result<()> {
    let ticker = ticker.unwrap_or_else(|| cfg.train_ticker.clone());
    let mut run = Run::new("correlate", &cfg.out_dir);
    let input = pick_panel(&cfg.out_dir, &[LABELED, FEATURES, PANEL])?;
    let panel = load_panel(&mut run, &input)?;
    let view = ticker_view(&panel, &ticker)?;
    let cols: Vec<&Column> = view
        .columns()
        .iter()
        .filter(|c| c.name != "beta" && c.name != "target")
        .collect();
    let rows: Vec<usize> = (0..view.len())
        .filter(|&i| cols.iter().all(|c| c.values[i].is_some()))
        .collect();
    if rows.len() < 3 {
        return Err(dlab_core::Error::TooShort {
            needed: 3,
            got: rows.len(),
        }
        .into());
    }
    let mut named = Vec::new();
    let mut constant = Vec::new();
    for c in cols {
        let v: Vec<f64> = rows.iter().map(|&i| c.values[i].expect("filtered")).collect();
        if v.iter().all(|x| *x == v[0]) {
            constant.push(c.name.clone());
        } else {
            named.push((c.name.clone(), v));
        }
    }
    if named.len() < 2 {
        return Err(
            dlab_core::Error::Validation(format!("fewer than two usable columns for {ticker}")).into(),
        );
    }
    let m = correlation_matrix(&named)?;
    let mut csv = String::from("column");
    for n in &m.names {
        csv.push(',');
        csv.push_str(n);
    }
    csv.push('\n');
    for (n, row) in m.names.iter().zip(&m.values) {
        csv.push_str(n);
        for v in row {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    run.write(&format!("correlation/{ticker}.csv"), csv)?;
    run.finish(
        None,
        &json!({ "ticker": ticker, "rows": rows.len(), "excluded_constant": constant }),
    )
}
