//! backtest, report, pipeline.

use std::collections::HashMap;

use anyhow::Result;
use chrono::NaiveDate;
use serde_json::json;

use dlab_core::backtest::{run_buy_and_hold, run_random_trader, run_signal_strategy, BacktestReport};
use dlab_core::numerics::rng_stream;

use crate::analysis;
use crate::config::RunConfig;
use crate::data::{self, load_panel, pick_panel, FEATURES, LABELED, PANEL};
use crate::manifest::Run;
use crate::UsageError;

const PROBABILITIES: &str = "classify/probabilities.csv";

fn read_probabilities(run: &mut Run, cfg: &RunConfig) -> Result<(Vec<NaiveDate>, Vec<f64>)> {
    let path = pick_panel(&cfg.out_dir, &[PROBABILITIES])?;
    let text = run.read(&path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut dates = Vec::new();
    let mut probs = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let bad = |m: String| dlab_core::Error::Parse {
            row: i + 2,
            message: m,
        };
        let d = rec.get(0).unwrap_or("");
        let p = rec.get(1).unwrap_or("");
        dates.push(NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| bad(format!("bad date '{d}'")))?);
        probs.push(
            p.parse::<f64>()
                .map_err(|_| bad(format!("bad probability '{p}'")))?,
        );
    }
    Ok((dates, probs))
}

fn summarize(r: &BacktestReport) -> serde_json::Value {
    json!({
        "total_return": r.total_return,
        "final_equity": r.final_equity(),
        "max_drawdown": r.max_drawdown,
        "n_trades": r.n_trades,
    })
}

pub fn backtest(cfg: &RunConfig, seed: u64) -> Result<()> {
    let trade_probability = cfg.trade_probability.ok_or_else(|| {
        UsageError("backtest needs --trade-probability (or \"trade_probability\" in the config)".into())
    })?;
    let mut run = Run::new("backtest", &cfg.out_dir);
    let (dates, probs) = read_probabilities(&mut run, cfg)?;
    let panel = load_panel(&mut run, &pick_panel(&cfg.out_dir, &[LABELED, FEATURES, PANEL])?)?;
    let ticker = &cfg.test_ticker;
    let closes = panel.require(&format!("{ticker}.adjusted_close"))?;
    let index: HashMap<NaiveDate, usize> = panel.dates().iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let prices = dates
        .iter()
        .map(|d| {
            index
                .get(d)
                .and_then(|&i| closes.values[i])
                .ok_or_else(|| dlab_core::Error::Validation(format!("no {ticker} price on {d}")))
        })
        .collect::<std::result::Result<Vec<f64>, _>>()?;

    let signal = run_signal_strategy(&dates, &prices, &probs, &cfg.strategy)?;
    let hold = run_buy_and_hold(&dates, &prices)?;
    let random = run_random_trader(
        &dates,
        &prices,
        trade_probability,
        cfg.strategy.cost_bps,
        &mut rng_stream(seed),
    )?;
    for r in [&signal, &hold, &random] {
        run.write(&format!("backtest/equity_{}.csv", r.strategy), r.equity_csv())?;
    }
    run.write_json(
        "backtest/summary.json",
        &json!({
            "ticker": ticker,
            "start": dates.first(),
            "end": dates.last(),
            "days": dates.len(),
            "signal": summarize(&signal),
            "buy_and_hold": summarize(&hold),
            "random": summarize(&random),
            "signal_trades": signal.trades,
        }),
    )?;
    run.finish(
        Some(seed),
        &json!({ "ticker": ticker, "strategy": cfg.strategy, "trade_probability": trade_probability }),
    )
}

/// Copies the main tables and curves into `report/`.
pub fn report(cfg: &RunConfig) -> Result<()> {
    let mut run = Run::new("report", &cfg.out_dir);
    let mut wanted: Vec<String> = Vec::new();
    if let Ok(entries) = std::fs::read_dir(cfg.out_dir.join("regress")) {
        let mut tables: Vec<String> = entries
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n.ends_with(".txt"))
            .map(|n| format!("regress/{n}"))
            .collect();
        tables.sort();
        wanted.extend(tables);
    }
    wanted.extend(
        [
            "classify/table.txt",
            "classify/metrics.json",
            "classify/roc.csv",
            "cluster/elbow.csv",
            "cluster/summary.json",
            "backtest/summary.json",
            "backtest/equity_signal.csv",
            "backtest/equity_buy_and_hold.csv",
            "backtest/equity_random.csv",
        ]
        .map(String::from),
    );
    let mut included = Vec::new();
    let mut missing = Vec::new();
    for rel in wanted {
        let src = cfg.out_dir.join(&rel);
        if src.exists() {
            let text = run.read(&src)?;
            run.write(&format!("report/{}", rel.replace('/', "_")), text)?;
            included.push(rel);
        } else {
            missing.push(rel);
        }
    }
    run.write_json(
        "report/index.json",
        &json!({ "included": included, "missing": missing }),
    )?;
    run.finish(None, &json!({}))
}

pub fn pipeline(cfg: &RunConfig, seed: u64) -> Result<()> {
    data::ingest(cfg)?;
    data::indicators(cfg)?;
    data::label(cfg, &[])?;
    data::correlate(cfg, None)?;
    analysis::cluster(cfg, seed)?;
    analysis::regress(cfg)?;
    analysis::classify(cfg, seed)?;
    backtest(cfg, seed)?;
    report(cfg)
}
