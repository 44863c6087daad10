//! cluster, regress, classify.

use std::path::Path;

use anyhow::{Context, Result};
use serde_json::json;

use dlab_core::drawdown::label_target;
use dlab_core::ingest::{AlignedPanel, Column};
use dlab_core::models::{
    backward_stepwise_aic, build_feature_matrix, classification_metrics, fit_logistic, fit_ols, kmeans_sweep,
    pvalue_prune, resample, roc_auc, FeatureSpec, FitSummary, KMeansOptions, LogisticFit, LogisticOptions,
    INTERCEPT,
};
use dlab_core::numerics::{rng_stream, zscore_columns, Matrix};
use dlab_core::Exec;

use crate::config::{RunConfig, CLASSIFIER_BASES, REGRESSION_BASES};
use crate::data::{load_panel, pick_panel, ticker_view, FEATURES, LABELED, PANEL};
use crate::manifest::Run;
use crate::UsageError;

/// Rows labelled by the first column, numeric features after it.
fn read_matrix(run: &mut Run, path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<Vec<f64>>)> {
    let text = run.read(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().skip(1).map(str::to_string).collect();
    if header.is_empty() {
        return Err(dlab_core::Error::Validation(format!("{}: no feature columns", path.display())).into());
    }
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() + 1 {
            return Err(dlab_core::Error::Parse {
                row: i + 2,
                message: format!("expected {} fields, got {}", header.len() + 1, rec.len()),
            }
            .into());
        }
        labels.push(rec[0].to_string());
        let row = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| dlab_core::Error::Parse {
                        row: i + 2,
                        message: format!("bad number '{f}'"),
                    })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok((labels, header, rows))
}

/// One row per ticker, one column per date holding that day's return.
fn returns_matrix(panel: &AlignedPanel, tickers: &[String]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut series = Vec::with_capacity(tickers.len());
    for t in tickers {
        let p = panel.dense(&format!("{t}.adjusted_close"))?;
        series.push(p.windows(2).map(|w| w[1] / w[0] - 1.0).collect::<Vec<_>>());
    }
    let names = panel.dates()[1..].iter().map(|d| d.to_string()).collect();
    Ok((names, series))
}

pub fn cluster(cfg: &RunConfig, seed: u64) -> Result<()> {
    let mut run = Run::new("cluster", &cfg.out_dir);
    let c = &cfg.cluster;
    let (labels, names, rows) = match &c.matrix {
        Some(path) => read_matrix(&mut run, path)?,
        None => {
            let panel = load_panel(&mut run, &pick_panel(&cfg.out_dir, &[PANEL])?)?;
            let tickers = panel.tickers();
            let (names, rows) = returns_matrix(&panel, &tickers)?;
            (tickers, names, rows)
        }
    };
    let n = rows.len();
    if n < 2 {
        return Err(dlab_core::Error::TooShort { needed: 2, got: n }.into());
    }
    // Columns with no spread across rows carry no information and cannot be scaled.
    let keep: Vec<usize> = (0..names.len())
        .filter(|&j| rows.iter().any(|r| r[j] != rows[0][j]))
        .collect();
    let dropped: Vec<&str> = (0..names.len())
        .filter(|j| !keep.contains(j))
        .map(|j| names[j].as_str())
        .collect();
    if keep.is_empty() {
        return Err(dlab_core::Error::Validation("every feature column is constant".into()).into());
    }
    let kept_names: Vec<String> = keep.iter().map(|&j| names[j].clone()).collect();
    let m = Matrix::from_rows(&rows)?.select_columns(&keep);
    let (scaled, _) = zscore_columns(&m, &kept_names)?;

    let k_max = c.k_max.min(n);
    if c.k_min > k_max {
        return Err(UsageError(format!("k range {}:{} is empty for {n} rows", c.k_min, c.k_max)).into());
    }
    let mut report = kmeans_sweep(
        &scaled,
        c.k_min..=k_max,
        c.restarts,
        seed,
        &KMeansOptions::default(),
        Exec::default(),
    )?;
    if let Some(k) = c.k {
        report = report.with_override(k)?;
    }
    let best = report.selected();
    let mut assignments = String::from("label,cluster\n");
    for (l, a) in labels.iter().zip(&best.assignments) {
        assignments.push_str(&format!("{l},{a}\n"));
    }
    let mut sizes = vec![0usize; best.k];
    for a in &best.assignments {
        sizes[*a] += 1;
    }
    run.write("cluster/elbow.csv", report.to_csv())?;
    run.write("cluster/assignments.csv", assignments)?;
    run.write_json(
        "cluster/summary.json",
        &json!({
            "rows": n,
            "columns": kept_names.len(),
            "dropped_constant": dropped,
            "k_range": [c.k_min, k_max],
            "selected_k": report.selected_k,
            "rule": report.rule,
            "low_confidence": report.low_confidence,
            "wcss": report.wcss,
            "cluster_sizes": sizes,
        }),
    )?;
    run.finish(
        Some(seed),
        &json!({ "k_min": c.k_min, "k_max": k_max, "restarts": c.restarts, "k": c.k, "matrix": c.matrix }),
    )
}

/// Default base names that the view lacks are skipped; explicit ones are not.
fn present_bases(view: &AlignedPanel, wanted: &[String], defaulted: bool) -> (Vec<String>, Vec<String>) {
    if !defaulted {
        return (wanted.to_vec(), Vec::new());
    }
    wanted.iter().cloned().partition(|b| view.column(b).is_some())
}

pub fn regress(cfg: &RunConfig) -> Result<()> {
    let mut run = Run::new("regress", &cfg.out_dir);
    let r = &cfg.regression;
    let ticker = r.ticker.clone().unwrap_or_else(|| cfg.train_ticker.clone());
    let panel = load_panel(&mut run, &pick_panel(&cfg.out_dir, &[LABELED, FEATURES, PANEL])?)?;
    let view = ticker_view(&panel, &ticker)?;
    let defaulted = r.bases.iter().map(String::as_str).eq(REGRESSION_BASES);
    let (bases, skipped) = present_bases(&view, &r.bases, defaulted);
    let spec = FeatureSpec::new(bases);
    let fm = build_feature_matrix(&view, &spec, &[r.target.as_str()])?;
    let target = view.require(&r.target)?;
    let y: Vec<f64> = fm
        .rows
        .iter()
        .map(|&i| target.values[i].expect("required"))
        .collect();
    let fit = fit_ols(&fm.matrix, &y, &fm.terms)?;
    let mut summary = FitSummary::from_ols(&fit, &format!("{ticker} {}", r.target));
    if r.target == "adjusted_close" {
        summary = summary.with_note("dependent variable is the adjusted close price level");
    }
    if !skipped.is_empty() {
        summary = summary.with_note(format!("not in panel, skipped: {}", skipped.join(", ")));
    }
    run.write(&format!("regress/{ticker}.txt"), summary.to_text_table())?;
    run.write_json(&format!("regress/{ticker}.json"), &summary)?;
    run.finish(
        None,
        &json!({
            "ticker": ticker,
            "target": r.target,
            "terms": fm.terms,
            "excluded_rows": fm.excluded,
        }),
    )
}

/// The ticker's view with a `target` column, computed if the panel lacks one.
fn labeled_view(panel: &AlignedPanel, ticker: &str, cfg: &RunConfig) -> Result<AlignedPanel> {
    let mut view = ticker_view(panel, ticker)?;
    if view.column("target").is_none() {
        let prices = view
            .dense("adjusted_close")
            .with_context(|| format!("ticker {ticker}"))?;
        let d = &cfg.drawdown;
        let target = label_target(&prices, d.target_depth, d.lookahead, d.min_duration)?;
        view.push_column(Column::macro_column(
            "target",
            target.into_iter().map(|v| Some(f64::from(v))).collect(),
        ))?;
    }
    Ok(view)
}

fn target_of(view: &AlignedPanel, rows: &[usize]) -> Vec<f64> {
    let col = view.column("target").expect("labeled view");
    rows.iter().map(|&i| col.values[i].expect("required")).collect()
}

pub fn classify(cfg: &RunConfig, seed: u64) -> Result<()> {
    let mut run = Run::new("classify", &cfg.out_dir);
    let c = &cfg.classifier;
    let panel = load_panel(&mut run, &pick_panel(&cfg.out_dir, &[LABELED, FEATURES, PANEL])?)?;
    let train = labeled_view(&panel, &cfg.train_ticker, cfg)?;
    let test = labeled_view(&panel, &cfg.test_ticker, cfg)?;

    let mut notes = Vec::new();
    let spec = match &c.features {
        Some(s) => s.clone(),
        None => {
            let wanted: Vec<String> = CLASSIFIER_BASES.iter().map(|s| s.to_string()).collect();
            let (bases, skipped) = present_bases(&train, &wanted, true);
            if !skipped.is_empty() {
                notes.push(format!("not in panel, skipped: {}", skipped.join(", ")));
            }
            FeatureSpec::new(bases)
        }
    };
    let fm = build_feature_matrix(&train, &spec, &["target"])?;
    let y = target_of(&train, &fm.rows);
    let (x, y) = resample(&fm.matrix, &y, c.resample, &mut rng_stream(seed))?;

    let opts = LogisticOptions {
        max_iter: c.max_iter,
        tol: c.tol,
    };
    let protected: Vec<String> = if spec.intercept {
        vec![INTERCEPT.to_string()]
    } else {
        Vec::new()
    };
    let (mut fit, steps): (LogisticFit, _) = if c.stepwise {
        backward_stepwise_aic(&x, &y, &fm.terms, &protected, &opts, Exec::default())?
    } else {
        (fit_logistic(&x, &y, &fm.terms, &opts)?, Vec::new())
    };
    let mut pruned = Vec::new();
    if let Some(alpha) = c.prune_alpha {
        let cols = term_positions(&fm.terms, &fit.terms);
        let (f, removed) = pvalue_prune(&x.select_columns(&cols), &y, &fit.terms, &protected, alpha, &opts)?;
        fit = f;
        pruned = removed;
    }

    let tm = build_feature_matrix(&test, &spec, &["target"])?;
    let x_test = tm.matrix.select_columns(&term_positions(&tm.terms, &fit.terms));
    let labels: Vec<u8> = target_of(&test, &tm.rows).into_iter().map(|v| v as u8).collect();
    let probs = fit.predict_proba(&x_test)?;
    let predictions: Vec<u8> = probs
        .iter()
        .map(|p| u8::from(*p >= c.decision_threshold))
        .collect();
    let metrics = classification_metrics(&labels, &predictions)?;

    let mut summary = FitSummary::from_logistic(&fit, &format!("{} target", cfg.train_ticker));
    for n in &notes {
        summary = summary.with_note(n.clone());
    }
    let auc = match roc_auc(&labels, &probs) {
        Ok(curve) => {
            run.write("classify/roc.csv", curve.to_csv())?;
            Some(curve.auc)
        }
        Err(dlab_core::Error::SingleClass) => {
            summary = summary.with_note("test set has a single class; ROC not computed");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut csv = String::from("date,probability,label\n");
    for ((&i, p), l) in tm.rows.iter().zip(&probs).zip(&labels) {
        csv.push_str(&format!("{},{p},{l}\n", test.dates()[i]));
    }

    run.write("classify/table.txt", summary.to_text_table())?;
    run.write_json(
        "classify/fit.json",
        &json!({ "summary": summary, "stepwise": steps, "pruned": pruned }),
    )?;
    run.write_json(
        "classify/metrics.json",
        &json!({
            "train_ticker": cfg.train_ticker,
            "test_ticker": cfg.test_ticker,
            "decision_threshold": c.decision_threshold,
            "train_rows": fm.rows.len(),
            "train_rows_resampled": y.len(),
            "test_rows": tm.rows.len(),
            "metrics": metrics,
            "auc": auc,
        }),
    )?;
    run.write("classify/probabilities.csv", csv)?;
    run.finish(
        Some(seed),
        &json!({
            "train_ticker": cfg.train_ticker,
            "test_ticker": cfg.test_ticker,
            "features": spec,
            "classifier": c,
            "drawdown": cfg.drawdown,
        }),
    )
}

fn term_positions(all: &[String], chosen: &[String]) -> Vec<usize> {
    chosen
        .iter()
        .map(|t| all.iter().position(|a| a == t).expect("term from the same spec"))
        .collect()
}
