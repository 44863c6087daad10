//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Every tolerance is fixed below.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use statrs::distribution::{ContinuousCDF, StudentsT};

use dlab_core::backtest::{run_buy_and_hold, run_random_trader, run_signal_strategy, StrategyConfig};
use dlab_core::drawdown::{
    detect_episodes, label_target, DepthClass, CORRECTION_DEPTH, CRASH_DEPTH, PULLBACK_DEPTH,
};
use dlab_core::models::logistic::{aic, gradient};
use dlab_core::models::{
    backward_stepwise_aic, fit_logistic, fit_ols, kmeans_sweep, resample, roc_auc, KMeansOptions,
    LogisticOptions, ResampleMode,
};
use dlab_core::numerics::{rng_stream, Matrix, SeededRng};
use dlab_core::Exec;

const AIC_TOL: f64 = 0.01;
const AIC_BUDGET: Duration = Duration::from_millis(1);
const OLS_REL_TOL: f64 = 1e-6;
const OLS_CASES: usize = 500;
const OLS_BUDGET: Duration = Duration::from_secs(5);
const LOGIT_REPS: u64 = 100;
const LOGIT_N: usize = 5000;
const LOGIT_SE_MULT: f64 = 3.0;
const LOGIT_MIN_HITS: usize = 95;
const LOGIT_GRAD_PER_OBS: f64 = 1e-6;
const LOGIT_BUDGET: Duration = Duration::from_secs(30);
const STEPWISE_RUNS: u64 = 100;
const STEPWISE_MIN_CLEAN: usize = 95;
const KMEANS_SEEDS: u64 = 100;
const ROC_MAX_N: usize = 12;
const ROC_TOL: f64 = 1e-12;
const FORESIGHT_TOL: f64 = 1e-10;
const SUITE_BUDGET: Duration = Duration::from_secs(120);

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn aic_identity() -> Outcome {
    let start = Instant::now();
    let v = aic(27, -143.841);
    let took = start.elapsed();
    check((v - 341.682).abs() < 1e-9, format!("AIC {v} != 341.682"))?;
    check(
        (v - 341.683).abs() <= AIC_TOL,
        format!("AIC {v} not within {AIC_TOL} of 341.683"),
    )?;
    check(took < AIC_BUDGET, format!("took {took:?}"))?;
    Ok(format!("AIC = {v:.3}"))
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs()))
            .unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        for v in &mut m[c] {
            *v /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for k in 0..2 * n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// (beta, se, t, p) from the normal equations and statrs' t distribution.
fn normal_equations(x: &Matrix, y: &[f64]) -> [Vec<f64>; 4] {
    let (n, p) = (x.rows(), x.cols());
    let xtx: Vec<Vec<f64>> = (0..p)
        .map(|a| {
            (0..p)
                .map(|b| (0..n).map(|i| x[(i, a)] * x[(i, b)]).sum())
                .collect()
        })
        .collect();
    let xty: Vec<f64> = (0..p).map(|a| (0..n).map(|i| x[(i, a)] * y[i]).sum()).collect();
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..p).map(|a| (0..p).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let rss: f64 = (0..n)
        .map(|i| (y[i] - (0..p).map(|j| x[(i, j)] * beta[j]).sum::<f64>()).powi(2))
        .sum();
    let dof = (n - p) as f64;
    let se: Vec<f64> = (0..p).map(|j| (rss / dof * inv[j][j]).sqrt()).collect();
    let t: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let dist = StudentsT::new(0.0, 1.0, dof).unwrap();
    let pv = t.iter().map(|t| 2.0 * dist.sf(t.abs())).collect();
    [beta, se, t, pv]
}

fn ols_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_stream(500);
    for case in 0..OLS_CASES {
        let p = 1 + rng.index(8);
        let n = p + 2 + rng.index(50 - p - 1);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut r = vec![1.0];
                r.extend((1..p).map(|_| rng.normal() * 3.0));
                r
            })
            .collect();
        let beta: Vec<f64> = (0..p).map(|_| rng.normal()).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + rng.normal())
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let terms: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let fit = fit_ols(&x, &y, &terms).map_err(|e| format!("case {case}: {e}"))?;
        let reference = normal_equations(&x, &y);
        let ours = [
            &fit.coefficients,
            &fit.standard_errors,
            &fit.t_statistics,
            &fit.p_values,
        ];
        for (what, (a, b)) in ["beta", "se", "t", "p"].iter().zip(ours.iter().zip(&reference)) {
            for j in 0..p {
                check(
                    close(a[j], b[j], OLS_REL_TOL),
                    format!("case {case} {what}[{j}]: {} vs {}", a[j], b[j]),
                )?;
            }
        }
    }
    let took = start.elapsed();
    check(took < OLS_BUDGET, format!("took {took:?}"))?;
    Ok(format!("{OLS_CASES} systems in {took:.2?}"))
}

fn logistic_data(rng: &mut SeededRng, n: usize, beta: &[f64]) -> (Matrix, Vec<f64>) {
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut r = vec![1.0];
        r.extend((1..beta.len()).map(|_| rng.normal()));
        let eta: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
        y.push(f64::from(u8::from(rng.uniform() < 1.0 / (1.0 + (-eta).exp()))));
        rows.push(r);
    }
    (Matrix::from_rows(&rows).unwrap(), y)
}

fn logistic_recovery() -> Outcome {
    let start = Instant::now();
    let beta = [-1.0, 0.8, -0.5];
    let terms: Vec<String> = ["const", "x1", "x2"].map(String::from).to_vec();
    let mut hits = 0;
    let mut worst_grad: f64 = 0.0;
    for seed in 0..LOGIT_REPS {
        let (x, y) = logistic_data(&mut rng_stream(seed), LOGIT_N, &beta);
        let fit = fit_logistic(&x, &y, &terms, &LogisticOptions::default()).map_err(|e| e.to_string())?;
        if (0..3).all(|j| (fit.coefficients[j] - beta[j]).abs() <= LOGIT_SE_MULT * fit.standard_errors[j]) {
            hits += 1;
        }
        let g = gradient(&x, &y, &fit.coefficients);
        worst_grad = worst_grad.max(g.iter().map(|v| v * v).sum::<f64>().sqrt());
    }
    let took = start.elapsed();
    check(
        hits >= LOGIT_MIN_HITS,
        format!("{hits}/{LOGIT_REPS} within {LOGIT_SE_MULT} SE"),
    )?;
    check(
        worst_grad <= LOGIT_GRAD_PER_OBS * LOGIT_N as f64,
        format!("gradient norm {worst_grad:e}"),
    )?;
    check(took < LOGIT_BUDGET, format!("took {took:?}"))?;
    Ok(format!(
        "{hits}/{LOGIT_REPS} within 3 SE, max |grad| {worst_grad:.1e}, {took:.2?}"
    ))
}

fn stepwise_behavior() -> Outcome {
    let beta = [-0.5, 1.0, -0.8, 0.6, 0.0, 0.0, 0.0];
    let terms: Vec<String> = ["const", "s1", "s2", "s3", "n1", "n2", "n3"]
        .map(String::from)
        .to_vec();
    let protected = vec!["const".to_string()];
    let mut clean = 0;
    for seed in 0..STEPWISE_RUNS {
        let (x, y) = logistic_data(&mut rng_stream(10_000 + seed), 1500, &beta);
        let (_, log) = backward_stepwise_aic(
            &x,
            &y,
            &terms,
            &protected,
            &LogisticOptions::default(),
            Exec::default(),
        )
        .map_err(|e| e.to_string())?;
        if log.iter().all(|s| s.removed.starts_with('n')) {
            clean += 1;
        }
        let mut aics = vec![];
        if let Some(first) = log.first() {
            aics.push(first.aic_before);
        }
        aics.extend(log.iter().map(|s| s.aic_after));
        check(
            aics.windows(2).all(|w| w[1] < w[0]),
            format!("seed {seed}: AIC log not strictly decreasing"),
        )?;
        check(
            log.windows(2).all(|w| w[0].aic_after == w[1].aic_before),
            format!("seed {seed}: AIC log not chained"),
        )?;
    }
    check(
        clean >= STEPWISE_MIN_CLEAN,
        format!("{clean}/{STEPWISE_RUNS} removed only noise"),
    )?;
    Ok(format!("{clean}/{STEPWISE_RUNS} removed only noise terms"))
}

fn imbalance() -> Outcome {
    let n = 12 + 5555;
    let y: Vec<f64> = (0..n)
        .map(|i| f64::from(u8::from(i % 464 == 0 && i / 464 < 12)))
        .collect();
    check(
        y.iter().filter(|v| **v == 1.0).count() == 12,
        "fixture must hold 12 positives",
    )?;
    let x = Matrix::from_columns(&[(0..n).map(|i| i as f64).collect()]).unwrap();
    let counts = |y: &[f64]| {
        let pos = y.iter().filter(|v| **v == 1.0).count();
        (pos, y.len() - pos)
    };
    for (mode, want) in [(ResampleMode::Up, (5555, 5555)), (ResampleMode::Down, (12, 12))] {
        let (xa, ya) = resample(&x, &y, mode, &mut rng_stream(3)).map_err(|e| e.to_string())?;
        let (xb, yb) = resample(&x, &y, mode, &mut rng_stream(3)).map_err(|e| e.to_string())?;
        check(counts(&ya) == want, format!("{mode:?}: {:?}", counts(&ya)))?;
        check(xa == xb && ya == yb, format!("{mode:?}: not deterministic"))?;
    }
    Ok("up 5555/5555, down 12/12, repeatable".into())
}

fn drawdown_golden() -> Outcome {
    check(
        PULLBACK_DEPTH == 0.05 && CORRECTION_DEPTH == 0.10 && CRASH_DEPTH == 0.20,
        "depth thresholds changed",
    )?;
    let path = [100.0, 95.0, 89.0, 94.0, 101.0];
    let e = detect_episodes(&path, PULLBACK_DEPTH).map_err(|e| e.to_string())?;
    check(
        e.len() == 1,
        format!("{} episodes on the correction path", e.len()),
    )?;
    let c = &e[0];
    check(
        c.peak_index == 0 && c.trough_index == 2 && c.recovery_index == Some(4),
        format!("correction boundaries {c:?}"),
    )?;
    check(
        (c.depth - 0.11).abs() < 1e-12 && c.class == DepthClass::Correction,
        format!("{c:?}"),
    )?;
    let crash = detect_episodes(&[100.0, 79.0, 100.0], PULLBACK_DEPTH).map_err(|e| e.to_string())?;
    check(crash.len() == 1, "crash path episode count")?;
    let k = &crash[0];
    check(
        k.trough_index == 1 && (k.depth - 0.21).abs() < 1e-12 && k.class == DepthClass::Crash,
        format!("crash {k:?}"),
    )?;
    let rising = detect_episodes(&[1.0, 2.0, 3.0, 4.0], PULLBACK_DEPTH).map_err(|e| e.to_string())?;
    check(rising.is_empty(), "rising path has episodes")?;
    let l0 = label_target(&path, 0.10, 0, 0).map_err(|e| e.to_string())?;
    let l2 = label_target(&path, 0.10, 2, 0).map_err(|e| e.to_string())?;
    check(l0 == [0, 0, 1, 0, 0], format!("labels H=0 {l0:?}"))?;
    check(l2 == [1, 1, 1, 0, 0], format!("labels H=2 {l2:?}"))?;
    Ok("correction, crash, rising and label paths exact".into())
}

fn blobs(seed: u64) -> (Matrix, Vec<usize>) {
    let centers = [[0.0, 0.0, 0.0], [20.0, 0.0, 5.0], [0.0, 20.0, -5.0]];
    let mut rng = rng_stream(seed);
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for i in 0..29 {
        let c = i % 3;
        rows.push(centers[c].iter().map(|m| m + rng.normal()).collect::<Vec<f64>>());
        truth.push(c);
    }
    (Matrix::from_rows(&rows).unwrap(), truth)
}

/// Same partition up to relabeling.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

fn kmeans_elbow() -> Outcome {
    for seed in 0..KMEANS_SEEDS {
        let (x, truth) = blobs(seed);
        let r = kmeans_sweep(&x, 2..=10, 10, seed, &KMeansOptions::default(), Exec::default())
            .map_err(|e| e.to_string())?;
        check(
            r.selected_k == 3 && !r.low_confidence,
            format!("seed {seed}: selected k={}", r.selected_k),
        )?;
        check(
            same_partition(&r.selected().assignments, &truth),
            format!("seed {seed}: partition differs"),
        )?;
        for run in &r.runs {
            check(
                run.wcss_history.windows(2).all(|w| w[1] <= w[0]),
                format!("seed {seed} k={}: WCSS rose during Lloyd", run.k),
            )?;
        }
    }
    Ok(format!(
        "k=3 with exact partition in {KMEANS_SEEDS}/{KMEANS_SEEDS} seeds"
    ))
}

fn pair_count_auc(labels: &[u8], scores: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..labels.len() {
        for j in 0..labels.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

fn roc_oracle() -> Outcome {
    let ex = roc_auc(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]).map_err(|e| e.to_string())?;
    check(ex.auc == 0.75, format!("worked example AUC {}", ex.auc))?;
    let mut rng = rng_stream(12);
    let mut cases = 0;
    for n in 2..=ROC_MAX_N {
        for mask in 0u32..(1 << n) {
            let labels: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let pos = labels.iter().filter(|l| **l == 1).count();
            if pos == 0 || pos == n {
                continue;
            }
            // Distinct scores, then heavily tied ones.
            let mut distinct: Vec<f64> = (0..n).map(|i| i as f64).collect();
            rng.shuffle(&mut distinct);
            let tied: Vec<f64> = (0..n).map(|_| rng.index(3) as f64).collect();
            for scores in [distinct, tied] {
                let got = roc_auc(&labels, &scores).map_err(|e| e.to_string())?.auc;
                let want = pair_count_auc(&labels, &scores);
                check(
                    (got - want).abs() <= ROC_TOL,
                    format!("labels {labels:?} scores {scores:?}: {got} vs {want}"),
                )?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} exhaustive cases agree, example 0.75 exact"))
}

fn backtest_identities() -> Outcome {
    let day = |i: u64| NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i);
    let prices: Vec<f64> = {
        let mut rng = rng_stream(9);
        let mut p = vec![100.0];
        for _ in 1..500 {
            let last = *p.last().unwrap();
            p.push(last * (1.0 + 0.02 * rng.normal()));
        }
        p
    };
    let dates: Vec<NaiveDate> = (0..prices.len() as u64).map(day).collect();
    let hold = run_buy_and_hold(&dates, &prices).map_err(|e| e.to_string())?;
    let zero = run_signal_strategy(
        &dates,
        &prices,
        &vec![0.0; prices.len()],
        &StrategyConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    check(
        zero.equity_csv() == hold.equity_csv(),
        "zero signal differs from buy-and-hold",
    )?;
    let random =
        run_random_trader(&dates, &prices, 0.0, 0.0, &mut rng_stream(1)).map_err(|e| e.to_string())?;
    check(
        random.equity_csv() == hold.equity_csv(),
        "random trader at p=0 differs from buy-and-hold",
    )?;

    let path = [100.0, 90.0, 81.0, 100.0];
    let d4: Vec<NaiveDate> = (0..4).map(day).collect();
    let fs = run_signal_strategy(&d4, &path, &[1.0, 0.4, 0.0, 0.0], &StrategyConfig::default())
        .map_err(|e| e.to_string())?;
    let exact = 100.0 / 81.0 - 1.0;
    check(
        (fs.total_return - exact).abs() <= FORESIGHT_TOL,
        format!("foresight {} vs {exact}", fs.total_return),
    )?;
    check(
        (fs.total_return * 1e4).round() / 1e4 == 0.2346,
        "foresight does not round to 0.2346",
    )?;
    let bh = run_buy_and_hold(&d4, &path).map_err(|e| e.to_string())?;
    check(bh.total_return == 0.0, "buy-and-hold on the foresight path")?;
    Ok(format!(
        "identities hold, foresight return {:.10}",
        fs.total_return
    ))
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Each term prints an estimate line (with optional stars) then `(se)`.
fn table_structure(text: &str, footers: &[&str]) -> Result<(), String> {
    let lines: Vec<&str> = text.lines().collect();
    check(
        lines
            .iter()
            .any(|l| l.trim_start().starts_with("Dependent variable:")),
        "no dependent variable line",
    )?;
    check(
        lines
            .iter()
            .any(|l| l.starts_with("Note: * p<0.1; ** p<0.05; *** p<0.01")),
        "no star legend",
    )?;
    for f in footers {
        check(
            lines.iter().any(|l| l.starts_with(f)),
            format!("missing footer '{f}'"),
        )?;
    }
    let rules: Vec<usize> = (0..lines.len()).filter(|&i| lines[i].starts_with('-')).collect();
    check(
        rules.len() == 2,
        "expected two rules around the coefficient block",
    )?;
    let body = &lines[rules[0] + 1..rules[1]];
    check(
        !body.is_empty() && body.len() % 2 == 0,
        "coefficient block must pair estimate and SE lines",
    )?;
    for pair in body.chunks(2) {
        let mut est = pair[0].split_whitespace();
        let _term = est.next().ok_or("empty estimate line")?;
        let value = est.next().ok_or("no estimate")?;
        let digits = value.trim_end_matches('*');
        check(
            digits.parse::<f64>().is_ok() || digits == "NA",
            format!("bad estimate '{value}'"),
        )?;
        let se = pair[1].trim();
        check(
            se.starts_with('(') && se.ends_with(')'),
            format!("bad SE line '{se}'"),
        )?;
    }
    Ok(())
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic/config.json");
    let mut trees = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let out = Command::new(env!("CARGO_BIN_EXE_dlab"))
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(dir.path())
            .args(["--seed", "7", "pipeline"])
            .output()
            .map_err(|e| e.to_string())?;
        check(
            out.status.success(),
            format!("pipeline failed: {}", String::from_utf8_lossy(&out.stderr)),
        )?;
        trees.push((read_tree(dir.path()), dir));
    }
    let (a, b) = (&trees[0].0, &trees[1].0);
    check(a.len() > 20, format!("only {} files written", a.len()))?;
    check(a == b, "output trees differ between runs")?;
    let text = |k: &str| String::from_utf8(a.get(k).cloned().unwrap_or_default()).unwrap();
    table_structure(
        &text("regress/IBM.txt"),
        &["Observations", "R-squared", "Adjusted R-squared"],
    )
    .map_err(|e| format!("regression table: {e}"))?;
    table_structure(
        &text("classify/table.txt"),
        &["Observations", "Log Likelihood", "Akaike Inf. Crit."],
    )
    .map_err(|e| format!("logistic table: {e}"))?;
    Ok(format!(
        "{} files identical across runs, {:.2?}",
        a.len(),
        start.elapsed()
    ))
}

fn main() {
    let suite = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AIC identity", aic_identity),
        ("OLS oracle suite", ols_oracle),
        ("logistic recovery", logistic_recovery),
        ("stepwise behavior", stepwise_behavior),
        ("imbalance handling", imbalance),
        ("drawdown golden paths", drawdown_golden),
        ("k-means and elbow", kmeans_elbow),
        ("ROC/AUC oracle", roc_oracle),
        ("backtest identities", backtest_identities),
        ("end-to-end determinism", end_to_end),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why}", i + 1);
            }
        }
    }
    let total = suite.elapsed();
    if total >= SUITE_BUDGET {
        failed += 1;
        println!("[FAIL] suite runtime {total:.2?} over {SUITE_BUDGET:?}");
    }
    println!(
        "acceptance: {} of {} passed in {total:.2?}",
        criteria.len() - failed.min(criteria.len()),
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
