//! k-means with k-means++ seeding, restarts and elbow selection.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, SeededRng};
use crate::par::{map_indices, Exec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KMeansResult {
    pub k: usize,
    pub assignments: Vec<usize>,
    #[serde(skip)]
    pub centroids: Matrix,
    pub wcss: f64,
    pub iterations: usize,
    /// Objective after every Lloyd iteration.
    pub wcss_history: Vec<f64>,
    pub restart_index: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_init(rows: &Matrix, k: usize, rng: &mut SeededRng) -> Matrix {
    let n = rows.rows();
    let mut centroids = Matrix::zeros(k, rows.cols());
    let first = rng.index(n);
    centroids.row_mut(0).copy_from_slice(rows.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(rows.row(i), rows.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.uniform() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.index(n)
        };
        centroids.row_mut(c).copy_from_slice(rows.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(rows.row(i), rows.row(pick)));
        }
    }
    centroids
}

fn update_centroids(rows: &Matrix, assignments: &[usize], k: usize) -> Matrix {
    let mut sums = Matrix::zeros(k, rows.cols());
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (s, v) in sums.row_mut(a).iter_mut().zip(rows.row(i)) {
            *s += v;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        for s in sums.row_mut(c) {
            *s /= count as f64;
        }
    }
    sums
}

fn wcss(rows: &Matrix, assignments: &[usize], centroids: &Matrix) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| sq_dist(rows.row(i), centroids.row(a)))
        .sum()
}

/// Lloyd iterations from the given centroids.
fn lloyd(rows: &Matrix, mut centroids: Matrix, opts: &KMeansOptions, restart_index: usize) -> KMeansResult {
    let n = rows.rows();
    let k = centroids.rows();
    let mut assignments = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut dist = vec![0.0; n];
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest(rows.row(i), &centroids);
            dist[i] = d;
            if assignments[i] != c {
                assignments[i] = c;
                changed = true;
            }
        }
        // An empty cluster takes the point farthest from its own centroid.
        let mut counts = vec![0usize; k];
        for &a in &assignments {
            counts[a] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let far = (0..n)
                .filter(|&i| counts[assignments[i]] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            if let Some(i) = far {
                counts[assignments[i]] -= 1;
                assignments[i] = c;
                counts[c] = 1;
                dist[i] = 0.0;
                changed = true;
            }
        }
        let updated = update_centroids(rows, &assignments, k);
        let shift = (0..k)
            .map(|c| sq_dist(updated.row(c), centroids.row(c)).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        history.push(wcss(rows, &assignments, &centroids));
        if !changed || shift < opts.tol {
            break;
        }
    }
    KMeansResult {
        k,
        wcss: *history.last().expect("at least one iteration"),
        assignments,
        centroids,
        iterations,
        wcss_history: history,
        restart_index,
    }
}

fn check_k(rows: &Matrix, k: usize) -> Result<()> {
    if k < 1 {
        return Err(Error::Parameter("k must be at least 1".into()));
    }
    if k > rows.rows() {
        return Err(Error::Parameter(format!("k={k} exceeds {} rows", rows.rows())));
    }
    Ok(())
}

/// One k-means run seeded by k-means++. Rows should already be scaled.
pub fn kmeans(rows: &Matrix, k: usize, rng: &mut SeededRng, opts: &KMeansOptions) -> Result<KMeansResult> {
    check_k(rows, k)?;
    let init = plus_plus_init(rows, k, rng);
    Ok(lloyd(rows, init, opts, 0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ElbowReport {
    pub ks: Vec<usize>,
    pub wcss: Vec<f64>,
    pub selected_k: usize,
    pub rule: String,
    /// Set when the curve has no clear bend; `selected_k` is then the
    /// smallest k in the range unless overridden.
    pub low_confidence: bool,
    /// Best run for each k, in `ks` order.
    pub runs: Vec<KMeansResult>,
}

/// Minimum second-difference strength (relative to the mean drop per step)
/// for an elbow to count as clear.
pub const ELBOW_MIN_STRENGTH: f64 = 3.0;

impl ElbowReport {
    pub fn selected(&self) -> &KMeansResult {
        let pos = self
            .ks
            .iter()
            .position(|k| *k == self.selected_k)
            .expect("selected k in range");
        &self.runs[pos]
    }

    /// Replaces the automatic choice with an explicit k.
    pub fn with_override(mut self, k: usize) -> Result<Self> {
        if !self.ks.contains(&k) {
            return Err(Error::Parameter(format!("k={k} outside the swept range")));
        }
        self.selected_k = k;
        self.rule = "explicit".into();
        self.low_confidence = false;
        Ok(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,wcss,selected\n");
        for (k, w) in self.ks.iter().zip(&self.wcss) {
            out.push_str(&format!("{k},{w},{}\n", u8::from(*k == self.selected_k)));
        }
        out
    }
}

/// Elbow by the largest discrete second difference
/// `w(k−1) − 2w(k) + w(k+1)`; ties go to the smaller k.
pub fn select_elbow(ks: &[usize], wcss: &[f64]) -> (usize, bool) {
    if ks.len() < 3 {
        return (ks[0], true);
    }
    let mut best = (ks[1], f64::NEG_INFINITY);
    for i in 1..ks.len() - 1 {
        let d2 = wcss[i - 1] - 2.0 * wcss[i] + wcss[i + 1];
        if d2 > best.1 {
            best = (ks[i], d2);
        }
    }
    let mean_drop = (wcss[0] - wcss[wcss.len() - 1]) / (ks.len() - 1) as f64;
    let clear = mean_drop > 0.0 && best.1 / mean_drop >= ELBOW_MIN_STRENGTH;
    if clear {
        (best.0, false)
    } else {
        (ks[0], true)
    }
}

/// Runs `restarts` seeded k-means per k and keeps the lowest-WCSS run
/// (ties to the lower restart index).
///
/// Restart `r` for a given `k` draws from `SeededRng::derive(seed, k, r)`,
/// so runs are independent of scheduling. If the best run for some k is
/// worse than the chosen solution at k − 1, one more run is started from
/// that solution plus its worst-fit point as a new centre; it is recorded
/// with restart index `restarts` and keeps the curve non-increasing.
pub fn kmeans_sweep(
    rows: &Matrix,
    k_range: RangeInclusive<usize>,
    restarts: usize,
    seed: u64,
    opts: &KMeansOptions,
    exec: Exec,
) -> Result<ElbowReport> {
    let ks: Vec<usize> = k_range.collect();
    if ks.is_empty() {
        return Err(Error::Parameter("empty k range".into()));
    }
    if restarts == 0 {
        return Err(Error::Parameter("restarts must be at least 1".into()));
    }
    for &k in &ks {
        check_k(rows, k)?;
    }
    let jobs: Vec<(usize, usize)> = ks
        .iter()
        .flat_map(|&k| (0..restarts).map(move |r| (k, r)))
        .collect();
    let results = map_indices(exec, jobs.len(), |j| {
        let (k, r) = jobs[j];
        let mut rng = SeededRng::derive(seed, k as u64, r as u64);
        let init = plus_plus_init(rows, k, &mut rng);
        lloyd(rows, init, opts, r)
    });

    let mut runs: Vec<KMeansResult> = Vec::with_capacity(ks.len());
    for (i, chunk) in results.chunks(restarts).enumerate() {
        let mut best = chunk
            .iter()
            .min_by(|a, b| {
                a.wcss
                    .total_cmp(&b.wcss)
                    .then(a.restart_index.cmp(&b.restart_index))
            })
            .expect("restarts >= 1")
            .clone();
        if let Some(prev) = runs.last() {
            if best.wcss > prev.wcss && ks[i] == prev.k + 1 {
                let warm = warm_start(rows, prev, opts, restarts);
                if warm.wcss < best.wcss {
                    best = warm;
                }
            }
        }
        runs.push(best);
    }
    let wcss: Vec<f64> = runs.iter().map(|r| r.wcss).collect();
    let (selected_k, low_confidence) = select_elbow(&ks, &wcss);
    Ok(ElbowReport {
        ks,
        wcss,
        selected_k,
        rule: "max_second_difference".into(),
        low_confidence,
        runs,
    })
}

fn warm_start(rows: &Matrix, prev: &KMeansResult, opts: &KMeansOptions, index: usize) -> KMeansResult {
    let far = (0..rows.rows())
        .max_by(|&a, &b| {
            let da = sq_dist(rows.row(a), prev.centroids.row(prev.assignments[a]));
            let db = sq_dist(rows.row(b), prev.centroids.row(prev.assignments[b]));
            da.total_cmp(&db).then(b.cmp(&a))
        })
        .expect("non-empty");
    let mut init = Matrix::zeros(prev.k + 1, rows.cols());
    for c in 0..prev.k {
        init.row_mut(c).copy_from_slice(prev.centroids.row(c));
    }
    init.row_mut(prev.k).copy_from_slice(rows.row(far));
    lloyd(rows, init, opts, index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng_stream;
    use approx::assert_abs_diff_eq;

    fn blobs(seed: u64, per: &[usize], spread: f64) -> (Matrix, Vec<usize>) {
        let centers = [[0.0, 0.0, 0.0], [20.0, 0.0, 5.0], [0.0, 20.0, -5.0]];
        let mut rng = rng_stream(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (b, &count) in per.iter().enumerate() {
            for _ in 0..count {
                rows.push(centers[b].iter().map(|c| c + spread * rng.normal()).collect());
                labels.push(b);
            }
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn k1_is_column_means() {
        let (m, _) = blobs(1, &[5, 5, 5], 1.0);
        let r = kmeans(&m, 1, &mut rng_stream(2), &KMeansOptions::default()).unwrap();
        let mut total = 0.0;
        for j in 0..m.cols() {
            let col = m.column(j);
            let mu = col.iter().sum::<f64>() / col.len() as f64;
            assert_abs_diff_eq!(r.centroids[(0, j)], mu, epsilon = 1e-12);
            total += col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>();
        }
        assert_abs_diff_eq!(r.wcss, total, epsilon = 1e-9);
    }

    #[test]
    fn k_equals_rows_is_zero() {
        let (m, _) = blobs(4, &[3, 2, 2], 1.0);
        let r = kmeans(&m, 7, &mut rng_stream(5), &KMeansOptions::default()).unwrap();
        assert_abs_diff_eq!(r.wcss, 0.0, epsilon = 1e-20);
    }

    #[test]
    fn bad_k() {
        let (m, _) = blobs(4, &[3, 2, 2], 1.0);
        assert!(kmeans(&m, 0, &mut rng_stream(5), &KMeansOptions::default()).is_err());
        assert!(kmeans(&m, 8, &mut rng_stream(5), &KMeansOptions::default()).is_err());
    }

    #[test]
    fn history_non_increasing() {
        let (m, _) = blobs(11, &[10, 10, 9], 4.0);
        for s in 0..20 {
            let r = kmeans(&m, 4, &mut rng_stream(s), &KMeansOptions::default()).unwrap();
            for w in r.wcss_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{:?}", r.wcss_history);
            }
        }
    }

    #[test]
    fn sweep_finds_three_blobs() {
        let (m, labels) = blobs(3, &[10, 10, 9], 1.0);
        let rep = kmeans_sweep(&m, 2..=10, 10, 99, &KMeansOptions::default(), Exec::default()).unwrap();
        assert_eq!(rep.selected_k, 3);
        assert!(!rep.low_confidence);
        for w in rep.wcss.windows(2) {
            assert!(w[1] <= w[0]);
        }
        let a = &rep.selected().assignments;
        for i in 0..labels.len() {
            for j in 0..labels.len() {
                assert_eq!(labels[i] == labels[j], a[i] == a[j]);
            }
        }
    }

    #[test]
    fn more_restarts_never_worse() {
        let (m, _) = blobs(8, &[10, 10, 9], 6.0);
        let one = kmeans_sweep(&m, 2..=10, 1, 5, &KMeansOptions::default(), Exec::Sequential).unwrap();
        let ten = kmeans_sweep(&m, 2..=10, 10, 5, &KMeansOptions::default(), Exec::Sequential).unwrap();
        for (a, b) in ten.wcss.iter().zip(&one.wcss) {
            assert!(a <= b);
        }
    }

    #[test]
    fn isotropic_noise_is_low_confidence() {
        for s in 0..20 {
            let mut rng = rng_stream(1000 + s);
            let rows: Vec<Vec<f64>> = (0..29).map(|_| (0..3).map(|_| rng.normal()).collect()).collect();
            let m = Matrix::from_rows(&rows).unwrap();
            let rep = kmeans_sweep(&m, 2..=10, 10, s, &KMeansOptions::default(), Exec::default()).unwrap();
            assert!(rep.low_confidence, "seed {s}: {:?}", rep.wcss);
            assert_eq!(rep.selected_k, 2);
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let (m, _) = blobs(8, &[10, 10, 9], 3.0);
        let a = kmeans_sweep(&m, 2..=6, 4, 5, &KMeansOptions::default(), Exec::Sequential).unwrap();
        let b = kmeans_sweep(&m, 2..=6, 4, 5, &KMeansOptions::default(), Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn override_k() {
        let (m, _) = blobs(3, &[10, 10, 9], 1.0);
        let rep = kmeans_sweep(&m, 2..=5, 3, 1, &KMeansOptions::default(), Exec::default()).unwrap();
        let rep = rep.with_override(4).unwrap();
        assert_eq!(rep.selected().k, 4);
        assert!(rep.clone().with_override(11).is_err());
        assert!(rep.to_csv().contains("4,"));
    }
}
