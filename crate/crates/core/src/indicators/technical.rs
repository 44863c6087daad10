//! Price and volume indicators.
//!
//! Every function returns a series aligned with its input where the warm-up
//! prefix is `None`. Nothing is zero-filled.

use crate::error::{Error, Result};

pub type Series = Vec<Option<f64>>;

fn need(len: usize, needed: usize) -> Result<()> {
    if len < needed {
        Err(Error::TooShort { needed, got: len })
    } else {
        Ok(())
    }
}

/// Exponential moving average seeded with the simple mean of the first
/// `period` values, then `e_t = v_t·k + e_{t−1}·(1−k)` with `k = 2/(period+1)`.
pub fn ema(values: &[f64], period: usize) -> Result<Series> {
    if period == 0 {
        return Err(Error::Parameter("EMA period must be at least 1".into()));
    }
    need(values.len(), period)?;
    let k = 2.0 / (period as f64 + 1.0);
    let mut out = vec![None; values.len()];
    let mut e = values[..period].iter().sum::<f64>() / period as f64;
    out[period - 1] = Some(e);
    for (i, v) in values.iter().enumerate().skip(period) {
        e = v * k + e * (1.0 - k);
        out[i] = Some(e);
    }
    Ok(out)
}

fn rsi_from_averages(gain: f64, loss: f64) -> f64 {
    match (gain > 0.0, loss > 0.0) {
        (false, false) => 50.0,
        (_, false) => 100.0,
        (false, true) => 0.0,
        (true, true) => {
            let rs = gain / loss;
            (100.0 - 100.0 / (1.0 + rs)).clamp(0.0, 100.0)
        }
    }
}

/// Wilder's RSI. First defined at index `period`.
pub fn rsi(closes: &[f64], period: usize) -> Result<Series> {
    if period == 0 {
        return Err(Error::Parameter("RSI period must be at least 1".into()));
    }
    need(closes.len(), period + 1)?;
    let mut out = vec![None; closes.len()];
    let p = period as f64;
    let (mut gain, mut loss) = (0.0, 0.0);
    for w in closes[..=period].windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 {
            gain += d;
        } else {
            loss -= d;
        }
    }
    gain /= p;
    loss /= p;
    out[period] = Some(rsi_from_averages(gain, loss));
    for i in (period + 1)..closes.len() {
        let d = closes[i] - closes[i - 1];
        gain = (gain * (p - 1.0) + d.max(0.0)) / p;
        loss = (loss * (p - 1.0) + (-d).max(0.0)) / p;
        out[i] = Some(rsi_from_averages(gain, loss));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Macd {
    pub macd: Series,
    pub signal: Series,
    pub hist: Series,
}

pub fn macd(closes: &[f64], fast: usize, slow: usize, signal: usize) -> Result<Macd> {
    if fast == 0 || signal == 0 || fast >= slow {
        return Err(Error::Parameter(format!(
            "MACD needs 1 <= fast < slow and signal >= 1 (fast={fast}, slow={slow}, signal={signal})"
        )));
    }
    need(closes.len(), slow + signal - 1)?;
    let f = ema(closes, fast)?;
    let s = ema(closes, slow)?;
    let line: Series = f.iter().zip(&s).map(|(a, b)| Some((*a)? - (*b)?)).collect();
    let start = slow - 1;
    let defined: Vec<f64> = line[start..].iter().map(|v| v.expect("defined")).collect();
    let sig_tail = ema(&defined, signal)?;
    let mut sig = vec![None; start];
    sig.extend(sig_tail);
    let hist = line.iter().zip(&sig).map(|(m, s)| Some((*m)? - (*s)?)).collect();
    Ok(Macd {
        macd: line,
        signal: sig,
        hist,
    })
}

/// On-balance volume starting from 0.
pub fn obv(closes: &[f64], volumes: &[f64]) -> Result<Vec<f64>> {
    if closes.len() != volumes.len() {
        return Err(Error::LengthMismatch {
            left: closes.len(),
            right: volumes.len(),
        });
    }
    need(closes.len(), 1)?;
    let mut out = Vec::with_capacity(closes.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 1..closes.len() {
        let d = closes[i] - closes[i - 1];
        if d > 0.0 {
            acc += volumes[i];
        } else if d < 0.0 {
            acc -= volumes[i];
        }
        out.push(acc);
    }
    Ok(out)
}

fn window_mean_ss(w: &[f64]) -> (f64, f64) {
    let m = w.iter().sum::<f64>() / w.len() as f64;
    let ss = w.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    (m, ss)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bollinger {
    pub upper: Series,
    pub middle: Series,
    pub lower: Series,
}

/// Rolling mean ± `nbdev` population standard deviations.
pub fn bollinger(closes: &[f64], window: usize, nbdev: f64) -> Result<Bollinger> {
    if window < 2 {
        return Err(Error::Parameter("Bollinger window must be at least 2".into()));
    }
    need(closes.len(), window)?;
    let n = closes.len();
    let mut b = Bollinger {
        upper: vec![None; n],
        middle: vec![None; n],
        lower: vec![None; n],
    };
    for end in window..=n {
        let (m, ss) = window_mean_ss(&closes[end - window..end]);
        let sd = (ss / window as f64).sqrt();
        b.middle[end - 1] = Some(m);
        b.upper[end - 1] = Some(m + nbdev * sd);
        b.lower[end - 1] = Some(m - nbdev * sd);
    }
    Ok(b)
}

/// Rolling sample standard deviation.
pub fn rolling_std(values: &[f64], window: usize) -> Result<Series> {
    if window < 2 {
        return Err(Error::Parameter("rolling std window must be at least 2".into()));
    }
    need(values.len(), window)?;
    let mut out = vec![None; values.len()];
    for end in window..=values.len() {
        let (_, ss) = window_mean_ss(&values[end - window..end]);
        out[end - 1] = Some((ss / (window as f64 - 1.0)).sqrt());
    }
    Ok(out)
}

/// `p_t / p_{t−1} − 1`, one shorter than the input.
pub fn simple_returns(prices: &[f64]) -> Result<Vec<f64>> {
    need(prices.len(), 2)?;
    if let Some(p) = prices.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::Validation(format!("price {p} is not positive")));
    }
    Ok(prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
}

/// Trailing-window beta, `cov(asset, market) / var(market)`. Windows where
/// the market does not move are undefined.
pub fn rolling_beta(asset: &[f64], market: &[f64], window: usize) -> Result<Series> {
    if asset.len() != market.len() {
        return Err(Error::LengthMismatch {
            left: asset.len(),
            right: market.len(),
        });
    }
    if window < 2 {
        return Err(Error::Parameter("beta window must be at least 2".into()));
    }
    need(asset.len(), window)?;
    let mut out = vec![None; asset.len()];
    for end in window..=asset.len() {
        let a = &asset[end - window..end];
        let m = &market[end - window..end];
        let ma = a.iter().sum::<f64>() / window as f64;
        let mm = m.iter().sum::<f64>() / window as f64;
        let (mut cov, mut var, mut scale) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(m) {
            cov += (x - ma) * (y - mm);
            var += (y - mm) * (y - mm);
            scale += y * y;
        }
        // Relative guard: a constant window leaves roundoff-sized variance.
        if var > 1e-20 * scale {
            out[end - 1] = Some(cov / var);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unwrap_tail(s: &Series) -> Vec<f64> {
        s.iter().flatten().copied().collect()
    }

    #[test]
    fn ema_examples() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(unwrap_tail(&ema(&v, 1).unwrap()), v.to_vec());
        assert!(unwrap_tail(&ema(&[7.0; 10], 4).unwrap())
            .iter()
            .all(|x| *x == 7.0));
        let e = ema(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        assert_eq!(e, vec![None, None, Some(2.0), Some(3.0), Some(4.0)]);
        assert!(matches!(ema(&[1.0], 2), Err(Error::TooShort { .. })));
    }

    #[test]
    fn rsi_examples() {
        let rising: Vec<f64> = (0..15).map(|i| 100.0 + i as f64).collect();
        assert_eq!(rsi(&rising, 14).unwrap()[14], Some(100.0));
        let flat = [10.0; 20];
        assert!(unwrap_tail(&rsi(&flat, 14).unwrap()).iter().all(|v| *v == 50.0));
        let alt: Vec<f64> = (0..15).map(|i| if i % 2 == 0 { 10.0 } else { 11.0 }).collect();
        assert_abs_diff_eq!(rsi(&alt, 14).unwrap()[14].unwrap(), 50.0, epsilon = 1e-12);
        let falling: Vec<f64> = (0..15).map(|i| 100.0 - i as f64).collect();
        assert_eq!(rsi(&falling, 14).unwrap()[14], Some(0.0));
        assert!(rsi(&rising[..14], 14).is_err());
        assert_eq!(rsi(&rising, 14).unwrap()[13], None);
    }

    #[test]
    fn macd_examples() {
        let flat = [5.0; 60];
        let m = macd(&flat, 12, 26, 9).unwrap();
        assert!(unwrap_tail(&m.macd).iter().all(|v| v.abs() < 1e-12));
        assert!(unwrap_tail(&m.hist).iter().all(|v| v.abs() < 1e-12));
        assert_eq!(m.macd.iter().position(Option::is_some), Some(25));
        assert_eq!(m.signal.iter().position(Option::is_some), Some(33));

        let ramp: Vec<f64> = (0..400).map(|i| i as f64).collect();
        let m = macd(&ramp, 12, 26, 9).unwrap();
        assert_abs_diff_eq!(m.macd[399].unwrap(), 7.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m.hist[399].unwrap(), 0.0, epsilon = 1e-9);

        assert!(matches!(macd(&ramp, 26, 12, 9), Err(Error::Parameter(_))));
        assert!(matches!(
            macd(&ramp[..33], 12, 26, 9),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn obv_examples() {
        assert_eq!(
            obv(&[10.0, 11.0, 10.5, 10.5], &[100.0, 200.0, 150.0, 300.0]).unwrap(),
            vec![0.0, 200.0, 50.0, 50.0]
        );
        assert_eq!(obv(&[3.0; 4], &[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![0.0; 4]);
        assert_eq!(
            obv(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap(),
            vec![0.0, 2.0, 5.0, 9.0]
        );
        assert!(obv(&[1.0], &[]).is_err());
    }

    #[test]
    fn bollinger_examples() {
        let b = bollinger(&[2.0, 2.0, 2.0], 3, 2.0).unwrap();
        assert_eq!(
            (b.upper[2], b.middle[2], b.lower[2]),
            (Some(2.0), Some(2.0), Some(2.0))
        );
        let b = bollinger(&[1.0, 2.0, 3.0], 3, 2.0).unwrap();
        let sd = (2.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(b.middle[2].unwrap(), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.upper[2].unwrap(), 2.0 + 2.0 * sd, epsilon = 1e-14);
        assert_abs_diff_eq!(b.upper[2].unwrap(), 3.6330, epsilon = 1e-4);
        assert_abs_diff_eq!(b.lower[2].unwrap(), 0.3670, epsilon = 1e-4);
        assert!(matches!(
            bollinger(&[1.0, 2.0, 3.0], 5, 2.0),
            Err(Error::TooShort { .. })
        ));
        assert!(bollinger(&[1.0, 2.0, 3.0], 1, 2.0).is_err());
    }

    #[test]
    fn rolling_std_examples() {
        assert_eq!(rolling_std(&[4.0; 5], 3).unwrap()[4], Some(0.0));
        assert_abs_diff_eq!(
            rolling_std(&[1.0, 2.0, 3.0], 3).unwrap()[2].unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(matches!(rolling_std(&[1.0, 2.0], 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn returns_examples() {
        assert_abs_diff_eq!(simple_returns(&[100.0, 110.0]).unwrap()[0], 0.10, epsilon = 1e-15);
        assert_eq!(simple_returns(&[5.0; 4]).unwrap(), vec![0.0; 3]);
        assert_eq!(simple_returns(&[100.0, 50.0, 100.0]).unwrap(), vec![-0.5, 1.0]);
        assert!(simple_returns(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn beta_examples() {
        let m: Vec<f64> = (0..30).map(|i| ((i * 7) % 11) as f64 * 0.01 - 0.05).collect();
        let b = rolling_beta(&m, &m, 10).unwrap();
        assert!(unwrap_tail(&b).iter().all(|v| (v - 1.0).abs() < 1e-12));
        let twice: Vec<f64> = m.iter().map(|v| 2.0 * v).collect();
        let b = rolling_beta(&twice, &m, 10).unwrap();
        assert!(unwrap_tail(&b).iter().all(|v| (v - 2.0).abs() < 1e-12));
        let mut flat = m.clone();
        for v in &mut flat[0..10] {
            *v = 0.01;
        }
        let b = rolling_beta(&m, &flat, 10).unwrap();
        assert_eq!(b[9], None);
        assert!(b[10].is_some());
    }
}
