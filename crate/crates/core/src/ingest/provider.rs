//! Daily-adjusted bar download from an Alpha-Vantage-compatible endpoint.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::Value;

use super::csv_io::{parse_date, write_ohlcv_csv};
use super::types::{Bar, TickerSeries};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "DLAB_API_KEY";

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub base_url: String,
    /// Falls back to `DLAB_API_KEY` when `None`.
    pub api_key: Option<String>,
    pub requests_per_window: usize,
    pub window: Duration,
    /// Extra attempts after an HTTP 429.
    pub max_retries: u32,
    pub retry_delay: Duration,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            base_url: "https://www.alphavantage.co".into(),
            api_key: None,
            requests_per_window: 5,
            window: Duration::from_secs(60),
            max_retries: 3,
            retry_delay: Duration::from_secs(15),
        }
    }
}

impl ProviderConfig {
    pub fn resolved_api_key(&self) -> Result<String> {
        match &self.api_key {
            Some(k) => Ok(k.clone()),
            None => std::env::var(API_KEY_ENV)
                .map_err(|_| Error::Provider(format!("no API key configured and {API_KEY_ENV} unset"))),
        }
    }

    pub fn daily_adjusted_url(&self, ticker: &str, api_key: &str) -> String {
        format!(
            "{}/query?function=TIME_SERIES_DAILY_ADJUSTED&symbol={}&outputsize=full&apikey={}",
            self.base_url.trim_end_matches('/'),
            ticker,
            api_key
        )
    }
}

/// Minimal HTTP GET returning `(status, body)`.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<(u16, String)>;
}

#[cfg(feature = "http")]
pub struct HttpTransport {
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl Default for HttpTransport {
    fn default() -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        HttpTransport { agent }
    }
}

#[cfg(feature = "http")]
impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<(u16, String)> {
        let mut resp = self
            .agent
            .get(url)
            .call()
            .map_err(|e| Error::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok((status, body))
    }
}

/// Sliding-window request budget shared by all callers of one client.
#[derive(Debug)]
pub struct RateLimiter {
    budget: usize,
    window: Duration,
    sent: Mutex<VecDeque<Instant>>,
}

impl RateLimiter {
    pub fn new(budget: usize, window: Duration) -> Self {
        RateLimiter {
            budget: budget.max(1),
            window,
            sent: Mutex::new(VecDeque::new()),
        }
    }

    /// Blocks until a request slot is free and claims it.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut sent = self.sent.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                while sent
                    .front()
                    .is_some_and(|t| now.duration_since(*t) >= self.window)
                {
                    sent.pop_front();
                }
                if sent.len() < self.budget {
                    sent.push_back(now);
                    return;
                }
                self.window - now.duration_since(*sent.front().expect("non-empty"))
            };
            std::thread::sleep(wait);
        }
    }
}

pub struct ProviderClient {
    config: ProviderConfig,
    transport: Box<dyn Transport>,
    limiter: RateLimiter,
}

impl ProviderClient {
    pub fn new(config: ProviderConfig, transport: Box<dyn Transport>) -> Self {
        let limiter = RateLimiter::new(config.requests_per_window, config.window);
        ProviderClient {
            config,
            transport,
            limiter,
        }
    }

    #[cfg(feature = "http")]
    pub fn http(config: ProviderConfig) -> Self {
        ProviderClient::new(config, Box::new(HttpTransport::default()))
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn get_with_retry(&self, url: &str) -> Result<String> {
        let mut attempt = 0;
        loop {
            self.limiter.acquire();
            let (status, body) = self.transport.get(url)?;
            match status {
                200 => return Ok(body),
                429 if attempt < self.config.max_retries => {
                    attempt += 1;
                    std::thread::sleep(self.config.retry_delay);
                }
                429 => {
                    return Err(Error::RateLimited(format!(
                        "HTTP 429 after {} attempts",
                        attempt + 1
                    )))
                }
                s => return Err(Error::Transport(format!("HTTP {s}"))),
            }
        }
    }
}

/// Downloads the full daily-adjusted history for `ticker`.
pub fn fetch_remote_daily(ticker: &str, client: &ProviderClient) -> Result<TickerSeries> {
    let key = client.config.resolved_api_key()?;
    let url = client.config.daily_adjusted_url(ticker, &key);
    let body = client.get_with_retry(&url)?;
    parse_daily_adjusted_json(ticker, &body)
}

/// Fetches `ticker` and writes it to `{cache_dir}/{ticker}.csv` in the OHLCV
/// CSV schema.
pub fn fetch_to_cache(ticker: &str, client: &ProviderClient, cache_dir: &Path) -> Result<PathBuf> {
    let series = fetch_remote_daily(ticker, client)?;
    std::fs::create_dir_all(cache_dir)?;
    let path = cache_dir.join(format!("{ticker}.csv"));
    std::fs::write(&path, write_ohlcv_csv(&series))?;
    Ok(path)
}

fn field(entry: &Value, key: &str, date: &str) -> Result<f64> {
    let v = entry
        .get(key)
        .ok_or_else(|| Error::parse(0, format!("{date}: missing '{key}'")))?;
    let parsed = match v {
        Value::String(s) => s.parse::<f64>().ok(),
        Value::Number(n) => n.as_f64(),
        _ => None,
    };
    parsed.ok_or_else(|| Error::parse(0, format!("{date}: bad '{key}'")))
}

/// Parses the `TIME_SERIES_DAILY_ADJUSTED` payload.
pub fn parse_daily_adjusted_json(ticker: &str, body: &str) -> Result<TickerSeries> {
    let v: Value = serde_json::from_str(body).map_err(|e| Error::parse(0, format!("malformed JSON: {e}")))?;
    for key in ["Error Message", "Note", "Information"] {
        if let Some(msg) = v.get(key) {
            let msg = msg.as_str().map_or_else(|| msg.to_string(), str::to_string);
            return Err(Error::Provider(msg));
        }
    }
    let series = v
        .get("Time Series (Daily)")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::parse(0, "payload has no 'Time Series (Daily)' map"))?;
    let mut bars = Vec::with_capacity(series.len());
    for (date, entry) in series {
        bars.push(Bar {
            date: parse_date(date, 0)?,
            open: field(entry, "1. open", date)?,
            high: field(entry, "2. high", date)?,
            low: field(entry, "3. low", date)?,
            close: field(entry, "4. close", date)?,
            adjusted_close: field(entry, "5. adjusted close", date)?,
            volume: field(entry, "6. volume", date)?,
        });
    }
    TickerSeries::new(ticker, bars)
}
