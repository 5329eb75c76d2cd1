//! Reverse geocoding and terrain elevation, behind a cache and a call counter.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use geoexif_core::GeoPoint;
use serde::{Deserialize, Serialize};
use url::Url;

pub const CACHE_FILE: &str = "geocache.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProviderKind {
    #[default]
    OfflineStub,
    HttpProvider,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeoProviderConfig {
    pub provider: ProviderKind,
    /// Base URL; reverse geocoding is requested from `{endpoint}/reverse`.
    pub endpoint: Option<Url>,
    /// Elevation base URL, `{url}/api/v1/lookup`. Defaults to `endpoint`.
    pub elevation_endpoint: Option<Url>,
    pub rate_limit_per_s: f64,
    pub timeout: Duration,
    pub cache_path: Option<PathBuf>,
    pub geocode_table: Option<PathBuf>,
    pub elevation_table: Option<PathBuf>,
}

impl Default for GeoProviderConfig {
    fn default() -> Self {
        GeoProviderConfig {
            provider: ProviderKind::OfflineStub,
            endpoint: None,
            elevation_endpoint: None,
            rate_limit_per_s: 1.0,
            timeout: Duration::from_secs(5),
            cache_path: None,
            geocode_table: None,
            elevation_table: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GeoServiceError {
    #[error("HTTP provider requires an endpoint")]
    MissingEndpoint,
    #[error("offline stub takes no endpoint")]
    UnexpectedEndpoint,
    #[error("rate limit must be positive, got {0}")]
    BadRateLimit(f64),
    #[error("stub table {path}:{line}: {reason}")]
    BadTable { path: PathBuf, line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Failure of one lookup; the caller treats it as "no answer".
#[derive(Debug, thiserror::Error)]
pub enum LookupError {
    #[error("http: {0}")]
    Http(#[from] ureq::Error),
    #[error("unexpected response: {0}")]
    Response(String),
}

/// Point rounded to 4 decimals, as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CacheKey(i32, i32);

impl CacheKey {
    pub fn of(p: &GeoPoint) -> Self {
        Self::from_degrees(p.latitude(), p.longitude())
    }

    fn from_degrees(lat: f64, lng: f64) -> Self {
        CacheKey((lat * 1e4).round() as i32, (lng * 1e4).round() as i32)
    }
}

pub trait GeoProvider: Send + Sync {
    fn reverse_geocode(&self, p: &GeoPoint) -> Result<Option<String>, LookupError>;
    fn elevation_m(&self, p: &GeoPoint) -> Result<Option<f64>, LookupError>;
    /// Network requests issued so far.
    fn network_calls(&self) -> u64 {
        0
    }
}

/// Answers from plain-text tables: one `lat lng<TAB>value` entry per line.
#[derive(Debug, Default, Clone)]
pub struct StubProvider {
    addresses: BTreeMap<CacheKey, String>,
    elevations: BTreeMap<CacheKey, f64>,
}

fn parse_table(path: &Path) -> Result<BTreeMap<CacheKey, String>, GeoServiceError> {
    let text = fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |reason: &str| GeoServiceError::BadTable { path: path.to_owned(), line: i + 1, reason: reason.into() };
        let (coords, value) = line.split_once('\t').ok_or_else(|| bad("missing tab"))?;
        let mut it = coords.split_whitespace().map(str::parse::<f64>);
        let (Some(Ok(lat)), Some(Ok(lng)), None) = (it.next(), it.next(), it.next()) else {
            return Err(bad("expected \"lat lng\""));
        };
        out.insert(CacheKey::from_degrees(lat, lng), value.trim().to_owned());
    }
    Ok(out)
}

impl StubProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tables(geocode: Option<&Path>, elevation: Option<&Path>) -> Result<Self, GeoServiceError> {
        let mut stub = StubProvider::new();
        if let Some(p) = geocode {
            stub.addresses = parse_table(p)?;
        }
        if let Some(p) = elevation {
            for (k, v) in parse_table(p)? {
                let m = v.parse::<f64>().map_err(|e| GeoServiceError::BadTable {
                    path: p.to_owned(),
                    line: 0,
                    reason: format!("elevation {v:?}: {e}"),
                })?;
                stub.elevations.insert(k, m);
            }
        }
        Ok(stub)
    }

    pub fn with_address(mut self, lat: f64, lng: f64, address: &str) -> Self {
        self.addresses.insert(CacheKey::from_degrees(lat, lng), address.into());
        self
    }

    pub fn with_elevation(mut self, lat: f64, lng: f64, m: f64) -> Self {
        self.elevations.insert(CacheKey::from_degrees(lat, lng), m);
        self
    }
}

impl GeoProvider for StubProvider {
    fn reverse_geocode(&self, p: &GeoPoint) -> Result<Option<String>, LookupError> {
        Ok(self.addresses.get(&CacheKey::of(p)).cloned())
    }

    fn elevation_m(&self, p: &GeoPoint) -> Result<Option<f64>, LookupError> {
        Ok(self.elevations.get(&CacheKey::of(p)).copied())
    }
}

/// Client-side token bucket.
#[derive(Debug)]
pub struct RateLimiter {
    per_s: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(per_s: f64) -> Self {
        RateLimiter { per_s, state: Mutex::new((1.0, Instant::now())) }
    }

    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                s.0 = (s.0 + now.duration_since(s.1).as_secs_f64() * self.per_s).min(1.0);
                s.1 = now;
                if s.0 >= 1.0 {
                    s.0 -= 1.0;
                    return;
                }
                (1.0 - s.0) / self.per_s
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

/// Nominatim-style reverse geocoding and open-elevation-style lookup over HTTP.
pub struct HttpProvider {
    agent: ureq::Agent,
    geocode: Url,
    elevation: Url,
    limiter: RateLimiter,
    calls: AtomicU64,
}

impl HttpProvider {
    pub fn new(endpoint: Url, elevation_endpoint: Option<Url>, rate_limit_per_s: f64, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .user_agent("geoexif")
            .build()
            .into();
        let join = |base: &Url, path: &str| {
            let mut u = base.clone();
            let p = format!("{}/{path}", u.path().trim_end_matches('/'));
            u.set_path(&p);
            u
        };
        HttpProvider {
            agent,
            geocode: join(&endpoint, "reverse"),
            elevation: join(elevation_endpoint.as_ref().unwrap_or(&endpoint), "api/v1/lookup"),
            limiter: RateLimiter::new(rate_limit_per_s),
            calls: AtomicU64::new(0),
        }
    }

    fn get_json(&self, url: &Url, query: &[(&str, String)]) -> Result<serde_json::Value, LookupError> {
        self.limiter.acquire();
        self.calls.fetch_add(1, Ordering::SeqCst);
        let mut req = self.agent.get(url.as_str());
        for (k, v) in query {
            req = req.query(k, v);
        }
        let body = req.call()?.body_mut().read_to_string()?;
        serde_json::from_str(&body).map_err(|e| LookupError::Response(e.to_string()))
    }
}

impl GeoProvider for HttpProvider {
    fn reverse_geocode(&self, p: &GeoPoint) -> Result<Option<String>, LookupError> {
        let v = self.get_json(
            &self.geocode,
            &[("format", "jsonv2".into()), ("lat", p.latitude().to_string()), ("lon", p.longitude().to_string())],
        )?;
        Ok(v.get("display_name").and_then(|s| s.as_str()).map(str::to_owned))
    }

    fn elevation_m(&self, p: &GeoPoint) -> Result<Option<f64>, LookupError> {
        let v = self.get_json(&self.elevation, &[("locations", format!("{},{}", p.latitude(), p.longitude()))])?;
        Ok(v.pointer("/results/0/elevation").and_then(serde_json::Value::as_f64))
    }

    fn network_calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
struct Cache {
    geocode: Vec<(CacheKey, Option<String>)>,
    elevation: Vec<(CacheKey, Option<f64>)>,
}

#[derive(Debug, Default)]
struct CacheMaps {
    geocode: BTreeMap<CacheKey, Option<String>>,
    elevation: BTreeMap<CacheKey, Option<f64>>,
}

/// Cached, counted access to one provider. Failed lookups are not cached.
pub struct GeoServices {
    provider: Box<dyn GeoProvider>,
    cache: Mutex<CacheMaps>,
    cache_path: Option<PathBuf>,
    provider_calls: AtomicU64,
}

impl GeoServices {
    pub fn from_config(config: &GeoProviderConfig) -> Result<Self, GeoServiceError> {
        let provider: Box<dyn GeoProvider> = match config.provider {
            ProviderKind::OfflineStub => {
                if config.endpoint.is_some() || config.elevation_endpoint.is_some() {
                    return Err(GeoServiceError::UnexpectedEndpoint);
                }
                Box::new(StubProvider::from_tables(config.geocode_table.as_deref(), config.elevation_table.as_deref())?)
            }
            ProviderKind::HttpProvider => {
                let endpoint = config.endpoint.clone().ok_or(GeoServiceError::MissingEndpoint)?;
                if config.rate_limit_per_s.is_nan() || config.rate_limit_per_s <= 0.0 {
                    return Err(GeoServiceError::BadRateLimit(config.rate_limit_per_s));
                }
                Box::new(HttpProvider::new(
                    endpoint,
                    config.elevation_endpoint.clone(),
                    config.rate_limit_per_s,
                    config.timeout,
                ))
            }
        };
        Self::with_provider(provider, config.cache_path.clone())
    }

    pub fn with_provider(provider: Box<dyn GeoProvider>, cache_path: Option<PathBuf>) -> Result<Self, GeoServiceError> {
        let mut maps = CacheMaps::default();
        if let Some(path) = cache_path.as_deref().filter(|p| p.exists()) {
            match serde_json::from_str::<Cache>(&fs::read_to_string(path)?) {
                Ok(c) => {
                    maps.geocode = c.geocode.into_iter().collect();
                    maps.elevation = c.elevation.into_iter().collect();
                }
                Err(e) => log::warn!("ignoring unreadable geo cache {}: {e}", path.display()),
            }
        }
        Ok(GeoServices { provider, cache: Mutex::new(maps), cache_path, provider_calls: AtomicU64::new(0) })
    }

    pub fn offline() -> Self {
        Self::with_provider(Box::new(StubProvider::new()), None).expect("no cache file to read")
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, CacheMaps> {
        self.cache.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn reverse_geocode(&self, p: &GeoPoint) -> Option<String> {
        let key = CacheKey::of(p);
        if let Some(hit) = self.lock().geocode.get(&key) {
            return hit.clone();
        }
        self.provider_calls.fetch_add(1, Ordering::SeqCst);
        match self.provider.reverse_geocode(p) {
            Ok(v) => {
                self.lock().geocode.insert(key, v.clone());
                v
            }
            Err(e) => {
                log::warn!("reverse geocoding {},{} failed: {e}", p.latitude(), p.longitude());
                None
            }
        }
    }

    pub fn elevation_m(&self, p: &GeoPoint) -> Option<f64> {
        let key = CacheKey::of(p);
        if let Some(hit) = self.lock().elevation.get(&key) {
            return *hit;
        }
        self.provider_calls.fetch_add(1, Ordering::SeqCst);
        match self.provider.elevation_m(p) {
            Ok(v) => {
                self.lock().elevation.insert(key, v);
                v
            }
            Err(e) => {
                log::warn!("elevation lookup {},{} failed: {e}", p.latitude(), p.longitude());
                None
            }
        }
    }

    /// Lookups that missed the cache and reached the provider.
    pub fn provider_calls(&self) -> u64 {
        self.provider_calls.load(Ordering::SeqCst)
    }

    pub fn network_calls(&self) -> u64 {
        self.provider.network_calls()
    }

    pub fn save(&self) -> io::Result<()> {
        let Some(path) = &self.cache_path else { return Ok(()) };
        let c = {
            let m = self.lock();
            Cache {
                geocode: m.geocode.iter().map(|(k, v)| (*k, v.clone())).collect(),
                elevation: m.elevation.iter().map(|(k, v)| (*k, *v)).collect(),
            }
        };
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(&c).map_err(io::Error::other)?)?;
        fs::rename(tmp, path)
    }
}
