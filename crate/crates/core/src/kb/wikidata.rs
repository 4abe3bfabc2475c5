//! Client for the Wikidata entity-search (`wbsearchentities`) and
//! entity-data (`wbgetentities`) API actions.
//!
//! Each search is hydrated with English labels, descriptions, aliases and the
//! labels of its instance-of (P31) and subclass-of (P279) targets, then cached
//! as one JSON document per (endpoint, query, limit). Offline mode answers
//! from the cache only and never touches the transport.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{check_query, KbEntity, KbError, KnowledgeBase};
use crate::io::write_atomic;
use crate::ontology::store::now_timestamp;

pub const DEFAULT_ENDPOINT: &str = "https://www.wikidata.org/w/api.php";

static NETWORK_GUARD: AtomicBool = AtomicBool::new(false);
static BLOCKED_ATTEMPTS: AtomicUsize = AtomicUsize::new(0);

/// While active, [`HttpTransport`] refuses every request.
pub fn set_network_guard(active: bool) {
    NETWORK_GUARD.store(active, Ordering::SeqCst);
}

pub fn network_guard_active() -> bool {
    NETWORK_GUARD.load(Ordering::SeqCst)
}

/// Requests refused by the guard since process start.
pub fn blocked_attempts() -> usize {
    BLOCKED_ATTEMPTS.load(Ordering::SeqCst)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, KbError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
    user_agent: String,
}

impl HttpTransport {
    pub fn new(user_agent: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpTransport {
            agent,
            user_agent: user_agent.into(),
        }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport::new(
            concat!("contron/", env!("CARGO_PKG_VERSION")),
            Duration::from_secs(30),
        )
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, KbError> {
        if network_guard_active() {
            BLOCKED_ATTEMPTS.fetch_add(1, Ordering::SeqCst);
            return Err(KbError::NetworkBlocked(url.to_owned()));
        }
        let mut resp = self
            .agent
            .get(url)
            .header("User-Agent", &self.user_agent)
            .call()
            .map_err(|e| KbError::Network(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| KbError::Network(e.to_string()))?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WikidataConfig {
    pub endpoint: String,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    /// Upper bound on outbound requests per second.
    pub max_requests_per_second: f64,
    pub retries: u32,
    pub initial_backoff: Duration,
    pub language: String,
}

impl Default for WikidataConfig {
    fn default() -> Self {
        WikidataConfig {
            endpoint: DEFAULT_ENDPOINT.into(),
            cache_dir: None,
            offline: false,
            max_requests_per_second: 5.0,
            retries: 3,
            initial_backoff: Duration::from_millis(500),
            language: "en".into(),
        }
    }
}

/// One cached search result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub endpoint: String,
    pub query: String,
    pub limit: usize,
    pub retrieved_at: String,
    pub entities: Vec<KbEntity>,
}

pub struct WikidataClient {
    config: WikidataConfig,
    transport: Box<dyn Transport>,
    last_request: Mutex<Option<Instant>>,
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn cache_key(endpoint: &str, query: &str, limit: usize) -> String {
    let mut h = Sha256::new();
    h.update(endpoint.as_bytes());
    h.update([0]);
    h.update(query.as_bytes());
    h.update([0]);
    h.update(limit.to_string().as_bytes());
    hex::encode(h.finalize())
}

impl WikidataClient {
    pub fn new(config: WikidataConfig) -> Self {
        Self::with_transport(config, Box::new(HttpTransport::default()))
    }

    pub fn with_transport(config: WikidataConfig, transport: Box<dyn Transport>) -> Self {
        WikidataClient {
            config,
            transport,
            last_request: Mutex::new(None),
        }
    }

    pub fn config(&self) -> &WikidataConfig {
        &self.config
    }

    fn cache_path(&self, query: &str, limit: usize) -> Option<PathBuf> {
        self.config
            .cache_dir
            .as_ref()
            .map(|d| d.join(format!("{}.json", cache_key(&self.config.endpoint, query, limit))))
    }

    /// Raw cached document for a query, if present.
    pub fn cached_bytes(&self, query: &str, limit: usize) -> Option<Vec<u8>> {
        std::fs::read(self.cache_path(query, limit)?).ok()
    }

    /// Writes a search result into the cache, as a live lookup would. Does
    /// nothing without a cache directory.
    pub fn store_cached(
        &self,
        query: &str,
        limit: usize,
        entities: &[KbEntity],
        retrieved_at: &str,
    ) -> Result<(), KbError> {
        let Some(path) = self.cache_path(query, limit) else {
            return Ok(());
        };
        let entry = CacheEntry {
            endpoint: self.config.endpoint.clone(),
            query: query.to_owned(),
            limit,
            retrieved_at: retrieved_at.to_owned(),
            entities: entities.to_vec(),
        };
        let io_err = |e: crate::Error| KbError::Io {
            path: path.clone(),
            reason: e.to_string(),
        };
        let json = crate::io::to_pretty_json(&entry).map_err(io_err)?;
        write_atomic(&path, &json).map_err(io_err)
    }

    fn read_cache(&self, path: &Path) -> Result<Option<CacheEntry>, KbError> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| KbError::Io {
                path: path.to_owned(),
                reason: format!("corrupt cache entry: {e}"),
            }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(KbError::Io {
                path: path.to_owned(),
                reason: e.to_string(),
            }),
        }
    }

    fn pace(&self) {
        if self.config.max_requests_per_second <= 0.0 {
            return;
        }
        let interval = Duration::from_secs_f64(1.0 / self.config.max_requests_per_second);
        let mut last = self.last_request.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(prev) = *last {
            let due = prev + interval;
            let now = Instant::now();
            if due > now {
                std::thread::sleep(due - now);
            }
        }
        *last = Some(Instant::now());
    }

    fn fetch_json(&self, params: &[(&str, String)]) -> Result<Value, KbError> {
        let query: Vec<String> = params
            .iter()
            .map(|(k, v)| format!("{k}={}", percent_encode(v)))
            .collect();
        let url = format!("{}?{}", self.config.endpoint, query.join("&"));
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            self.pace();
            let outcome = match self.transport.get(&url) {
                Ok(r) if (200..300).contains(&r.status) => {
                    return serde_json::from_str(&r.body)
                        .map_err(|e| KbError::MalformedResponse(e.to_string()));
                }
                Ok(r) if r.status == 429 => KbError::RateLimited(self.config.endpoint.clone()),
                Ok(r) if r.status >= 500 => KbError::Network(format!("HTTP {}", r.status)),
                Ok(r) => {
                    return Err(KbError::MalformedResponse(format!(
                        "unexpected HTTP {} from {url}",
                        r.status
                    )))
                }
                Err(e @ KbError::Network(_)) => e,
                Err(e) => return Err(e),
            };
            if attempt >= self.config.retries {
                return Err(outcome);
            }
            attempt += 1;
            warn!("{outcome}; retry {attempt} in {backoff:?}");
            std::thread::sleep(backoff);
            backoff *= 2;
        }
    }

    fn lang(&self) -> String {
        self.config.language.clone()
    }

    fn search_ids(&self, name: &str, limit: usize) -> Result<Vec<String>, KbError> {
        let v = self.fetch_json(&[
            ("action", "wbsearchentities".into()),
            ("search", name.into()),
            ("language", self.lang()),
            ("uselang", self.lang()),
            ("type", "item".into()),
            ("limit", limit.to_string()),
            ("format", "json".into()),
        ])?;
        if let Some(err) = v.get("error") {
            return Err(KbError::MalformedResponse(format!("API error: {err}")));
        }
        let hits = v
            .get("search")
            .and_then(Value::as_array)
            .ok_or_else(|| KbError::MalformedResponse("missing search array".into()))?;
        let mut ids = Vec::new();
        for h in hits {
            let id = h
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| KbError::MalformedResponse("search hit without id".into()))?;
            if !ids.iter().any(|x| x == id) {
                ids.push(id.to_owned());
            }
        }
        ids.truncate(limit);
        Ok(ids)
    }

    fn get_entities(&self, ids: &[String], props: &str) -> Result<serde_json::Map<String, Value>, KbError> {
        let mut out = serde_json::Map::new();
        // the API accepts at most 50 ids per call
        for chunk in ids.chunks(50) {
            let v = self.fetch_json(&[
                ("action", "wbgetentities".into()),
                ("ids", chunk.join("|")),
                ("props", props.into()),
                ("languages", self.lang()),
                ("format", "json".into()),
            ])?;
            let entities = v
                .get("entities")
                .and_then(Value::as_object)
                .ok_or_else(|| KbError::MalformedResponse("missing entities object".into()))?;
            out.extend(entities.clone());
        }
        Ok(out)
    }

    fn hydrate(&self, ids: &[String]) -> Result<Vec<KbEntity>, KbError> {
        if ids.is_empty() {
            return Ok(Vec::new());
        }
        let lang = self.lang();
        let data = self.get_entities(ids, "labels|descriptions|aliases|claims")?;
        let mut entities = Vec::new();
        let mut all_categories: Vec<String> = Vec::new();
        for id in ids {
            let Some(e) = data.get(id) else {
                debug!("entity {id} missing from entity data");
                continue;
            };
            if e.get("missing").is_some() {
                continue;
            }
            let label = e
                .pointer(&format!("/labels/{lang}/value"))
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_owned();
            let description = e
                .pointer(&format!("/descriptions/{lang}/value"))
                .and_then(Value::as_str)
                .map(str::to_owned);
            let mut aliases: Vec<String> = Vec::new();
            for a in e
                .pointer(&format!("/aliases/{lang}"))
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
            {
                if let Some(s) = a.get("value").and_then(Value::as_str) {
                    if !aliases.iter().any(|x| x == s) {
                        aliases.push(s.to_owned());
                    }
                }
            }
            let mut category_ids: Vec<String> = Vec::new();
            for prop in ["P31", "P279"] {
                for claim in e
                    .pointer(&format!("/claims/{prop}"))
                    .and_then(Value::as_array)
                    .into_iter()
                    .flatten()
                {
                    if let Some(target) = claim
                        .pointer("/mainsnak/datavalue/value/id")
                        .and_then(Value::as_str)
                    {
                        if !category_ids.iter().any(|c| c == target) {
                            category_ids.push(target.to_owned());
                        }
                    }
                }
            }
            for c in &category_ids {
                if !all_categories.contains(c) {
                    all_categories.push(c.clone());
                }
            }
            entities.push(KbEntity {
                entity_id: id.clone(),
                label,
                description,
                aliases,
                category_ids,
                category_labels: Vec::new(),
            });
        }
        if !all_categories.is_empty() {
            let labels = self.get_entities(&all_categories, "labels")?;
            for e in &mut entities {
                e.category_labels = e
                    .category_ids
                    .iter()
                    .filter_map(|c| {
                        labels
                            .get(c)?
                            .pointer(&format!("/labels/{lang}/value"))?
                            .as_str()
                            .map(str::to_owned)
                    })
                    .collect();
            }
        }
        Ok(entities)
    }
}

impl KnowledgeBase for WikidataClient {
    fn search_entities(&self, name: &str, limit: usize) -> Result<Vec<KbEntity>, KbError> {
        check_query(name, limit)?;
        let cache_path = self.cache_path(name, limit);
        if let Some(path) = &cache_path {
            if let Some(entry) = self.read_cache(path)? {
                return Ok(entry.entities);
            }
        }
        if self.config.offline {
            return Err(KbError::CacheMiss {
                query: name.to_owned(),
            });
        }
        let ids = self.search_ids(name, limit)?;
        let entities = self.hydrate(&ids)?;
        if cache_path.is_some() {
            self.store_cached(name, limit, &entities, &now_timestamp())?;
        }
        Ok(entities)
    }
}
