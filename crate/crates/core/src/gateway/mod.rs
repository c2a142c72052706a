//! Single choke-point for external services.
//!
//! Every call to the multimodal model, reverse image search, web search or
//! fact-check database becomes a [`ProviderRequest`] whose cache key is
//! `(provider, operation, sha256(payload))`. The [`Mode`] decides whether
//! the request goes to an adapter, to the on-disk cache, or both. Responses
//! are schema-checked here so downstream stages only see typed values.

mod adapter;
mod cache;

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, NaiveDate, NaiveTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub use adapter::{
    AdapterError, Endpoint, Fixture, FixtureAdapter, FixtureFile, FixtureLoadError, HttpAdapter, ProviderAdapter,
};
pub use cache::{CacheMeta, ReplayCache};

use crate::case::MediaAsset;
use crate::digest::sha256_hex;
use crate::media::FrameDescription;
use crate::planner::ToolKind;
use crate::text::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    MultimodalModel,
    ReverseImageSearch,
    WebSearch,
    FactCheckDb,
}

impl ProviderKind {
    pub const ALL: [ProviderKind; 4] = [
        ProviderKind::MultimodalModel,
        ProviderKind::ReverseImageSearch,
        ProviderKind::WebSearch,
        ProviderKind::FactCheckDb,
    ];

    pub fn dir_name(self) -> &'static str {
        match self {
            Self::MultimodalModel => "multimodal_model",
            Self::ReverseImageSearch => "reverse_image_search",
            Self::WebSearch => "web_search",
            Self::FactCheckDb => "fact_check_db",
        }
    }

    pub fn env_prefix(self) -> &'static str {
        match self {
            Self::MultimodalModel => "MULTIMODAL_MODEL",
            Self::ReverseImageSearch => "REVERSE_IMAGE_SEARCH",
            Self::WebSearch => "WEB_SEARCH",
            Self::FactCheckDb => "FACT_CHECK_DB",
        }
    }
}

/// Operation names used on the wire and in cache paths.
pub mod ops {
    pub const DESCRIBE_VIDEO: &str = "describe_video";
    pub const EXTRACT_CLAIMS: &str = "extract_claims";
    pub const EXTRACT_SOURCE_CONTEXT: &str = "extract_source_context";
    pub const REVERSE_SEARCH: &str = "reverse_search";
    pub const SEARCH: &str = "search";
    pub const FETCH: &str = "fetch";
    pub const LOOKUP: &str = "lookup";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Record,
    Replay,
    Mock,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Self::Live),
            "record" => Ok(Self::Record),
            "replay" => Ok(Self::Replay),
            "mock" => Ok(Self::Mock),
            other => Err(format!(
                "unknown mode `{other}` (expected live, record, replay or mock)"
            )),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Live => "live",
            Self::Record => "record",
            Self::Replay => "replay",
            Self::Mock => "mock",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GatewayError {
    #[error("provider {provider} unavailable: {reason}")]
    ProviderUnavailable { provider: String, reason: String },
    #[error("replay miss for {provider}/{operation}/{digest}")]
    ReplayMiss {
        provider: String,
        operation: String,
        digest: String,
    },
    #[error("malformed {provider}/{operation} response at `{path}`: {reason}")]
    MalformedProviderResponse {
        provider: String,
        operation: String,
        path: String,
        reason: String,
    },
    #[error("corrupt cache entry {path}: {reason}")]
    CacheCorrupt { path: PathBuf, reason: String },
    #[error("empty image")]
    EmptyImage,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gateway misconfigured: {0}")]
    Misconfigured(String),
    #[error("cache i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
pub struct ProviderRequest {
    pub provider: ProviderKind,
    pub operation: String,
    pub payload_digest: String,
    pub payload: Vec<u8>,
    /// Media bytes shipped alongside the payload to live adapters. Not part
    /// of the cache key; payloads carry the attachment's digest instead.
    pub attachment: Option<Arc<Vec<u8>>>,
}

impl std::fmt::Debug for ProviderRequest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProviderRequest")
            .field("provider", &self.provider)
            .field("operation", &self.operation)
            .field("payload_digest", &self.payload_digest)
            .field("payload_len", &self.payload.len())
            .field("attachment_len", &self.attachment.as_ref().map(|a| a.len()))
            .finish()
    }
}

impl ProviderRequest {
    pub fn new(provider: ProviderKind, operation: impl Into<String>, payload: Vec<u8>) -> Self {
        Self {
            provider,
            operation: operation.into(),
            payload_digest: sha256_hex(&payload),
            payload,
            attachment: None,
        }
    }

    /// Payload serialized as compact JSON with struct field order, so the
    /// digest is stable.
    pub fn json(provider: ProviderKind, operation: impl Into<String>, payload: &impl Serialize) -> Self {
        Self::new(
            provider,
            operation,
            serde_json::to_vec(payload).expect("payload serializes"),
        )
    }

    pub fn with_attachment(mut self, bytes: Arc<Vec<u8>>) -> Self {
        self.attachment = Some(bytes);
        self
    }
}

/// Source of timestamps. Replay and mock runs use a fixed instant so their
/// outputs are byte-stable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    System,
    Fixed(DateTime<Utc>),
}

impl Clock {
    pub fn now(&self) -> DateTime<Utc> {
        match self {
            Self::System => Utc::now(),
            Self::Fixed(t) => *t,
        }
    }

    pub fn deterministic() -> Self {
        Self::Fixed(DateTime::<Utc>::UNIX_EPOCH)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(250),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub snippet: String,
    #[serde(default)]
    pub publisher: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<DateTime<Utc>>,
    pub retrieved_at: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactCheckVerdict {
    True,
    False,
    Mixed,
    Unrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactCheckEntry {
    pub verdict: FactCheckVerdict,
    pub url: String,
    pub publisher: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub claim_reviewed: String,
}

/// A fetched web page or post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchedPage {
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub publisher: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<DateTime<Utc>>,
    pub retrieved_at: DateTime<Utc>,
}

impl FetchedPage {
    pub fn as_search_result(&self) -> SearchResult {
        SearchResult {
            url: self.url.clone(),
            title: self.title.clone(),
            snippet: self.body.chars().take(280).collect(),
            publisher: self.publisher.clone(),
            published_at: self.published_at,
            retrieved_at: self.retrieved_at,
        }
    }
}

/// A claim proposed by the multimodal model during planning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimDraft {
    pub text: String,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suggested_tools: Vec<ToolKind>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderWhere {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub place_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<GeoPoint>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderWhen {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<NaiveTime>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cues: Vec<String>,
}

/// Source-context fields as returned by the model; every field optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ProviderSourceContext {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_detail: Option<String>,
    #[serde(default, rename = "where", skip_serializing_if = "Option::is_none")]
    pub where_: Option<ProviderWhere>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<ProviderWhen>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub who: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub why: Option<String>,
}

#[derive(Deserialize)]
struct DescriptionsResponse {
    descriptions: Vec<FrameDescription>,
}

#[derive(Deserialize)]
struct ResultsResponse {
    results: Vec<RawSearchResult>,
}

#[derive(Deserialize)]
struct RawSearchResult {
    url: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    snippet: String,
    #[serde(default)]
    publisher: String,
    #[serde(default)]
    published_at: Option<DateTime<Utc>>,
    #[serde(default)]
    retrieved_at: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct RawPage {
    url: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    publisher: String,
    body: String,
    #[serde(default)]
    published_at: Option<DateTime<Utc>>,
    #[serde(default)]
    retrieved_at: Option<DateTime<Utc>>,
}

#[derive(Deserialize)]
struct EntriesResponse {
    entries: Vec<FactCheckEntry>,
}

#[derive(Deserialize)]
struct ClaimsResponse {
    claims: Vec<ClaimDraft>,
}

#[derive(Serialize)]
struct DescribeVideoPayload<'a> {
    asset_id: &'a str,
    content_sha256: &'a str,
    duration_s: Option<f64>,
    instruction: &'a str,
}

#[derive(Serialize)]
struct ReverseSearchPayload<'a> {
    image_sha256: &'a str,
    label: &'a str,
}

#[derive(Serialize)]
struct TextPayload<'a> {
    text: &'a str,
}

#[derive(Serialize)]
struct UrlPayload<'a> {
    url: &'a str,
}

#[derive(Serialize)]
struct ClaimTextPayload<'a> {
    claim_text: &'a str,
}

/// One text item submitted for claim extraction.
#[derive(Debug, Clone, Serialize)]
pub struct ClaimSourceText {
    pub source: String,
    pub index: usize,
    pub text: String,
}

#[derive(Serialize)]
struct ExtractClaimsPayload<'a> {
    case_id: &'a str,
    texts: &'a [ClaimSourceText],
}

#[derive(Serialize)]
struct SourceContextPayload<'a> {
    url: &'a str,
    body: &'a str,
}

#[derive(Debug, Default)]
struct CallStats {
    adapter_calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

pub struct Gateway {
    mode: Mode,
    cache: Option<ReplayCache>,
    adapter: Option<Arc<dyn ProviderAdapter>>,
    clock: Clock,
    retry: RetryPolicy,
    stats: CallStats,
    memo: Mutex<HashMap<(ProviderKind, String, String), Vec<u8>>>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("mode", &self.mode)
            .field("cache", &self.cache.as_ref().map(ReplayCache::root))
            .field("adapter", &self.adapter.as_ref().map(|a| a.id().to_string()))
            .finish()
    }
}

impl Gateway {
    /// Clock defaults to the system clock in live/record modes and a fixed
    /// instant in replay/mock modes.
    pub fn new(mode: Mode) -> Self {
        let clock = match mode {
            Mode::Live | Mode::Record => Clock::System,
            Mode::Replay | Mode::Mock => Clock::deterministic(),
        };
        Self {
            mode,
            cache: None,
            adapter: None,
            clock,
            retry: RetryPolicy::default(),
            stats: CallStats::default(),
            memo: Mutex::default(),
        }
    }

    pub fn with_cache(mut self, root: impl Into<PathBuf>) -> Self {
        self.cache = Some(ReplayCache::new(root));
        self
    }

    pub fn with_adapter(mut self, adapter: Arc<dyn ProviderAdapter>) -> Self {
        self.adapter = Some(adapter);
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn clock(&self) -> Clock {
        self.clock
    }

    pub fn cache(&self) -> Option<&ReplayCache> {
        self.cache.as_ref()
    }

    pub fn adapter_calls(&self) -> usize {
        self.stats.adapter_calls.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> usize {
        self.stats.cache_hits.load(Ordering::Relaxed)
    }

    /// Checks that the mode has what it needs.
    pub fn check(&self) -> Result<(), GatewayError> {
        let missing = |what: &str| {
            Err(GatewayError::Misconfigured(format!(
                "{} mode requires {what}",
                self.mode
            )))
        };
        match self.mode {
            Mode::Live if self.adapter.is_none() => missing("a provider adapter"),
            Mode::Record if self.adapter.is_none() => missing("a provider adapter"),
            Mode::Record | Mode::Replay if self.cache.is_none() => missing("a cache root"),
            Mode::Mock if self.adapter.is_none() && self.cache.is_none() => missing("a fixture file or cache root"),
            Mode::Mock if self.adapter.as_ref().is_some_and(|a| !a.is_local()) => missing("a local fixture adapter"),
            _ => Ok(()),
        }
    }

    fn miss(req: &ProviderRequest) -> GatewayError {
        GatewayError::ReplayMiss {
            provider: req.provider.dir_name().into(),
            operation: req.operation.clone(),
            digest: req.payload_digest.clone(),
        }
    }

    fn call_adapter(&self, req: &ProviderRequest, retries: bool) -> Result<Vec<u8>, GatewayError> {
        let adapter = self
            .adapter
            .as_ref()
            .ok_or_else(|| GatewayError::Misconfigured(format!("{} mode requires an adapter", self.mode)))?;
        let attempts = if retries { self.retry.max_attempts.max(1) } else { 1 };
        let mut last_reason = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.base_delay * 2u32.pow(attempt - 1));
            }
            self.stats.adapter_calls.fetch_add(1, Ordering::Relaxed);
            match adapter.call(req) {
                Ok(bytes) => return Ok(bytes),
                Err(AdapterError::NoFixture) => return Err(Self::miss(req)),
                Err(AdapterError::Unavailable { reason, retryable }) => {
                    tracing::debug!(provider = req.provider.dir_name(), attempt, %reason, "provider call failed");
                    last_reason = reason;
                    if !retryable {
                        break;
                    }
                }
            }
        }
        Err(GatewayError::ProviderUnavailable {
            provider: req.provider.dir_name().into(),
            reason: last_reason,
        })
    }

    /// Raw bytes for a request according to the mode. Successful responses
    /// are memoised for the lifetime of the gateway, so repeated identical
    /// requests reach the adapter or cache once.
    pub fn fetch_with_cache(&self, req: &ProviderRequest) -> Result<Vec<u8>, GatewayError> {
        let key = (req.provider, req.operation.clone(), req.payload_digest.clone());
        if let Some(bytes) = self.memo.lock().expect("memo lock").get(&key) {
            self.stats.cache_hits.fetch_add(1, Ordering::Relaxed);
            return Ok(bytes.clone());
        }
        let bytes = self.fetch_uncached(req)?;
        self.memo.lock().expect("memo lock").insert(key, bytes.clone());
        Ok(bytes)
    }

    fn fetch_uncached(&self, req: &ProviderRequest) -> Result<Vec<u8>, GatewayError> {
        match self.mode {
            Mode::Live => self.call_adapter(req, true),
            Mode::Record => {
                let bytes = self.call_adapter(req, true)?;
                let cache = self
                    .cache
                    .as_ref()
                    .ok_or_else(|| GatewayError::Misconfigured("record mode requires a cache root".into()))?;
                let adapter_id = self.adapter.as_ref().map_or("unknown", |a| a.id());
                cache.store(req, &bytes, adapter_id, self.clock.now())?;
                Ok(bytes)
            }
            Mode::Replay => {
                let cache = self.cache.as_ref().ok_or_else(|| Self::miss(req))?;
                match cache.load(req)? {
                    Some((bytes, _)) => {
                        self.stats.cache_hits.fetch_add(1, Ordering::Relaxed);
                        Ok(bytes)
                    }
                    None => Err(Self::miss(req)),
                }
            }
            Mode::Mock => {
                if let Some(cache) = &self.cache {
                    if let Some((bytes, _)) = cache.load(req)? {
                        self.stats.cache_hits.fetch_add(1, Ordering::Relaxed);
                        return Ok(bytes);
                    }
                }
                match &self.adapter {
                    Some(a) if a.is_local() => self.call_adapter(req, false),
                    _ => Err(Self::miss(req)),
                }
            }
        }
    }

    fn decode<T: DeserializeOwned>(&self, req: &ProviderRequest, bytes: &[u8]) -> Result<T, GatewayError> {
        let mut de = serde_json::Deserializer::from_slice(bytes);
        serde_path_to_error::deserialize(&mut de).map_err(|e| GatewayError::MalformedProviderResponse {
            provider: req.provider.dir_name().into(),
            operation: req.operation.clone(),
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        })
    }

    fn malformed(req: &ProviderRequest, path: String, reason: impl Into<String>) -> GatewayError {
        GatewayError::MalformedProviderResponse {
            provider: req.provider.dir_name().into(),
            operation: req.operation.clone(),
            path,
            reason: reason.into(),
        }
    }

    /// Time-ordered frame descriptions for a video.
    pub fn describe_video(&self, asset: &MediaAsset, instruction: &str) -> Result<Vec<FrameDescription>, GatewayError> {
        let bytes = Arc::new(std::fs::read(&asset.path)?);
        let digest = sha256_hex(&bytes);
        let req = ProviderRequest::json(
            ProviderKind::MultimodalModel,
            ops::DESCRIBE_VIDEO,
            &DescribeVideoPayload {
                asset_id: &asset.asset_id,
                content_sha256: &digest,
                duration_s: asset.duration_s,
                instruction,
            },
        )
        .with_attachment(bytes);
        let raw = self.fetch_with_cache(&req)?;
        let resp: DescriptionsResponse = self.decode(&req, &raw)?;
        let limit = asset.duration_s.map(|d| d + 0.5);
        let mut prev_end = f64::NEG_INFINITY;
        for (i, d) in resp.descriptions.iter().enumerate() {
            let path = |f: &str| format!("descriptions[{i}].{f}");
            if !(d.t_start_s.is_finite() && d.t_start_s >= 0.0) {
                return Err(Self::malformed(
                    &req,
                    path("t_start_s"),
                    "must be a non-negative number",
                ));
            }
            if d.t_end_s.partial_cmp(&d.t_start_s).is_none_or(|o| o.is_lt()) {
                return Err(Self::malformed(&req, path("t_end_s"), "earlier than t_start_s"));
            }
            if d.t_start_s < prev_end {
                return Err(Self::malformed(
                    &req,
                    path("t_start_s"),
                    "descriptions overlap or are out of order",
                ));
            }
            if let Some(limit) = limit {
                if d.t_end_s > limit {
                    return Err(Self::malformed(&req, path("t_end_s"), "beyond the end of the video"));
                }
            }
            prev_end = d.t_end_s;
        }
        Ok(resp.descriptions)
    }

    /// Retrieval time for responses that omit it: now, but never before
    /// the publication time (the fixed replay clock predates most pages).
    fn fill_retrieved(&self, published_at: Option<DateTime<Utc>>) -> DateTime<Utc> {
        let now = self.clock.now();
        published_at.map_or(now, |p| p.max(now))
    }

    fn checked_results(
        &self,
        req: &ProviderRequest,
        raw: Vec<RawSearchResult>,
    ) -> Result<Vec<SearchResult>, GatewayError> {
        let mut out: Vec<SearchResult> = Vec::with_capacity(raw.len());
        for (i, r) in raw.into_iter().enumerate() {
            if r.url.trim().is_empty() {
                return Err(Self::malformed(req, format!("results[{i}].url"), "empty url"));
            }
            let retrieved_at = r.retrieved_at.unwrap_or_else(|| self.fill_retrieved(r.published_at));
            if let Some(published) = r.published_at {
                if retrieved_at < published {
                    return Err(Self::malformed(
                        req,
                        format!("results[{i}].retrieved_at"),
                        "earlier than published_at",
                    ));
                }
            }
            if out.iter().any(|o| o.url == r.url) {
                continue;
            }
            out.push(SearchResult {
                url: r.url,
                title: r.title,
                snippet: r.snippet,
                publisher: r.publisher,
                published_at: r.published_at,
                retrieved_at,
            });
        }
        Ok(out)
    }

    /// Related pages for an image, deduplicated by url in provider rank
    /// order. `label` names the image (asset id or keyframe slug).
    pub fn reverse_image_search(&self, image_bytes: &[u8], label: &str) -> Result<Vec<SearchResult>, GatewayError> {
        if image_bytes.is_empty() {
            return Err(GatewayError::EmptyImage);
        }
        match image::guess_format(image_bytes) {
            Ok(image::ImageFormat::Jpeg | image::ImageFormat::Png) => {}
            _ => return Err(GatewayError::InvalidRequest("image must be JPEG or PNG".into())),
        }
        let digest = sha256_hex(image_bytes);
        let req = ProviderRequest::json(
            ProviderKind::ReverseImageSearch,
            ops::REVERSE_SEARCH,
            &ReverseSearchPayload {
                image_sha256: &digest,
                label,
            },
        )
        .with_attachment(Arc::new(image_bytes.to_vec()));
        let raw = self.fetch_with_cache(&req)?;
        let resp: ResultsResponse = self.decode(&req, &raw)?;
        self.checked_results(&req, resp.results)
    }

    pub fn web_search(&self, text: &str) -> Result<Vec<SearchResult>, GatewayError> {
        if text.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("search query text is empty".into()));
        }
        let req = ProviderRequest::json(ProviderKind::WebSearch, ops::SEARCH, &TextPayload { text });
        let raw = self.fetch_with_cache(&req)?;
        let resp: ResultsResponse = self.decode(&req, &raw)?;
        self.checked_results(&req, resp.results)
    }

    pub fn fetch_page(&self, url: &str) -> Result<FetchedPage, GatewayError> {
        if url.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("url is empty".into()));
        }
        let req = ProviderRequest::json(ProviderKind::WebSearch, ops::FETCH, &UrlPayload { url });
        let raw = self.fetch_with_cache(&req)?;
        let page: RawPage = self.decode(&req, &raw)?;
        let retrieved_at = page
            .retrieved_at
            .unwrap_or_else(|| self.fill_retrieved(page.published_at));
        if page.published_at.is_some_and(|p| retrieved_at < p) {
            return Err(Self::malformed(
                &req,
                "retrieved_at".into(),
                "earlier than published_at",
            ));
        }
        Ok(FetchedPage {
            url: page.url,
            title: page.title,
            publisher: page.publisher,
            body: page.body,
            published_at: page.published_at,
            retrieved_at,
        })
    }

    /// Fact-check entries, newest first; undated entries last.
    pub fn fact_check_lookup(&self, claim_text: &str) -> Result<Vec<FactCheckEntry>, GatewayError> {
        if claim_text.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("claim text is empty".into()));
        }
        let req = ProviderRequest::json(ProviderKind::FactCheckDb, ops::LOOKUP, &ClaimTextPayload { claim_text });
        let raw = self.fetch_with_cache(&req)?;
        let mut resp: EntriesResponse = self.decode(&req, &raw)?;
        for (i, e) in resp.entries.iter().enumerate() {
            if e.url.trim().is_empty() {
                return Err(Self::malformed(&req, format!("entries[{i}].url"), "empty url"));
            }
        }
        resp.entries
            .sort_by(|a, b| b.published_at.cmp(&a.published_at).then_with(|| a.url.cmp(&b.url)));
        Ok(resp.entries)
    }

    pub fn extract_claims(&self, case_id: &str, texts: &[ClaimSourceText]) -> Result<Vec<ClaimDraft>, GatewayError> {
        let req = ProviderRequest::json(
            ProviderKind::MultimodalModel,
            ops::EXTRACT_CLAIMS,
            &ExtractClaimsPayload { case_id, texts },
        );
        let raw = self.fetch_with_cache(&req)?;
        let resp: ClaimsResponse = self.decode(&req, &raw)?;
        for (i, c) in resp.claims.iter().enumerate() {
            if c.text.trim().is_empty() {
                return Err(Self::malformed(&req, format!("claims[{i}].text"), "empty claim text"));
            }
        }
        Ok(resp.claims)
    }

    pub fn extract_source_context(&self, url: &str, body: &str) -> Result<ProviderSourceContext, GatewayError> {
        let req = ProviderRequest::json(
            ProviderKind::MultimodalModel,
            ops::EXTRACT_SOURCE_CONTEXT,
            &SourceContextPayload { url, body },
        );
        let raw = self.fetch_with_cache(&req)?;
        let ctx: ProviderSourceContext = self.decode(&req, &raw)?;
        if let Some(geo) = ctx.where_.as_ref().and_then(|w| w.geo) {
            if !geo.is_valid() {
                return Err(Self::malformed(&req, "where.geo".into(), "coordinates out of range"));
            }
        }
        Ok(ctx)
    }
}
