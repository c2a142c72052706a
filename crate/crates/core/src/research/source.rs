//! Source reliability from a trust table, keyed by registered domain.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::gateway::SearchResult;

/// Domain assigned to on-disk media (`file://` URLs).
pub const LOCAL_DOMAIN: &str = "local";
pub const DEFAULT_RELIABILITY: f64 = 0.5;
pub const DEFAULT_HORIZON_DAYS: i64 = 365;

/// Registered domain (eTLD+1) of a URL, lowercased. `file://` URLs map to
/// [`LOCAL_DOMAIN`]; unparseable input is returned trimmed and lowercased.
pub fn registered_domain(url: &str) -> String {
    let Ok(parsed) = url::Url::parse(url) else {
        return url.trim().to_lowercase();
    };
    if parsed.scheme() == "file" {
        return LOCAL_DOMAIN.to_string();
    }
    let Some(host) = parsed.host_str() else {
        return url.trim().to_lowercase();
    };
    let host = host.trim_end_matches('.').to_lowercase();
    if parsed.host().is_some_and(|h| !matches!(h, url::Host::Domain(_))) {
        return host;
    }
    psl::domain_str(&host).map_or(host.clone(), str::to_string)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustTable {
    #[serde(default = "default_reliability")]
    pub default: f64,
    #[serde(default)]
    pub domains: BTreeMap<String, f64>,
}

fn default_reliability() -> f64 {
    DEFAULT_RELIABILITY
}

impl Default for TrustTable {
    fn default() -> Self {
        Self {
            default: DEFAULT_RELIABILITY,
            domains: BTreeMap::new(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrustTableError {
    #[error("cannot read trust table {0}: {1}")]
    Io(String, std::io::Error),
    #[error("invalid trust table {0}: {1}")]
    Parse(String, String),
    #[error("trust score for {domain} is {score}, outside [0, 1]")]
    OutOfRange { domain: String, score: f64 },
}

impl TrustTable {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Self {
            default: DEFAULT_RELIABILITY,
            domains: pairs.into_iter().map(|(d, s)| (d.to_lowercase(), s)).collect(),
        }
    }

    /// YAML (or JSON) with `default` and a `domains` map.
    pub fn load(path: &Path) -> Result<Self, TrustTableError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| TrustTableError::Io(shown.clone(), e))?;
        let mut table: TrustTable =
            serde_yaml::from_str(&text).map_err(|e| TrustTableError::Parse(shown, e.to_string()))?;
        table.domains = table.domains.into_iter().map(|(d, s)| (d.to_lowercase(), s)).collect();
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), TrustTableError> {
        let entries =
            std::iter::once(("default", self.default)).chain(self.domains.iter().map(|(d, s)| (d.as_str(), *s)));
        for (domain, score) in entries {
            if !(0.0..=1.0).contains(&score) {
                return Err(TrustTableError::OutOfRange {
                    domain: domain.to_string(),
                    score,
                });
            }
        }
        Ok(())
    }

    pub fn reliability(&self, domain: &str) -> f64 {
        self.domains.get(domain).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAssessment {
    pub url: String,
    pub reliability: f64,
    pub temporal_consistency: bool,
    pub independent_corroborations: usize,
}

/// True when a source published at `published` can report an event on
/// `event`: not before it and within `horizon_days` after it.
pub fn temporally_consistent(published: Option<NaiveDate>, event: Option<NaiveDate>, horizon_days: i64) -> bool {
    match (published, event) {
        (Some(p), Some(e)) => p >= e && (p - e).num_days() <= horizon_days,
        _ => true,
    }
}

/// Reliability and temporal consistency for one item. Corroborations are
/// counted later against the evidence corpus.
pub fn analyze_source(
    item: &SearchResult,
    event_date: Option<NaiveDate>,
    trust: &TrustTable,
    horizon_days: i64,
) -> SourceAssessment {
    let domain = registered_domain(&item.url);
    SourceAssessment {
        url: item.url.clone(),
        reliability: trust.reliability(&domain),
        temporal_consistency: temporally_consistent(
            item.published_at.map(|t| t.date_naive()),
            event_date,
            horizon_days,
        ),
        independent_corroborations: 0,
    }
}
