//! Provider adapters: the generic HTTP/JSON adapter and the local fixture
//! adapter that answers from an authored JSON file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ProviderKind, ProviderRequest};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdapterError {
    #[error("{reason}")]
    Unavailable { reason: String, retryable: bool },
    #[error("no fixture matches the request")]
    NoFixture,
}

pub trait ProviderAdapter: Send + Sync {
    /// Recorded in cache sidecars.
    fn id(&self) -> &str;

    /// True when the adapter never touches the network.
    fn is_local(&self) -> bool {
        false
    }

    fn call(&self, req: &ProviderRequest) -> Result<Vec<u8>, AdapterError>;
}

/// One authored response. `match` maps top-level payload fields to patterns:
/// `*` matches anything present, `~text` is a case-insensitive substring
/// test, anything else must be equal to the field's string form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Fixture {
    pub provider: ProviderKind,
    pub operation: String,
    #[serde(default, rename = "match")]
    pub match_fields: BTreeMap<String, String>,
    pub response: Value,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FixtureFile {
    pub fixtures: Vec<Fixture>,
}

#[derive(Debug, thiserror::Error)]
pub enum FixtureLoadError {
    #[error("cannot read fixture file {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid fixture file {0}: {1}")]
    Parse(PathBuf, serde_json::Error),
}

/// Serves responses from authored fixtures; first match in file order wins.
#[derive(Debug, Clone)]
pub struct FixtureAdapter {
    id: String,
    fixtures: Vec<Fixture>,
}

impl FixtureAdapter {
    pub fn new(fixtures: Vec<Fixture>) -> Self {
        Self {
            id: "fixture".into(),
            fixtures,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, FixtureLoadError> {
        let raw = std::fs::read(path).map_err(|e| FixtureLoadError::Io(path.to_path_buf(), e))?;
        let file: FixtureFile =
            serde_json::from_slice(&raw).map_err(|e| FixtureLoadError::Parse(path.to_path_buf(), e))?;
        let name = path
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        Ok(Self {
            id: format!("fixture:{name}"),
            fixtures: file.fixtures,
        })
    }

    fn matches(fixture: &Fixture, req: &ProviderRequest, payload: &Value) -> bool {
        if fixture.provider != req.provider || fixture.operation != req.operation {
            return false;
        }
        fixture.match_fields.iter().all(|(field, pattern)| {
            let Some(value) = payload.get(field) else {
                return false;
            };
            let text = match value {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            if pattern == "*" {
                true
            } else if let Some(needle) = pattern.strip_prefix('~') {
                text.to_lowercase().contains(&needle.to_lowercase())
            } else {
                &text == pattern
            }
        })
    }
}

impl ProviderAdapter for FixtureAdapter {
    fn id(&self) -> &str {
        &self.id
    }

    fn is_local(&self) -> bool {
        true
    }

    fn call(&self, req: &ProviderRequest) -> Result<Vec<u8>, AdapterError> {
        let payload: Value = serde_json::from_slice(&req.payload).unwrap_or(Value::Null);
        self.fixtures
            .iter()
            .find(|f| Self::matches(f, req, &payload))
            .map(|f| serde_json::to_vec(&f.response).expect("json value serializes"))
            .ok_or(AdapterError::NoFixture)
    }
}

/// Per-provider endpoint: a URL template where `{operation}` is substituted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub url_template: String,
    #[serde(default, skip_serializing)]
    pub api_key: Option<String>,
}

impl Endpoint {
    /// Reads `<PREFIX>_ENDPOINT` and `<PREFIX>_API_KEY`.
    pub fn from_env(provider: ProviderKind) -> Option<Self> {
        let prefix = provider.env_prefix();
        let url_template = std::env::var(format!("{prefix}_ENDPOINT")).ok()?;
        Some(Self {
            url_template,
            api_key: std::env::var(format!("{prefix}_API_KEY")).ok(),
        })
    }

    pub fn url_for(&self, operation: &str) -> String {
        self.url_template.replace("{operation}", operation)
    }
}

/// Generic HTTP/JSON adapter. Each request is a POST of
/// `{"operation", "payload", "attachment_base64"?}`; the response body is
/// returned verbatim and validated by the gateway.
pub struct HttpAdapter {
    endpoints: BTreeMap<ProviderKind, Endpoint>,
    agent: ureq::Agent,
}

impl HttpAdapter {
    pub fn new(endpoints: BTreeMap<ProviderKind, Endpoint>, timeout: Duration) -> Self {
        Self {
            endpoints,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    pub fn from_env(timeout: Duration) -> Self {
        let endpoints = ProviderKind::ALL
            .iter()
            .filter_map(|p| Endpoint::from_env(*p).map(|e| (*p, e)))
            .collect();
        Self::new(endpoints, timeout)
    }

    pub fn endpoints(&self) -> &BTreeMap<ProviderKind, Endpoint> {
        &self.endpoints
    }
}

impl ProviderAdapter for HttpAdapter {
    fn id(&self) -> &str {
        "http"
    }

    fn call(&self, req: &ProviderRequest) -> Result<Vec<u8>, AdapterError> {
        let endpoint = self
            .endpoints
            .get(&req.provider)
            .ok_or_else(|| AdapterError::Unavailable {
                reason: format!("no endpoint configured for {}", req.provider.env_prefix()),
                retryable: false,
            })?;
        let payload = serde_json::from_slice::<Value>(&req.payload)
            .unwrap_or_else(|_| Value::String(base64::engine::general_purpose::STANDARD.encode(&req.payload)));
        let mut body = serde_json::json!({ "operation": req.operation, "payload": payload });
        if let Some(att) = &req.attachment {
            body["attachment_base64"] = Value::String(base64::engine::general_purpose::STANDARD.encode(att.as_slice()));
        }
        let mut request = self
            .agent
            .post(&endpoint.url_for(&req.operation))
            .set("Content-Type", "application/json");
        if let Some(key) = &endpoint.api_key {
            request = request.set("Authorization", &format!("Bearer {key}"));
        }
        match request.send_string(&body.to_string()) {
            Ok(resp) => {
                let mut out = Vec::new();
                std::io::Read::read_to_end(&mut resp.into_reader(), &mut out).map_err(|e| {
                    AdapterError::Unavailable {
                        reason: format!("reading response: {e}"),
                        retryable: true,
                    }
                })?;
                Ok(out)
            }
            Err(ureq::Error::Status(code, _)) => Err(AdapterError::Unavailable {
                reason: format!("HTTP status {code}"),
                retryable: code == 429 || code >= 500,
            }),
            Err(e) => Err(AdapterError::Unavailable {
                reason: e.to_string(),
                retryable: true,
            }),
        }
    }
}
