//! On-disk response cache: `<root>/<provider>/<operation>/<digest>.resp`
//! holds the raw response bytes and `<digest>.meta` a JSON sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{GatewayError, ProviderRequest};
use crate::digest::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub provider: String,
    pub operation: String,
    pub payload_digest: String,
    pub response_sha256: String,
    pub response_len: usize,
    pub recorded_at: DateTime<Utc>,
    pub adapter: String,
    pub status: String,
}

#[derive(Debug, Clone)]
pub struct ReplayCache {
    root: PathBuf,
}

impl ReplayCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn base(&self, req: &ProviderRequest) -> PathBuf {
        self.root
            .join(req.provider.dir_name())
            .join(&req.operation)
            .join(&req.payload_digest)
    }

    pub fn response_path(&self, req: &ProviderRequest) -> PathBuf {
        self.base(req).with_extension("resp")
    }

    pub fn meta_path(&self, req: &ProviderRequest) -> PathBuf {
        self.base(req).with_extension("meta")
    }

    pub fn contains(&self, req: &ProviderRequest) -> bool {
        self.response_path(req).is_file()
    }

    /// Returns `Ok(None)` on a miss; a present but inconsistent entry is
    /// `CacheCorrupt`.
    pub fn load(&self, req: &ProviderRequest) -> Result<Option<(Vec<u8>, CacheMeta)>, GatewayError> {
        let resp_path = self.response_path(req);
        let bytes = match fs::read(&resp_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GatewayError::Io(e)),
        };
        let meta_path = self.meta_path(req);
        let corrupt = |reason: String| GatewayError::CacheCorrupt {
            path: resp_path.clone(),
            reason,
        };
        let meta_raw = fs::read(&meta_path).map_err(|e| corrupt(format!("missing sidecar: {e}")))?;
        let meta: CacheMeta =
            serde_json::from_slice(&meta_raw).map_err(|e| corrupt(format!("unreadable sidecar: {e}")))?;
        if meta.payload_digest != req.payload_digest {
            return Err(corrupt("sidecar payload digest does not match request".into()));
        }
        let actual = sha256_hex(&bytes);
        if actual != meta.response_sha256 {
            return Err(corrupt(format!(
                "response digest {actual} != stored {}",
                meta.response_sha256
            )));
        }
        Ok(Some((bytes, meta)))
    }

    /// Atomic write: both files are written to temporaries in the target
    /// directory and renamed into place, response last.
    pub fn store(
        &self,
        req: &ProviderRequest,
        bytes: &[u8],
        adapter: &str,
        recorded_at: DateTime<Utc>,
    ) -> Result<CacheMeta, GatewayError> {
        let resp_path = self.response_path(req);
        let dir = resp_path.parent().expect("cache entries always have a parent");
        fs::create_dir_all(dir)?;
        let meta = CacheMeta {
            provider: req.provider.dir_name().to_string(),
            operation: req.operation.clone(),
            payload_digest: req.payload_digest.clone(),
            response_sha256: sha256_hex(bytes),
            response_len: bytes.len(),
            recorded_at,
            adapter: adapter.to_string(),
            status: "ok".into(),
        };
        let mut meta_json = serde_json::to_vec_pretty(&meta).expect("meta serializes");
        meta_json.push(b'\n');
        atomic_write(dir, &self.meta_path(req), &meta_json)?;
        atomic_write(dir, &resp_path, bytes)?;
        Ok(meta)
    }
}

fn atomic_write(dir: &Path, target: &Path, bytes: &[u8]) -> Result<(), GatewayError> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(target).map_err(|e| GatewayError::Io(e.error))?;
    Ok(())
}
