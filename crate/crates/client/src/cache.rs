//! Content-addressed response cache.
//!
//! Each completed request is stored under `dir/<2 hex>/<64 hex>.json`, named
//! by the SHA-256 of the request fields that determine the completion.
//! Writes go to a unique temporary file and are renamed into place, so
//! concurrent writers of the same entry never expose a partial file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{ClientError, Result};
use crate::generation::ChatRequest;

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    model: String,
    seed: u64,
    text: String,
}

/// Digest of (model, prompt, temperature, seed, max_tokens).
pub fn cache_key(req: &ChatRequest) -> String {
    let material = json!({
        "model": req.model,
        "prompt": req.prompt(),
        "temperature": req.temperature,
        "seed": req.seed,
        "max_tokens": req.max_tokens,
    });
    hex::encode(Sha256::digest(material.to_string().as_bytes()))
}

#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, req: &ChatRequest) -> Result<Option<String>> {
        let key = cache_key(req);
        let path = self.path_for(&key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ClientError::Cache { path, source: e }),
        };
        match serde_json::from_slice::<Entry>(&bytes) {
            Ok(entry) if entry.key == key => Ok(Some(entry.text)),
            _ => {
                log::warn!("ignoring unreadable cache entry {}", path.display());
                Ok(None)
            }
        }
    }

    pub fn put(&self, req: &ChatRequest, text: &str) -> Result<()> {
        let key = cache_key(req);
        let path = self.path_for(&key);
        let parent = path.parent().expect("cache entries live in a shard directory");
        let io = |p: &Path, e| ClientError::Cache { path: p.to_path_buf(), source: e };
        fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
        let entry = Entry { key: key.clone(), model: req.model.clone(), seed: req.seed, text: text.to_string() };
        let body = serde_json::to_vec(&entry).expect("cache entry serializes");
        let tmp = parent.join(format!(
            ".{key}.{}.{}.tmp",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        let mut f = fs::File::create(&tmp).map_err(|e| io(&tmp, e))?;
        f.write_all(&body).and_then(|_| f.sync_all()).map_err(|e| io(&tmp, e))?;
        drop(f);
        fs::rename(&tmp, &path).map_err(|e| io(&path, e))
    }
}
