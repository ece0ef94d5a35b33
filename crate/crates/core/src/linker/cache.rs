//! Memoizing layer over [`Linker::link`].
//!
//! Keys cover everything a result depends on: normalized mention, mode,
//! normalized context, expected types, config hash, index build id, closure
//! fingerprint and scorer name. An in-memory LRU sits in front of an
//! optional on-disk store; disk failures only cost a recomputation.

use std::fs;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use lru::LruCache;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LinkError, LinkRequest, LinkResult, Linker, Mode};
use crate::text::normalize;
use crate::type_store::TypeClosure;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
struct CacheKey {
    mention: String,
    mode: Mode,
    context_hash: String,
    expected_types: Option<Vec<String>>,
    config_hash: String,
    index_build_id: String,
    closure_hash: String,
    scorer: String,
}

#[derive(Serialize, Deserialize)]
struct DiskEntry {
    key: CacheKey,
    result: LinkResult,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub disk_hits: u64,
    pub disk_errors: u64,
}

pub struct LinkCache {
    memory: Mutex<LruCache<CacheKey, Arc<LinkResult>>>,
    disk: Option<PathBuf>,
    hits: AtomicU64,
    misses: AtomicU64,
    disk_hits: AtomicU64,
    disk_errors: AtomicU64,
}

impl LinkCache {
    pub fn in_memory(capacity: usize) -> Self {
        LinkCache {
            memory: Mutex::new(LruCache::new(NonZeroUsize::new(capacity.max(1)).expect("capacity >= 1"))),
            disk: None,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            disk_hits: AtomicU64::new(0),
            disk_errors: AtomicU64::new(0),
        }
    }

    /// Memory LRU backed by one JSON file per entry under `dir`.
    pub fn with_disk(capacity: usize, dir: impl Into<PathBuf>) -> Self {
        let dir = dir.into();
        let mut cache = Self::in_memory(capacity);
        match fs::create_dir_all(&dir) {
            Ok(()) => cache.disk = Some(dir),
            Err(e) => {
                tracing::warn!("link cache dir {} unusable, running memory-only: {e}", dir.display());
                cache.disk_errors.fetch_add(1, Ordering::Relaxed);
            }
        }
        cache
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            disk_hits: self.disk_hits.load(Ordering::Relaxed),
            disk_errors: self.disk_errors.load(Ordering::Relaxed),
        }
    }

    fn entry_path(dir: &Path, key: &CacheKey) -> PathBuf {
        let digest = Sha256::digest(serde_json::to_vec(key).expect("key serializes"));
        dir.join(format!("{}.json", hex::encode(digest)))
    }

    fn read_disk(&self, key: &CacheKey) -> Option<LinkResult> {
        let dir = self.disk.as_ref()?;
        let path = Self::entry_path(dir, key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                tracing::debug!("cache read {}: {e}", path.display());
                self.disk_errors.fetch_add(1, Ordering::Relaxed);
                return None;
            }
        };
        match serde_json::from_slice::<DiskEntry>(&bytes) {
            Ok(entry) if entry.key == *key => Some(entry.result),
            _ => {
                self.disk_errors.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    fn write_disk(&self, key: &CacheKey, result: &LinkResult) {
        let Some(dir) = self.disk.as_ref() else { return };
        let path = Self::entry_path(dir, key);
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let entry = DiskEntry { key: key.clone(), result: result.clone() };
        let written = serde_json::to_vec(&entry)
            .map_err(std::io::Error::other)
            .and_then(|bytes| fs::write(&tmp, bytes))
            .and_then(|()| fs::rename(&tmp, &path));
        if let Err(e) = written {
            tracing::debug!("cache write {}: {e}", path.display());
            let _ = fs::remove_file(&tmp);
            self.disk_errors.fetch_add(1, Ordering::Relaxed);
        }
    }
}

/// A [`Linker`] with a [`LinkCache`] in front of it.
pub struct CachedLinker {
    linker: Linker,
    cache: LinkCache,
    closure_hash: String,
}

pub fn closure_fingerprint(closure: &TypeClosure) -> String {
    let mut buf = Vec::new();
    closure.write_to(&mut buf).expect("writing to a Vec cannot fail");
    hex::encode(Sha256::digest(&buf))
}

impl CachedLinker {
    pub fn new(linker: Linker, cache: LinkCache) -> Self {
        let closure_hash = closure_fingerprint(linker.closure());
        CachedLinker { linker, cache, closure_hash }
    }

    pub fn linker(&self) -> &Linker {
        &self.linker
    }

    pub fn stats(&self) -> CacheStats {
        self.cache.stats()
    }

    fn key(&self, req: &LinkRequest) -> CacheKey {
        let context = req.context.as_deref().map(normalize).unwrap_or_default();
        CacheKey {
            mention: normalize(&req.mention),
            mode: req.mode,
            context_hash: hex::encode(Sha256::digest(context.as_bytes())),
            expected_types: req.expected_types.as_ref().map(|s| s.iter().cloned().collect()),
            config_hash: self.linker.config().content_hash().to_owned(),
            index_build_id: self.linker.index().build_id().to_owned(),
            closure_hash: self.closure_hash.clone(),
            scorer: self.linker.scorer().name().to_owned(),
        }
    }

    /// Same answer as [`Linker::link`], served from cache when possible.
    /// Errors are not cached.
    pub fn link(&self, req: &LinkRequest) -> Result<LinkResult, LinkError> {
        let key = self.key(req);
        let memo = self.cache.memory.lock().ok().and_then(|mut m| m.get(&key).cloned());
        if let Some(hit) = memo {
            self.cache.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit.as_ref().clone());
        }
        if let Some(result) = self.cache.read_disk(&key) {
            self.cache.hits.fetch_add(1, Ordering::Relaxed);
            self.cache.disk_hits.fetch_add(1, Ordering::Relaxed);
            if let Ok(mut m) = self.cache.memory.lock() {
                m.put(key, Arc::new(result.clone()));
            }
            return Ok(result);
        }
        self.cache.misses.fetch_add(1, Ordering::Relaxed);
        let result = self.linker.link(req)?;
        self.cache.write_disk(&key, &result);
        if let Ok(mut m) = self.cache.memory.lock() {
            m.put(key, Arc::new(result.clone()));
        }
        Ok(result)
    }
}
