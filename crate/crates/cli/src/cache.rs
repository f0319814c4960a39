//! On-disk sweep cache: one JSON file per parameter point, keyed by the
//! full parameter tuple, with an FNV-1a checksum over the serialized record
//! so corruption is detected on load.

use crate::SweepRecord;
use nessgap_core::chain::Convention;
use nessgap_core::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

const KEY_VERSION: &str = "v1";

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Canonical key of one parameter point.
pub fn point_key(
    n: usize,
    a: f64,
    c: f64,
    gamma: f64,
    t_left: f64,
    t_right: f64,
    conv: Convention,
) -> String {
    format!("{KEY_VERSION}|n={n}|a={a:.17e}|c={c:.17e}|g={gamma:.17e}|tl={t_left:.17e}|tr={t_right:.17e}|conv={conv}")
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    checksum: String,
    record: SweepRecord,
}

#[derive(Debug, Clone)]
pub struct CacheDir {
    root: PathBuf,
}

impl CacheDir {
    pub fn open(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::Io {
            path: root.display().to_string(),
            source: e,
        })?;
        Ok(CacheDir {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn file_for(&self, key: &str) -> PathBuf {
        self.root
            .join(format!("{:016x}.json", fnv1a64(key.as_bytes())))
    }

    fn record_checksum(record: &SweepRecord) -> Result<String> {
        let payload = serde_json::to_string(record).map_err(|e| Error::Parse {
            path: "<cache>".into(),
            reason: e.to_string(),
        })?;
        Ok(format!("{:016x}", fnv1a64(payload.as_bytes())))
    }

    pub fn store(&self, key: &str, record: &SweepRecord) -> Result<()> {
        let entry = CacheEntry {
            key: key.to_string(),
            checksum: Self::record_checksum(record)?,
            record: record.clone(),
        };
        nessgap_core::io::write_json(&self.file_for(key), &entry)
    }

    /// Load a cached record; Ok(None) on a miss, an error on corruption or
    /// a key collision.
    pub fn load(&self, key: &str) -> Result<Option<SweepRecord>> {
        let path = self.file_for(key);
        if !path.exists() {
            return Ok(None);
        }
        let text = nessgap_core::io::read_text(&path)?;
        let entry: CacheEntry =
            serde_json::from_str(&text).map_err(|e| Error::CacheCorruption {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        if entry.key != key {
            return Err(Error::CacheCorruption {
                path: path.display().to_string(),
                reason: format!("key mismatch: stored '{}'", entry.key),
            });
        }
        let expect = Self::record_checksum(&entry.record)?;
        if expect != entry.checksum {
            return Err(Error::CacheCorruption {
                path: path.display().to_string(),
                reason: format!("checksum {} != stored {}", expect, entry.checksum),
            });
        }
        Ok(Some(entry.record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{solve_point, SweepTemplate};

    #[test]
    fn store_load_roundtrip_bit_identical() {
        let dir = tempdir();
        let cache = CacheDir::open(&dir).unwrap();
        let rec = solve_point(&SweepTemplate::default(), 4).unwrap();
        let key = rec.key();
        cache.store(&key, &rec).unwrap();
        let back = cache.load(&key).unwrap().unwrap();
        assert_eq!(rec, back);
        assert!(cache.load("v1|other").unwrap().is_none());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempdir();
        let cache = CacheDir::open(&dir).unwrap();
        let rec = solve_point(&SweepTemplate::default(), 3).unwrap();
        let key = rec.key();
        cache.store(&key, &rec).unwrap();
        // flip a digit inside the stored record
        let path = cache.file_for(&key);
        let text = std::fs::read_to_string(&path).unwrap();
        let broken = text.replacen("\"rho\":", "\"rho\": 1e9, \"rho_junk\":", 1);
        std::fs::write(&path, broken).unwrap();
        assert!(matches!(
            cache.load(&key),
            Err(Error::CacheCorruption { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    fn tempdir() -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "nessgap-cache-test-{}-{:x}",
            std::process::id(),
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .unwrap()
                .as_nanos()
        ));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }
}
