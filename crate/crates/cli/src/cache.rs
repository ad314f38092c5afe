//! On-disk content-addressed cache. One JSON file per key; eviction is manual.

use crate::error::CliError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Overrides the cache directory.
pub const CACHE_ENV: &str = "JJLINE_CACHE_DIR";

#[derive(Clone, Debug)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()) }
    }

    /// `$JJLINE_CACHE_DIR`, else `<out>/.cache`.
    pub fn for_output(out: &Path) -> Self {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Self::at(d),
            _ => Self::at(out.join(".cache")),
        }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, kind: &str, key: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{kind}-{key}.json")))
    }

    /// A stored value; unreadable or stale entries count as misses.
    pub fn load<T: DeserializeOwned>(&self, kind: &str, key: &str) -> Option<T> {
        let text = std::fs::read(self.path(kind, key)?).ok()?;
        serde_json::from_slice(&text).ok()
    }

    pub fn store<T: Serialize>(&self, kind: &str, key: &str, value: &T) -> Result<(), CliError> {
        let (Some(dir), Some(path)) = (self.dir.as_ref(), self.path(kind, key)) else {
            return Ok(());
        };
        let bytes = serde_json::to_vec(value).expect("cache values serialize");
        write_atomic(dir, &path, &bytes)
    }

    /// Cached value or `compute()`, stored on a miss. The flag reports a hit.
    pub fn get_or_compute<T, F>(&self, kind: &str, key: &str, compute: F) -> Result<(T, bool), CliError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T, CliError>,
    {
        if let Some(v) = self.load(kind, key) {
            return Ok((v, true));
        }
        let v = compute()?;
        self.store(kind, key, &v)?;
        Ok((v, false))
    }
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(dir: &Path, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
