//! On-disk cache of computed zero archives, keyed by field fingerprint and
//! height. Writers take an exclusive advisory lock per field so concurrent
//! processes never observe a half-written archive.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chebyshev_race::exec::Exec;
use chebyshev_race::field::FieldModel;
use chebyshev_race::zeros::ZeroArchive;

pub const CACHE_ENV: &str = "CHEBRACE_CACHE_DIR";

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    /// `explicit`, else `$CHEBRACE_CACHE_DIR`, else `$HOME/.cache/chebrace`,
    /// else a directory under the system temp dir.
    pub fn locate(explicit: Option<&Path>) -> Cache {
        let dir = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .or_else(|| std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("chebrace")))
            .unwrap_or_else(|| std::env::temp_dir().join("chebrace-cache"));
        Cache { dir }
    }

    fn archive_path(&self, field: &FieldModel, height: f64) -> PathBuf {
        self.dir.join(format!("zeros-{}-{height}.txt", field.fingerprint()))
    }

    /// Cached archive for `(field, height)`, computing and storing it on a miss.
    /// Returns the archive and whether it came from the cache.
    pub fn archive(&self, field: &FieldModel, height: f64, exec: Exec) -> Result<(ZeroArchive, bool)> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("creating cache directory {}", self.dir.display()))?;
        let lock = File::create(self.dir.join(format!(".lock-{}", field.fingerprint())))?;
        lock.lock().context("locking the cache")?;
        let path = self.archive_path(field, height);
        let out = if path.exists() {
            (ZeroArchive::ingest(&path, field)?, true)
        } else {
            let archive = ZeroArchive::compute(field, height, exec)?;
            let tmp = path.with_extension("tmp");
            archive.write(&tmp)?;
            fs::rename(&tmp, &path)?;
            (archive, false)
        };
        lock.unlock()?;
        Ok(out)
    }
}
