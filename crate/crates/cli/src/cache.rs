//! On-disk block cache keyed by a SHA-256 of the symbol key.

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toeplitz_core::assembly::{BlockMatrix, BlockStore};

/// Environment variable overriding the cache directory.
pub const CACHE_ENV: &str = "TOEPLITZ_SPECTRA_CACHE";

pub struct DiskStore {
    dir: PathBuf,
}

impl DiskStore {
    pub fn new(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(DiskStore { dir })
    }

    /// `$TOEPLITZ_SPECTRA_CACHE` if set, else `<out>/cache`.
    pub fn location(out: &Path) -> PathBuf {
        match std::env::var_os(CACHE_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => out.join("cache"),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn hash(key: &str) -> [u8; 32] {
        Sha256::digest(key.as_bytes()).into()
    }

    fn path(&self, hash: &[u8; 32], degree: u32) -> PathBuf {
        let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
        self.dir.join(format!("{hex}-d{degree}.blk"))
    }
}

impl BlockStore for DiskStore {
    fn load(&self, key: &str, kj: u32, degree: u32) -> Option<BlockMatrix> {
        let hash = Self::hash(key);
        let bytes = std::fs::read(self.path(&hash, degree)).ok()?;
        BlockMatrix::from_bytes(&bytes, kj, &hash).ok().filter(|b| b.degree == degree)
    }

    fn save(&self, key: &str, block: &BlockMatrix) {
        let hash = Self::hash(key);
        let target = self.path(&hash, block.degree);
        // Write then rename, so readers never see partial records. Failures
        // only cost a recomputation later.
        let Ok(mut tmp) = tempfile::NamedTempFile::new_in(&self.dir) else { return };
        if tmp.write_all(&block.to_bytes(&hash)).is_ok() {
            let _ = tmp.persist(target);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use toeplitz_core::assembly::{Assembler, QuadConfig};
    use toeplitz_core::symbols::builtin_quasi_homogeneous;

    #[test]
    fn blocks_survive_a_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = std::sync::Arc::new(DiskStore::new(dir.path()).unwrap());
        let c = builtin_quasi_homogeneous(1, &[1, -1]).unwrap();
        let first = Assembler::new(QuadConfig::default()).with_store(store.clone());
        let b1 = first.block(&c, 3).unwrap();
        assert_eq!(first.stats().computed, 1);
        let second = Assembler::new(QuadConfig::default()).with_store(store);
        let b2 = second.block(&c, 3).unwrap();
        assert_eq!(second.stats().store_hits, 1);
        assert_eq!(b1.matrix, b2.matrix);
    }

    #[test]
    fn corrupt_records_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let store = DiskStore::new(dir.path()).unwrap();
        let hash = DiskStore::hash("k");
        std::fs::write(store.path(&hash, 0), b"garbage").unwrap();
        assert!(store.load("k", 2, 0).is_none());
    }
}
