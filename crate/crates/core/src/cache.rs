//! Optional on-disk cache for prime tables.
//!
//! File format, all little-endian:
//!   magic bytes `OMGD1`
//!   u64 limit
//!   u64 prime count
//!   prime gaps as unsigned LEB128 varints, where the first varint is the
//!   first prime itself (the gap from zero) and each subsequent varint is
//!   `p[i] - p[i-1]`
//!
//! The cache is advisory: any validation failure surfaces as
//! [`Error::CacheCorrupt`] and callers regenerate the table.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::primes::{self, PrimeTable};

const MAGIC: &[u8; 5] = b"OMGD1";

/// Serializes a table to `path`, overwriting any existing file.
pub fn cache_store(path: &Path, table: &PrimeTable) -> Result<()> {
    let file = fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&table.limit().to_le_bytes())?;
    w.write_all(&(table.primes().len() as u64).to_le_bytes())?;
    let mut prev = 0u64;
    let mut buf = [0u8; 10];
    for &p in table.primes() {
        let n = encode_leb128(p - prev, &mut buf);
        w.write_all(&buf[..n])?;
        prev = p;
    }
    w.flush()?;
    Ok(())
}

/// Deserializes and fully validates a table from `path`.
pub fn cache_load(path: &Path) -> Result<PrimeTable> {
    let bytes = fs::read(path)?;
    let mut pos = 0usize;

    let magic = take(&bytes, &mut pos, MAGIC.len())?;
    if magic != MAGIC {
        return Err(Error::CacheCorrupt("bad magic bytes".into()));
    }
    let limit = u64::from_le_bytes(take(&bytes, &mut pos, 8)?.try_into().unwrap());
    let count = u64::from_le_bytes(take(&bytes, &mut pos, 8)?.try_into().unwrap());
    if limit < 2 {
        return Err(Error::CacheCorrupt(format!("limit {limit} below 2")));
    }
    if count > (bytes.len() - pos) as u64 {
        return Err(Error::CacheCorrupt("count exceeds remaining payload".into()));
    }

    let mut primes = Vec::with_capacity(count as usize);
    let mut prev = 0u64;
    for i in 0..count {
        let gap = decode_leb128(&bytes, &mut pos)
            .ok_or_else(|| Error::CacheCorrupt(format!("truncated varint at prime {i}")))?;
        if gap == 0 {
            return Err(Error::CacheCorrupt(format!("zero gap at prime {i}")));
        }
        let p = prev
            .checked_add(gap)
            .ok_or_else(|| Error::CacheCorrupt("prime overflow".into()))?;
        if p > limit {
            return Err(Error::CacheCorrupt(format!("prime {p} exceeds limit {limit}")));
        }
        primes.push(p);
        prev = p;
    }
    if pos != bytes.len() {
        return Err(Error::CacheCorrupt(format!(
            "{} trailing bytes after prime data",
            bytes.len() - pos
        )));
    }
    if primes.first().is_some_and(|&p| p < 2) {
        return Err(Error::CacheCorrupt("first prime below 2".into()));
    }
    Ok(PrimeTable::from_validated_parts(limit, primes))
}

/// Outcome of a [`load_or_build`] call, for caller-side logging.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CacheOutcome {
    /// Loaded from an existing valid cache file.
    Hit,
    /// No cache file existed; table was sieved and stored.
    Miss,
    /// A cache file existed but failed validation; table was re-sieved
    /// and the file rewritten.
    Corrupt,
}

/// Path of the cache file for a given limit inside `cache_dir`.
pub fn cache_path(cache_dir: &Path, limit: u64) -> PathBuf {
    cache_dir.join(format!("primes-{limit}.omgd1"))
}

/// Loads the table for `limit` from `cache_dir`, regenerating (and
/// rewriting the cache) on miss or corruption. Never fails on a bad cache
/// file, only on unusable arguments or unwritable storage.
pub fn load_or_build(cache_dir: &Path, limit: u64) -> Result<(PrimeTable, CacheOutcome)> {
    fs::create_dir_all(cache_dir)?;
    let path = cache_path(cache_dir, limit);
    let outcome = if path.exists() {
        match cache_load(&path) {
            Ok(table) if table.limit() == limit => return Ok((table, CacheOutcome::Hit)),
            Ok(_) | Err(Error::CacheCorrupt(_)) | Err(Error::Io(_)) => CacheOutcome::Corrupt,
            Err(e) => return Err(e),
        }
    } else {
        CacheOutcome::Miss
    };
    let table = primes::primes_up_to(limit)?;
    cache_store(&path, &table)?;
    Ok((table, outcome))
}

fn take<'a>(bytes: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8]> {
    if *pos + n > bytes.len() {
        return Err(Error::CacheCorrupt(format!(
            "file truncated: wanted {n} bytes at offset {pos}"
        )));
    }
    let slice = &bytes[*pos..*pos + n];
    *pos += n;
    Ok(slice)
}

fn encode_leb128(mut v: u64, buf: &mut [u8; 10]) -> usize {
    let mut i = 0;
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            buf[i] = byte;
            return i + 1;
        }
        buf[i] = byte | 0x80;
        i += 1;
    }
}

fn decode_leb128(bytes: &[u8], pos: &mut usize) -> Option<u64> {
    let mut v = 0u64;
    let mut shift = 0u32;
    loop {
        let &byte = bytes.get(*pos)?;
        *pos += 1;
        if shift >= 64 || (shift == 63 && byte > 1) {
            return None;
        }
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Some(v);
        }
        shift += 7;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::primes_up_to;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tmp();
        let path = dir.path().join("t.omgd1");
        let table = primes_up_to(1_000_000).unwrap();
        cache_store(&path, &table).unwrap();
        let loaded = cache_load(&path).unwrap();
        assert_eq!(loaded, table);
    }

    #[test]
    fn store_is_byte_reproducible() {
        let dir = tmp();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let table = primes_up_to(50_000).unwrap();
        cache_store(&a, &table).unwrap();
        cache_store(&b, &table).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tmp();
        let path = dir.path().join("t.omgd1");
        let table = primes_up_to(10_000).unwrap();
        cache_store(&path, &table).unwrap();
        let bytes = fs::read(&path).unwrap();
        for cut in [0, 3, 5, 12, 20, bytes.len() - 1] {
            fs::write(&path, &bytes[..cut]).unwrap();
            assert!(
                matches!(cache_load(&path), Err(Error::CacheCorrupt(_))),
                "cut={cut}"
            );
        }
    }

    #[test]
    fn wrong_magic_is_corrupt() {
        let dir = tmp();
        let path = dir.path().join("t.omgd1");
        let table = primes_up_to(100).unwrap();
        cache_store(&path, &table).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] = b'X';
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(cache_load(&path), Err(Error::CacheCorrupt(_))));
    }

    #[test]
    fn trailing_garbage_is_corrupt() {
        let dir = tmp();
        let path = dir.path().join("t.omgd1");
        let table = primes_up_to(100).unwrap();
        cache_store(&path, &table).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.push(0x01);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(cache_load(&path), Err(Error::CacheCorrupt(_))));
    }

    #[test]
    fn load_or_build_hit_miss_corrupt() {
        let dir = tmp();
        let (t1, o1) = load_or_build(dir.path(), 10_000).unwrap();
        assert_eq!(o1, CacheOutcome::Miss);
        let (t2, o2) = load_or_build(dir.path(), 10_000).unwrap();
        assert_eq!(o2, CacheOutcome::Hit);
        assert_eq!(t1, t2);

        let path = cache_path(dir.path(), 10_000);
        fs::write(&path, b"OMGD1 garbage").unwrap();
        let (t3, o3) = load_or_build(dir.path(), 10_000).unwrap();
        assert_eq!(o3, CacheOutcome::Corrupt);
        assert_eq!(t1, t3);
        assert!(cache_load(&path).is_ok(), "corrupt file must be rewritten");
    }
}
