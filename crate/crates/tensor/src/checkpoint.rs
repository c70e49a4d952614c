//! Binary checkpoint format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "MGG1"
//! count      u32      number of named tensors
//! per tensor:
//!   name_len u32, name (UTF-8, name_len bytes)
//!   rank     u32, extents (rank x u64)
//!   payload  prod(extents) x f64
//! ```
//!
//! Nothing follows the last tensor.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::params::ParamStore;
use crate::shape::numel;

pub const MAGIC: &[u8; 4] = b"MGG1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"MGG1\"")]
    BadMagic([u8; 4]),
    #[error("truncated checkpoint while reading {0}")]
    Truncated(&'static str),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut w: W) -> Result<(), CheckpointError> {
    w.write_all(MAGIC)?;
    let count = u32::try_from(store.len()).map_err(|_| CheckpointError::Corrupt("too many tensors".into()))?;
    w.write_all(&count.to_le_bytes())?;
    for (_, p) in store.iter() {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(p.shape.len() as u32).to_le_bytes())?;
        for &e in &p.shape {
            w.write_all(&(e as u64).to_le_bytes())?;
        }
        for v in &p.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn checkpoint_bytes(store: &ParamStore) -> Vec<u8> {
    let mut out = Vec::new();
    write_checkpoint(store, &mut out).expect("writing to a Vec cannot fail");
    out
}

/// Parses a checkpoint from a byte buffer. Sizes are validated against the
/// remaining input before any allocation, so hostile headers fail cleanly.
pub fn parse_checkpoint(bytes: &[u8]) -> Result<ParamStore, CheckpointError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    let magic: [u8; 4] = cur.take(4, "magic")?.try_into().unwrap();
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let count = cur.u32("tensor count")?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_len = cur.u32("name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "name")?)
            .map_err(|_| CheckpointError::Corrupt("name is not UTF-8".into()))?
            .to_string();
        let rank = cur.u32("rank")? as usize;
        if rank > cur.remaining() / 8 {
            return Err(CheckpointError::Truncated("extents"));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            let e = usize::try_from(cur.u64("extent")?)
                .map_err(|_| CheckpointError::Corrupt("extent overflows usize".into()))?;
            shape.push(e);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &e| acc.checked_mul(e))
            .ok_or_else(|| CheckpointError::Corrupt(format!("extents of `{name}` overflow")))?;
        if n > cur.remaining() / 8 {
            return Err(CheckpointError::Truncated("payload"));
        }
        let raw = cur.take(n * 8, "payload")?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        debug_assert_eq!(numel(&shape), data.len());
        store
            .add(name, shape, data)
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    }
    if cur.remaining() != 0 {
        return Err(CheckpointError::Corrupt(format!("{} trailing bytes", cur.remaining())));
    }
    Ok(store)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ParamStore, CheckpointError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    parse_checkpoint(&bytes)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        if n > self.remaining() {
            return Err(CheckpointError::Truncated(what));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParamStore {
        let mut s = ParamStore::new();
        s.add("enc.w", [2, 3], vec![1.0, -0.0, f64::MIN_POSITIVE, 3.5, 1e300, -7.25]).unwrap();
        s.add("scalar", Vec::<usize>::new(), vec![0.1]).unwrap();
        s.add("empty", [0, 4], vec![]).unwrap();
        s
    }

    #[test]
    fn header_layout() {
        let b = checkpoint_bytes(&sample());
        assert_eq!(&b[..4], b"MGG1");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 5);
        assert_eq!(&b[12..17], b"enc.w");
        assert_eq!(u32::from_le_bytes(b[17..21].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(b[21..29].try_into().unwrap()), 2);
    }

    #[test]
    fn bit_exact_round_trip() {
        let s = sample();
        let b = checkpoint_bytes(&s);
        let back = parse_checkpoint(&b).unwrap();
        assert_eq!(checkpoint_bytes(&back), b);
        for ((_, p), (_, q)) in s.iter().zip(back.iter()) {
            assert_eq!(p.name, q.name);
            assert_eq!(p.shape, q.shape);
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&p.data), bits(&q.data));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(parse_checkpoint(b"NOPE\0\0\0\0"), Err(CheckpointError::BadMagic(_))));
        let b = checkpoint_bytes(&sample());
        for cut in [3, 7, 15, 30, b.len() - 1] {
            assert!(parse_checkpoint(&b[..cut]).is_err(), "cut at {cut}");
        }
        let mut extra = b.clone();
        extra.push(0);
        assert!(parse_checkpoint(&extra).is_err());
        // huge extents must not allocate
        let mut evil = Vec::from(&b"MGG1"[..]);
        evil.extend(1u32.to_le_bytes());
        evil.extend(1u32.to_le_bytes());
        evil.push(b'x');
        evil.extend(2u32.to_le_bytes());
        evil.extend(u64::MAX.to_le_bytes());
        evil.extend(u64::MAX.to_le_bytes());
        assert!(parse_checkpoint(&evil).is_err());
    }
}
