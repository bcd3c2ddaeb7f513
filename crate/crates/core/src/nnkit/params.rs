//! Named, shape-tagged parameter blocks backed by one flat f64 buffer.
//!
//! Blocks are registered once and never resized, so the flat buffer is a
//! disjoint cover of all parameters by construction. Gradients and optimizer
//! state index the same flat layout, which keeps the optimizer generic over
//! model architecture.
//!
//! Checkpoint layout (all integers little-endian):
//!
//! ```text
//! magic "STVP" | version u16 | block count u32
//! per block: name len u32 | name UTF-8 | rank u32 | dims u64 * rank | f64 * prod(dims)
//! ```
//!
//! f64 payloads are written with `to_le_bytes`, so a save/load round trip is
//! bit-exact.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"STVP";
const VERSION: u16 = 1;

#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    blocks: Vec<Block>,
    data: Vec<f64>,
    by_name: HashMap<String, usize>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a zero-initialized block. The name must be unique.
    pub fn add_block(&mut self, name: &str, shape: &[usize]) -> Result<()> {
        if self.by_name.contains_key(name) {
            return Err(Error::Config(format!("duplicate parameter block {name:?}")));
        }
        if shape.is_empty() {
            return Err(Error::Config(format!("block {name:?} has empty shape")));
        }
        let len: usize = shape.iter().product();
        let offset = self.data.len();
        self.by_name.insert(name.to_string(), self.blocks.len());
        self.blocks.push(Block {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset,
            len,
        });
        self.data.resize(offset + len, 0.0);
        Ok(())
    }

    pub fn has_block(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn block(&self, name: &str) -> &Block {
        let idx = self
            .by_name
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter block {name:?}"));
        &self.blocks[*idx]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn slice(&self, name: &str) -> &[f64] {
        let b = self.block(name);
        &self.data[b.offset..b.offset + b.len]
    }

    pub fn slice_mut(&mut self, name: &str) -> &mut [f64] {
        let idx = *self
            .by_name
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter block {name:?}"));
        let b = &self.blocks[idx];
        let (offset, len) = (b.offset, b.len);
        &mut self.data[offset..offset + len]
    }

    /// Fills a block by repeatedly calling `f`, in flat row-major order.
    pub fn fill_with(&mut self, name: &str, mut f: impl FnMut() -> f64) {
        for v in self.slice_mut(name) {
            *v = f();
        }
    }

    /// Total number of parameters across all blocks.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Maps a flat parameter index back to its block, for error messages.
    pub fn block_of_index(&self, flat: usize) -> &Block {
        assert!(flat < self.data.len(), "flat index {flat} out of range");
        // Blocks are stored in offset order, so a linear scan from the back
        // finds the covering block.
        self.blocks
            .iter()
            .rev()
            .find(|b| b.offset <= flat)
            .expect("non-empty store covers every index")
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.blocks.len() as u32).to_le_bytes())?;
        for b in &self.blocks {
            let name = b.name.as_bytes();
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name)?;
            w.write_all(&(b.shape.len() as u32).to_le_bytes())?;
            for &d in &b.shape {
                w.write_all(&(d as u64).to_le_bytes())?;
            }
            for &v in &self.data[b.offset..b.offset + b.len] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format(format!(
                "bad checkpoint magic {magic:?}, expected {MAGIC:?}"
            )));
        }
        let version = read_u16(r)?;
        if version != VERSION {
            return Err(Error::Format(format!(
                "unsupported checkpoint version {version}, expected {VERSION}"
            )));
        }
        let count = read_u32(r)? as usize;
        let mut store = Self::new();
        for _ in 0..count {
            let name_len = read_u32(r)? as usize;
            if name_len > 1 << 16 {
                return Err(Error::Format(format!("implausible name length {name_len}")));
            }
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name)?;
            let name = String::from_utf8(name)
                .map_err(|e| Error::Format(format!("block name is not UTF-8: {e}")))?;
            let rank = read_u32(r)? as usize;
            if rank == 0 || rank > 8 {
                return Err(Error::Format(format!("block {name:?} has rank {rank}")));
            }
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(read_u64(r)? as usize);
            }
            let len: usize = shape.iter().product();
            if len > 1 << 28 {
                return Err(Error::Format(format!("block {name:?} is implausibly large")));
            }
            store.add_block(&name, &shape)?;
            let mut buf = [0u8; 8];
            for v in store.slice_mut(&name) {
                r.read_exact(&mut buf)?;
                *v = f64::from_le_bytes(buf);
            }
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::Format("trailing bytes after last block".into()));
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut r)
    }
}

fn read_u16(r: &mut impl Read) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn blocks_cover_flat_buffer_disjointly() {
        let mut s = ParamStore::new();
        s.add_block("a.w", &[3, 4]).unwrap();
        s.add_block("a.b", &[4]).unwrap();
        s.add_block("z", &[2, 2, 2]).unwrap();
        assert_eq!(s.len(), 12 + 4 + 8);
        let mut seen = vec![false; s.len()];
        for b in s.blocks() {
            for i in b.offset..b.offset + b.len {
                assert!(!seen[i], "overlap at {i}");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&x| x));
        assert_eq!(s.block_of_index(0).name, "a.w");
        assert_eq!(s.block_of_index(12).name, "a.b");
        assert_eq!(s.block_of_index(15).name, "a.b");
        assert_eq!(s.block_of_index(16).name, "z");
    }

    #[test]
    fn duplicate_name_is_rejected() {
        let mut s = ParamStore::new();
        s.add_block("w", &[2]).unwrap();
        assert!(s.add_block("w", &[3]).is_err());
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = ParamStore::new();
        s.add_block("enc.w", &[16, 32]).unwrap();
        s.add_block("enc.b", &[32]).unwrap();
        s.add_block("odd", &[5, 3, 2]).unwrap();
        for v in s.data_mut() {
            // Include subnormals and extreme exponents to catch any lossy path.
            *v = f64::from_bits(rng.gen::<u64>() & 0x7fef_ffff_ffff_ffff);
        }
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let t = ParamStore::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(s.len(), t.len());
        for (a, b) in s.data().iter().zip(t.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        for (x, y) in s.blocks().iter().zip(t.blocks()) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.shape, y.shape);
            assert_eq!(x.offset, y.offset);
        }
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let mut s = ParamStore::new();
        s.add_block("w", &[2]).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            ParamStore::read_from(&mut buf.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let mut s = ParamStore::new();
        s.add_block("w", &[8]).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(ParamStore::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn trailing_bytes_are_rejected() {
        let mut s = ParamStore::new();
        s.add_block("w", &[2]).unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        buf.push(0);
        assert!(ParamStore::read_from(&mut buf.as_slice()).is_err());
    }
}
