//! Binary field snapshots: magic "HLFD", u32 version, u32 ndims, ndims u64
//! lengths, f64 dx, f64 dt, u64 seed, then the row-major f64 values, all
//! little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"HLFD";
pub const VERSION: u32 = 1;
pub const MAX_DIMS: usize = 8;
const MAX_VALUES: u64 = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldBlob {
    pub shape: Vec<u64>,
    pub dx: f64,
    pub dt: f64,
    pub seed: u64,
    pub data: Vec<f64>,
}

pub fn encode_field(blob: &FieldBlob) -> Result<Vec<u8>> {
    let n = checked_len(&blob.shape)?;
    if n != blob.data.len() as u64 {
        return Err(Error::Format(format!("shape holds {n} values, data has {}", blob.data.len())));
    }
    let mut out = Vec::with_capacity(32 + 8 * blob.shape.len() + 8 * blob.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(blob.shape.len() as u32).to_le_bytes());
    for s in &blob.shape {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out.extend_from_slice(&blob.dx.to_le_bytes());
    out.extend_from_slice(&blob.dt.to_le_bytes());
    out.extend_from_slice(&blob.seed.to_le_bytes());
    for v in &blob.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn checked_len(shape: &[u64]) -> Result<u64> {
    if shape.is_empty() || shape.len() > MAX_DIMS {
        return Err(Error::Format(format!("ndims = {} outside 1..={MAX_DIMS}", shape.len())));
    }
    let mut n: u64 = 1;
    for &s in shape {
        n = n.checked_mul(s).filter(|&v| v <= MAX_VALUES).ok_or_else(|| Error::Format("field too large".into()))?;
    }
    Ok(n)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos.checked_add(N).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at {what}")))?;
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        self.take::<4>(what).map(u32::from_le_bytes)
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        self.take::<8>(what).map(u64::from_le_bytes)
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        self.take::<8>(what).map(f64::from_le_bytes)
    }
}

pub fn decode_field(bytes: &[u8]) -> Result<FieldBlob> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    if &c.take::<4>("magic")? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let ndims = c.u32("ndims")? as usize;
    if ndims == 0 || ndims > MAX_DIMS {
        return Err(Error::Format(format!("ndims = {ndims} outside 1..={MAX_DIMS}")));
    }
    let shape = (0..ndims).map(|_| c.u64("shape")).collect::<Result<Vec<u64>>>()?;
    let n = checked_len(&shape)?;
    let dx = c.f64("dx")?;
    let dt = c.f64("dt")?;
    let seed = c.u64("seed")?;
    let rest = bytes.len() - c.pos;
    if rest as u64 != 8 * n {
        return Err(Error::Format(format!("expected {} data bytes, found {rest}", 8 * n)));
    }
    let data = bytes[c.pos..].chunks_exact(8).map(|ch| f64::from_le_bytes(ch.try_into().unwrap())).collect();
    Ok(FieldBlob { shape, dx, dt, seed, data })
}

pub fn write_field<W: Write>(mut w: W, blob: &FieldBlob) -> Result<()> {
    w.write_all(&encode_field(blob)?)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<FieldBlob> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_field(&buf)
}

impl super::NoiseField {
    pub fn to_blob(&self) -> FieldBlob {
        FieldBlob {
            shape: self.grid.shape().iter().map(|&s| s as u64).collect(),
            dx: self.grid.dx,
            dt: self.grid.dt,
            seed: self.seed,
            data: self.values.clone(),
        }
    }
}
