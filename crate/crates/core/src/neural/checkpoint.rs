//! Versioned little-endian binary layout for network parameters.
//!
//! ```text
//! offset  size            field
//! 0       4               magic "SCNN"
//! 4       4               format version (u32) = 1
//! 8       4               layer count L (u32)
//! 12      4·(L+1)         layer widths, input first (u32 each)
//! ...     8·out·in        layer 0 weights, row-major out × in (f64)
//! ...     8·out           layer 0 bias (f64)
//!         ...             remaining layers in order
//! ```

use std::path::Path;

use super::{DenseLayer, DenseParams};
use crate::error::{Error, Result};

pub const PARAMS_MAGIC: [u8; 4] = *b"SCNN";
pub const PARAMS_VERSION: u32 = 1;

/// Cursor over a byte buffer; every read checks the remaining length.
pub struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        ByteReader { data, pos: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    pub fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if self.remaining() < n {
            return Err(format!(
                "truncated: need {n} bytes at offset {}, {} left",
                self.pos,
                self.remaining()
            ));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64_vec(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        let bytes = self.take(n.checked_mul(8).ok_or("length overflow")?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn expect_magic(&mut self, magic: &[u8; 4]) -> std::result::Result<(), String> {
        let got = self.take(4)?;
        if got != magic {
            return Err(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            ));
        }
        Ok(())
    }
}

pub fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn put_f64s(buf: &mut Vec<u8>, v: &[f64]) {
    buf.reserve(v.len() * 8);
    for x in v {
        put_f64(buf, *x);
    }
}

pub fn encode_params(p: &DenseParams, buf: &mut Vec<u8>) {
    buf.extend_from_slice(&PARAMS_MAGIC);
    put_u32(buf, PARAMS_VERSION);
    put_u32(buf, p.layers.len() as u32);
    for s in p.sizes() {
        put_u32(buf, s as u32);
    }
    for l in &p.layers {
        put_f64s(buf, &l.weight);
        put_f64s(buf, &l.bias);
    }
}

pub fn decode_params(r: &mut ByteReader<'_>) -> std::result::Result<DenseParams, String> {
    r.expect_magic(&PARAMS_MAGIC)?;
    let version = r.u32()?;
    if version != PARAMS_VERSION {
        return Err(format!("unsupported parameter format version {version}"));
    }
    let n_layers = r.u32()? as usize;
    if n_layers == 0 || n_layers > 64 {
        return Err(format!("implausible layer count {n_layers}"));
    }
    let mut sizes = Vec::with_capacity(n_layers + 1);
    for _ in 0..=n_layers {
        let s = r.u32()? as usize;
        if s == 0 {
            return Err("zero layer width".into());
        }
        sizes.push(s);
    }
    let mut layers = Vec::with_capacity(n_layers);
    for w in sizes.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        let weight = r.f64_vec(inputs * outputs)?;
        let bias = r.f64_vec(outputs)?;
        layers.push(DenseLayer {
            inputs,
            outputs,
            weight,
            bias,
        });
    }
    Ok(DenseParams { layers })
}

pub fn save_params(path: &Path, p: &DenseParams) -> Result<()> {
    let mut buf = Vec::new();
    encode_params(p, &mut buf);
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: &Path) -> Result<DenseParams> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(&data);
    let corrupt = |reason: String| Error::Checkpoint {
        path: path.to_path_buf(),
        reason,
    };
    let p = decode_params(&mut r).map_err(corrupt)?;
    if r.remaining() != 0 {
        return Err(corrupt(format!("{} trailing bytes", r.remaining())));
    }
    Ok(p)
}
