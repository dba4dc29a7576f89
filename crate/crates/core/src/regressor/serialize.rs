//! Versioned binary serialization of model parameters.
//!
//! Layout: magic `IQMP`, format version u16, head tag u8 (0 = classify,
//! 1 = regress), head output dim u32, layer-size count u32, the sizes as
//! u32, then per layer the weight matrix and bias vector as little-endian
//! f64. Everything is length-prefixed by the header, so loads validate
//! dimensions before touching the payload.

use std::fs;
use std::path::Path;

use super::{Head, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"IQMP";
const VERSION: u16 = 1;

pub fn save_params(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let (tag, head_dim) = match params.head {
        Head::Classify(n) => (0u8, n as u32),
        Head::Regress => (1u8, 1u32),
    };
    out.push(tag);
    out.extend_from_slice(&head_dim.to_le_bytes());
    out.extend_from_slice(&(params.layer_sizes.len() as u32).to_le_bytes());
    for &s in &params.layer_sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    for (w, b) in params.weights.iter().zip(&params.biases) {
        for v in w.iter().chain(b) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut cursor = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if cursor.take(4)? != MAGIC {
        return Err(Error::decode(path, "not a model parameter file"));
    }
    let version = u16::from_le_bytes(cursor.take(2)?.try_into().unwrap());
    if version != VERSION {
        return Err(Error::decode(
            path,
            format!("unsupported format version {version}"),
        ));
    }
    let tag = cursor.take(1)?[0];
    let head_dim = cursor.u32()? as usize;
    let head = match tag {
        0 => Head::Classify(head_dim),
        1 if head_dim == 1 => Head::Regress,
        _ => return Err(Error::decode(path, format!("bad head tag {tag}/{head_dim}"))),
    };
    let n_sizes = cursor.u32()? as usize;
    if n_sizes == 0 || n_sizes > 64 {
        return Err(Error::decode(path, "implausible layer count"));
    }
    let mut layer_sizes = Vec::with_capacity(n_sizes);
    for _ in 0..n_sizes {
        let s = cursor.u32()? as usize;
        if s == 0 {
            return Err(Error::decode(path, "zero layer size"));
        }
        layer_sizes.push(s);
    }
    let mut dims: Vec<(usize, usize)> = layer_sizes.windows(2).map(|w| (w[1], w[0])).collect();
    dims.push((head.output_dim(), *layer_sizes.last().unwrap()));
    let mut weights = Vec::with_capacity(dims.len());
    let mut biases = Vec::with_capacity(dims.len());
    for (out, inp) in dims {
        weights.push(cursor.f64s(out * inp)?);
        biases.push(cursor.f64s(out)?);
    }
    if cursor.pos != bytes.len() {
        return Err(Error::decode(path, "trailing bytes after parameters"));
    }
    Ok(ModelParams {
        layer_sizes,
        weights,
        biases,
        head,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| Error::decode(self.path, "truncated parameter file"))?;
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}
