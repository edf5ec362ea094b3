//! Binary checkpoint format, little-endian, no padding:
//!
//! ```text
//! "DIM3"                       4 bytes
//! version                      u32
//! n_I0 n_I1 n_I2 n_S0 n_S1 n_S2 n_Con n_Tanh n_out    9 x u32
//! per layer (IndexNet L1, L2, SymbolNet L1, L2, OutNet L1, L2):
//!     rows cols                2 x u32
//!     weight                   rows * cols x f64, row-major
//!     bias                     rows x f64
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{MlpModel, NetDims};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"DIM3";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn to_bytes(model: &MlpModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * 10 + 8 * (model.parameter_count() + 12));
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for d in model.dims.as_array() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for layer in &model.layers {
        let (rows, cols) = layer.weight.dim();
        out.extend_from_slice(&(rows as u32).to_le_bytes());
        out.extend_from_slice(&(cols as u32).to_le_bytes());
        // `iter` visits a standard-layout array in row-major order.
        for w in layer.weight.iter().chain(&layer.bias) {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let available = self.buf.len() - self.pos;
        if available < len {
            return Err(Error::Truncated { offset: self.pos, needed: len - available });
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        let bytes = self.take(count.checked_mul(8).ok_or(Error::Truncated { offset: self.pos, needed: usize::MAX })?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<MlpModel> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4).map_err(|_| Error::BadMagic)? != CHECKPOINT_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: CHECKPOINT_VERSION });
    }
    let mut dims = [0usize; 9];
    for d in &mut dims {
        *d = r.u32()? as usize;
    }
    let dims = NetDims::from_array(dims);
    dims.check()?;
    let mut model = MlpModel::zeros(dims)?;
    for (i, (layer, &(rows, cols))) in model.layers.iter_mut().zip(&dims.layer_shapes()).enumerate() {
        let (r_rows, r_cols) = (r.u32()? as usize, r.u32()? as usize);
        if (r_rows, r_cols) != (rows, cols) {
            return Err(Error::ShapeMismatch(format!(
                "layer {i} stored as {r_rows}x{r_cols}, network needs {rows}x{cols}"
            )));
        }
        layer.weight = Array2::from_shape_vec((rows, cols), r.f64s(rows * cols)?)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        layer.bias = Array1::from(r.f64s(rows)?);
    }
    if r.pos != buf.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} trailing bytes after the last layer",
            buf.len() - r.pos
        )));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &MlpModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MlpModel> {
    from_bytes(&fs::read(path)?)
}
