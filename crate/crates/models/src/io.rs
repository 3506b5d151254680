//! The `.tscm` model file format.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic  b"TSCM"
//! version u32 (currently 1)
//! spec    u32 byte length + UTF-8 flat `key = value` block
//! section tag u8 = 1: parameters    (count u32, then entries)
//! section tag u8 = 2: running stats (count u32, then entries)
//! entry   name (u32 len + UTF-8), ndim u8, dims u32 each, f64 values row-major
//! ```
//!
//! Maps are written in name order, so save -> load -> save is byte-identical.

use crate::error::{ModelError, Result};
use crate::spec::ModelSpec;
use crate::state::{ModelState, TrainMeta};
use std::collections::BTreeMap;
use std::path::Path;
use tsc_tensor::Tensor;

const MAGIC: &[u8; 4] = b"TSCM";
const VERSION: u32 = 1;
const TAG_PARAMS: u8 = 1;
const TAG_RUNNING: u8 = 2;

pub fn save_model(state: &ModelState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(state);
    std::fs::write(path, bytes).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelState> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_bytes(&bytes)
}

pub fn to_bytes(state: &ModelState) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let mut spec_block = state.spec.to_config();
    spec_block.push_str(&format!("epochs_seen = {}\n", state.train_meta.epochs_seen));
    spec_block.push_str(&format!(
        "checkpoint_tag = {}\n",
        state.train_meta.checkpoint_tag
    ));
    out.extend_from_slice(&(spec_block.len() as u32).to_le_bytes());
    out.extend_from_slice(spec_block.as_bytes());
    write_section(&mut out, TAG_PARAMS, &state.params);
    write_section(&mut out, TAG_RUNNING, &state.running);
    out
}

fn write_section(out: &mut Vec<u8>, tag: u8, map: &BTreeMap<String, Tensor>) {
    out.push(tag);
    out.extend_from_slice(&(map.len() as u32).to_le_bytes());
    for (name, tensor) in map {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(tensor.shape().len() as u8);
        for &d in tensor.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(ModelError::Truncated(what));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self, what: &'static str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelState> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(ModelError::BadVersion(version));
    }
    let spec_len = cur.u32("spec length")? as usize;
    let spec_bytes = cur.take(spec_len, "spec block")?;
    let spec_text = std::str::from_utf8(spec_bytes)
        .map_err(|_| ModelError::Spec("spec block is not UTF-8".into()))?;
    let spec = ModelSpec::parse(spec_text)?;
    let mut train_meta = TrainMeta::default();
    for (key, value) in crate::spec::parse_kv(spec_text) {
        match key.as_str() {
            "epochs_seen" => {
                train_meta.epochs_seen = value
                    .parse()
                    .map_err(|_| ModelError::Spec("bad epochs_seen".into()))?
            }
            "checkpoint_tag" => train_meta.checkpoint_tag = value,
            _ => {}
        }
    }
    let params = read_section(&mut cur, TAG_PARAMS)?;
    let running = read_section(&mut cur, TAG_RUNNING)?;
    Ok(ModelState {
        spec,
        params,
        running,
        train_meta,
    })
}

fn read_section(cur: &mut Cursor, expected_tag: u8) -> Result<BTreeMap<String, Tensor>> {
    let tag = cur.u8("section tag")?;
    if tag != expected_tag {
        return Err(ModelError::Spec(format!(
            "unexpected section tag {tag}, expected {expected_tag}"
        )));
    }
    let count = cur.u32("section count")? as usize;
    let mut map = BTreeMap::new();
    for _ in 0..count {
        let name_len = cur.u32("name length")? as usize;
        let name = std::str::from_utf8(cur.take(name_len, "name")?)
            .map_err(|_| ModelError::Spec("tensor name is not UTF-8".into()))?
            .to_string();
        let ndim = cur.u8("ndim")? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(cur.u32("dim")? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            data.push(cur.f64("values")?);
        }
        let tensor = Tensor::from_vec(&shape, data)
            .map_err(|e| ModelError::Spec(format!("bad tensor {name}: {e}")))?;
        map.insert(name, tensor);
    }
    Ok(map)
}
