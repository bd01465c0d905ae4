//! Binary checkpoint format.
//!
//! Layout: magic `LLNS`, `u32` version, `u32` config length + TOML-encoded
//! `ModelConfig`, `u32` tensor count, then per tensor: `u16` name length,
//! name bytes, `u8` rank, one `u32` per dimension, and the values as
//! little-endian `f32`. All integers little-endian.

use crate::error::{Error, Result};
use crate::model::{init_params, ModelConfig, NetworkParams};
use crate::tensor::Scalar;
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LLNS";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint<S: Scalar>(path: &Path, params: &NetworkParams<S>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let cfg_text = toml::to_string(&params.cfg)
        .map_err(|e| Error::Config(format!("serialize model config: {e}")))?;
    let cfg_bytes = cfg_text.as_bytes();
    w.write_all(&(cfg_bytes.len() as u32).to_le_bytes())?;
    w.write_all(cfg_bytes)?;
    let tensors = params.all_parameters();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for p in &tensors {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name)?;
        let shape = p.value.shape();
        w.write_all(&[shape.len() as u8])?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &v in p.value.data().iter() {
            w.write_all(&(v.to_f64() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)
        .map_err(|_| Error::Format("checkpoint truncated".into()))?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact(r, 4)?.try_into().unwrap()))
}

pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<NetworkParams<S>> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    if read_exact(&mut r, 4)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let cfg_len = read_u32(&mut r)? as usize;
    let cfg_text = String::from_utf8(read_exact(&mut r, cfg_len)?)
        .map_err(|_| Error::Format("config block is not UTF-8".into()))?;
    let cfg: ModelConfig =
        toml::from_str(&cfg_text).map_err(|e| Error::Config(format!("model config: {e}")))?;
    let tensor_count = read_u32(&mut r)? as usize;

    let mut stored: Vec<(String, Vec<usize>, Vec<S>)> = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let name_len = u16::from_le_bytes(read_exact(&mut r, 2)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(read_exact(&mut r, name_len)?)
            .map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        let rank = read_exact(&mut r, 1)?[0] as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u32(&mut r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let raw = read_exact(&mut r, numel * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| S::from_f64(f32::from_le_bytes(c.try_into().unwrap()) as f64))
            .collect();
        stored.push((name, shape, data));
    }

    let mut params = init_params::<S>(&cfg, 0)?;
    if stored.iter().any(|(n, _, _)| n.starts_with("disc.")) {
        params.ensure_discriminator(0);
    }
    let slots = params.all_parameters();
    if slots.len() != stored.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} tensors, model expects {}",
            stored.len(),
            slots.len()
        )));
    }
    for (name, shape, data) in stored {
        let slot = slots
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Format(format!("unexpected tensor {name:?}")))?;
        if slot.value.shape() != shape.as_slice() {
            return Err(Error::shape(
                format!("{:?} for {name}", slot.value.shape()),
                format!("{shape:?}"),
            ));
        }
        slot.value.set_data(data)?;
    }
    Ok(params)
}

/// Names of tensors whose bytes differ between two checkpoints.
pub fn diff_checkpoints(a: &Path, b: &Path) -> Result<Vec<String>> {
    let pa = load_checkpoint::<f32>(a)?;
    let pb = load_checkpoint::<f32>(b)?;
    let ta = pa.all_parameters();
    let tb = pb.all_parameters();
    let mut diff = Vec::new();
    for p in &ta {
        match tb.iter().find(|q| q.name == p.name) {
            Some(q) if q.value.to_vec() == p.value.to_vec() => {}
            _ => diff.push(p.name.clone()),
        }
    }
    for q in &tb {
        if !ta.iter().any(|p| p.name == q.name) {
            diff.push(q.name.clone());
        }
    }
    diff.sort();
    Ok(diff)
}
