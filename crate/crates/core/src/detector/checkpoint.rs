//! Binary checkpoint container.
//!
//! Layout (little-endian): magic `EEGCKPT1`, spec JSON (u32 length), spec
//! hash, feature config hash, input dim / channels / frames (u32), channel
//! labels, normalizer mean and scale, tensors (name, dims, data, Adam m, v),
//! Adam step (u64). Strings are u16-length prefixed UTF-8.

use super::network::Weights;
use super::spec::NetworkSpec;
use crate::error::{Error, Result};
use crate::manifest::{put_string16, ByteReader};

const MAGIC: &[u8; 8] = b"EEGCKPT1";

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn f64s(r: &mut ByteReader, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| r.f64()).collect()
}

pub fn save(w: &Weights) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    let spec = serde_json::to_vec(&w.spec).expect("spec serializes");
    put_u32(&mut out, spec.len());
    out.extend_from_slice(&spec);
    put_string16(&mut out, &w.spec.hash());
    put_string16(&mut out, &w.feature_hash);
    put_u32(&mut out, w.input_dim);
    put_u32(&mut out, w.plan.channels);
    put_u32(&mut out, w.plan.frames);
    put_u32(&mut out, w.channel_labels.len());
    for l in &w.channel_labels {
        put_string16(&mut out, l);
    }
    put_f64s(&mut out, &w.input_mean);
    put_f64s(&mut out, &w.input_scale);
    put_u32(&mut out, w.tensors.len());
    for (k, t) in w.tensors.iter().enumerate() {
        put_string16(&mut out, &t.name);
        put_u32(&mut out, t.shape.len());
        for &d in &t.shape {
            put_u32(&mut out, d);
        }
        put_f64s(&mut out, &t.data);
        put_f64s(&mut out, &w.adam.m[k]);
        put_f64s(&mut out, &w.adam.v[k]);
    }
    out.extend_from_slice(&w.adam.step.to_le_bytes());
    out
}

pub fn load(bytes: &[u8]) -> Result<Weights> {
    let bad = |m: String| Error::Container(m);
    let mut r = ByteReader::new(bytes);
    if r.take(8)? != MAGIC {
        return Err(bad("not a checkpoint (bad magic)".into()));
    }
    let n = r.u32()? as usize;
    let spec: NetworkSpec =
        serde_json::from_slice(r.take(n)?).map_err(|e| bad(format!("checkpoint spec: {e}")))?;
    let stored_hash = r.string16()?;
    if stored_hash != spec.hash() {
        return Err(bad("checkpoint spec hash does not match its spec".into()));
    }
    let feature_hash = r.string16()?;
    let input_dim = r.u32()? as usize;
    let channels = r.u32()? as usize;
    let frames = r.u32()? as usize;
    let mut w = Weights::zeros(&spec, channels, frames, input_dim)?;
    w.feature_hash = feature_hash;
    let nl = r.u32()? as usize;
    w.channel_labels = (0..nl).map(|_| r.string16()).collect::<Result<_>>()?;
    w.input_mean = f64s(&mut r, input_dim)?;
    w.input_scale = f64s(&mut r, input_dim)?;
    let nt = r.u32()? as usize;
    if nt != w.tensors.len() {
        return Err(bad(format!("{nt} tensors, network has {}", w.tensors.len())));
    }
    for k in 0..nt {
        let name = r.string16()?;
        let nd = r.u32()? as usize;
        let shape = (0..nd).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let t = &mut w.tensors[k];
        if name != t.name || shape != t.shape {
            return Err(bad(format!(
                "tensor {k}: found {name} {shape:?}, expected {} {:?}",
                t.name, t.shape
            )));
        }
        let len = t.data.len();
        t.data = f64s(&mut r, len)?;
        w.adam.m[k] = f64s(&mut r, len)?;
        w.adam.v[k] = f64s(&mut r, len)?;
    }
    w.adam.step = r.u64()?;
    if !r.is_done() {
        return Err(bad("trailing bytes after checkpoint".into()));
    }
    Ok(w)
}
