//! Checkpoint = text manifest + little-endian `f64` blob.
//!
//! ```text
//! format = tfkan-checkpoint/1
//! seed = 42
//! n_channels = 7
//! ...                          (model config and variant flags)
//! meta.<key> = <value>         (caller metadata, sorted by key)
//! blob = model.bin
//! blob_bytes = 131684224
//! tensors = 10
//! tensor.0 = embed 1x128 0     (name, shape, byte offset)
//! ```
//!
//! Tensors appear in parameter visit order and are packed back to back.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{ModelConfig, TfkanModel, VariantFlags};
use crate::error::{Error, Result};
use crate::param::Module;

pub const CHECKPOINT_FORMAT: &str = "tfkan-checkpoint/1";

#[derive(Debug)]
pub struct Checkpoint {
    pub model: TfkanModel,
    pub seed: u64,
    pub meta: BTreeMap<String, String>,
}

fn shape_text(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("x")
}

/// Writes `<manifest>` and its blob alongside it (same stem, `.bin`).
pub fn save_checkpoint(
    manifest: &Path,
    model: &TfkanModel,
    seed: u64,
    meta: &BTreeMap<String, String>,
) -> Result<()> {
    let blob_path = manifest.with_extension("bin");
    let blob_name = blob_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Config(format!("bad checkpoint path {}", manifest.display())))?
        .to_string();
    let c = model.config();
    let f = c.flags;
    let mut text = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| {
        let _ = writeln!(text, "{k} = {v}");
    };
    kv("format", &CHECKPOINT_FORMAT);
    kv("seed", &seed);
    kv("n_channels", &c.n_channels);
    kv("lookback", &c.lookback);
    kv("horizon", &c.horizon);
    kv("embed_dim", &c.embed_dim);
    kv("hidden", &c.hidden);
    kv("grid_size", &c.grid_size);
    kv("spline_order", &c.spline_order);
    kv("depth", &c.depth);
    kv("freq_module", &f.freq);
    kv("time_module", &f.time);
    kv("predictor_module", &f.predictor);
    kv("adjust", &f.adjust);
    kv("freqkan_sharing", &f.sharing);
    for (k, v) in meta {
        if v.contains('\n') {
            return Err(Error::Config(format!("metadata `{k}` contains a newline")));
        }
        kv(&format!("meta.{k}"), v);
    }
    let params = model.params();
    let total: usize = params.iter().map(|p| p.numel() * 8).sum();
    kv("blob", &blob_name);
    kv("blob_bytes", &total);
    kv("tensors", &params.len());
    let mut blob = Vec::with_capacity(total);
    for (i, p) in params.iter().enumerate() {
        let line = format!("{} {} {}", p.name(), shape_text(p.value().shape()), blob.len());
        kv(&format!("tensor.{i}"), &line);
        for v in p.value().data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(manifest, text).map_err(|e| Error::io(manifest, e))?;
    fs::write(&blob_path, blob).map_err(|e| Error::io(&blob_path, e))?;
    Ok(())
}

fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Integrity(format!("manifest line {} has no `=`", n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_checkpoint(manifest: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let kv = parse_manifest(&text)?;
    let get = |k: &str| {
        kv.get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::Integrity(format!("manifest is missing `{k}`")))
    };
    fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::Integrity(format!("bad value for `{k}`: {v}")))
    }
    if get("format")? != CHECKPOINT_FORMAT {
        return Err(Error::Integrity(format!("unsupported format `{}`", get("format")?)));
    }
    let config = ModelConfig {
        n_channels: num("n_channels", get("n_channels")?)?,
        lookback: num("lookback", get("lookback")?)?,
        horizon: num("horizon", get("horizon")?)?,
        embed_dim: num("embed_dim", get("embed_dim")?)?,
        hidden: num("hidden", get("hidden")?)?,
        grid_size: num("grid_size", get("grid_size")?)?,
        spline_order: num("spline_order", get("spline_order")?)?,
        depth: get("depth")?.parse()?,
        flags: VariantFlags {
            freq: get("freq_module")?.parse()?,
            time: get("time_module")?.parse()?,
            predictor: get("predictor_module")?.parse()?,
            adjust: get("adjust")?.parse()?,
            sharing: get("freqkan_sharing")?.parse()?,
        },
    };
    let seed: u64 = num("seed", get("seed")?)?;
    let mut model = TfkanModel::new(config, seed)?;

    let blob_path = manifest.with_file_name(get("blob")?);
    let blob = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
    let declared: usize = num("blob_bytes", get("blob_bytes")?)?;
    if blob.len() != declared {
        return Err(Error::Integrity(format!(
            "blob is {} bytes, manifest declares {declared}",
            blob.len()
        )));
    }
    let n_tensors: usize = num("tensors", get("tensors")?)?;
    let expected = model.params();
    if n_tensors != expected.len() {
        return Err(Error::Integrity(format!(
            "manifest lists {n_tensors} tensors, configuration has {}",
            expected.len()
        )));
    }
    let mut offsets = Vec::with_capacity(n_tensors);
    let mut cursor = 0usize;
    for (i, p) in expected.iter().enumerate() {
        let entry = get(&format!("tensor.{i}"))?;
        let parts: Vec<&str> = entry.split_whitespace().collect();
        let [name, shape, offset] = parts[..] else {
            return Err(Error::Integrity(format!("malformed tensor.{i}: {entry}")));
        };
        let offset: usize = num("offset", offset)?;
        if name != p.name() || shape != shape_text(p.value().shape()) || offset != cursor {
            return Err(Error::Integrity(format!(
                "tensor.{i} is `{entry}`, expected `{} {} {cursor}`",
                p.name(),
                shape_text(p.value().shape())
            )));
        }
        offsets.push(offset);
        cursor += p.numel() * 8;
    }
    if cursor != blob.len() {
        return Err(Error::Integrity(format!(
            "tensors need {cursor} bytes, blob has {}",
            blob.len()
        )));
    }
    let mut it = offsets.into_iter();
    model.visit_params_mut(&mut |p| {
        let start = it.next().unwrap();
        for (j, v) in p.value_mut().data_mut().iter_mut().enumerate() {
            let at = start + j * 8;
            *v = f64::from_le_bytes(blob[at..at + 8].try_into().unwrap());
        }
    });
    let meta = kv
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v.clone())))
        .collect();
    Ok(Checkpoint { model, seed, meta })
}
