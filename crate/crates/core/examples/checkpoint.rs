//! Saves a model, reloads it and confirms identical forecasts.

use std::collections::BTreeMap;

use tfkan::cli::studies::desk_model_config;
use tfkan::model::{load_checkpoint, save_checkpoint};
use tfkan::{Array, TfkanModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = TfkanModel::new(desk_model_config(2), 7)?;
    let dir = std::env::temp_dir().join("tfkan-checkpoint-example");
    std::fs::create_dir_all(&dir)?;
    let manifest = dir.join("model.manifest");
    let mut meta = BTreeMap::new();
    meta.insert("note".to_string(), "example".to_string());
    save_checkpoint(&manifest, &model, 7, &meta)?;
    let loaded = load_checkpoint(&manifest)?;
    let x = Array::from_fn([1, 2, 48], |i| (i as f64 * 0.1).sin());
    let diff = model.predict(&x)?.max_abs_diff(&loaded.model.predict(&x)?);
    println!("wrote {}; reloaded forecast differs by {diff:e}; meta {:?}", manifest.display(), loaded.meta);
    Ok(())
}
