use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use super::config::{Command, RunConfig};
use super::studies::{
    ablation_on, epoch_time_regressions, sweep, toy_study, SweepConfig, ToyStudyConfig,
};
use super::table::{num, Report};
use super::CliError;
use crate::data::{gen_synthetic, load_csv, read_table, LoadOptions, SeriesDataset, Split, SplitRatios, SyntheticSpec};
use crate::error::{Error, Result};
use crate::model::{load_checkpoint, save_checkpoint, ModelConfig, TfkanModel, Variant};
use crate::param::Module;
use crate::training::{evaluate, train, MinMaxScaler, TrainConfig, TrainReport};

/// Data keys a checkpoint remembers so that `eval` can rebuild the same series.
pub(crate) const DATA_KEYS: &[&str] = &[
    "data",
    "synthetic",
    "channels",
    "length",
    "periods",
    "noise",
    "trend",
    "synthetic_seed",
    "split",
];

fn out_dir(rc: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(rc.text("out"));
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn config_header(rc: &RunConfig) -> String {
    let mut s = format!("command = {}\n", rc.command().name());
    for (k, v) in rc.resolved() {
        let _ = writeln!(s, "config.{k} = {v}");
    }
    s
}

fn json_text(v: &Value) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

pub fn synthetic_spec(rc: &RunConfig) -> Result<SyntheticSpec> {
    Ok(SyntheticSpec {
        channels: rc.get("channels")?,
        length: rc.get("length")?,
        periods: rc.list("periods")?,
        noise: rc.get("noise")?,
        trend: rc.get("trend")?,
        seed: rc.get("synthetic_seed")?,
    })
}

/// Raw (unscaled) dataset named by `--data` or `--synthetic`.
pub fn load_dataset(rc: &RunConfig, lookback: usize, horizon: usize) -> Result<SeriesDataset, CliError> {
    let ratios: SplitRatios = rc.get("split")?;
    if let Some(path) = rc.path("data") {
        return Ok(load_csv(path, LoadOptions { ratios, lookback, horizon })?);
    }
    if rc.flag("synthetic")? {
        let t = gen_synthetic(&synthetic_spec(rc)?)?;
        return Ok(SeriesDataset::new(t.values, t.names, ratios, lookback, horizon)?);
    }
    Err(CliError::usage("missing dataset: pass --data <CSV> or --synthetic"))
}

pub fn model_config(rc: &RunConfig, n_channels: usize) -> Result<ModelConfig> {
    let variant: Variant = rc.get("variant")?;
    let mut flags = variant.flags();
    let inherit = |k: &str| rc.text(k) == "variant";
    if !inherit("freq_module") {
        flags.freq = rc.get("freq_module")?;
    }
    if !inherit("time_module") {
        flags.time = rc.get("time_module")?;
    }
    if !inherit("predictor_module") {
        flags.predictor = rc.get("predictor_module")?;
    }
    if !inherit("adjust") {
        flags.adjust = rc.get("adjust")?;
    }
    if !inherit("sharing") {
        flags.sharing = rc.get("sharing")?;
    }
    let config = ModelConfig {
        n_channels,
        lookback: rc.get("lookback")?,
        horizon: rc.get("horizon")?,
        embed_dim: rc.get("embed_dim")?,
        hidden: rc.get("hidden")?,
        grid_size: rc.get("grid_size")?,
        spline_order: rc.get("spline_order")?,
        depth: rc.get("depth")?,
        flags,
    };
    config.validate()?;
    Ok(config)
}

pub fn train_config(rc: &RunConfig) -> Result<TrainConfig> {
    let cfg = TrainConfig {
        lr: rc.get("lr")?,
        batch_size: rc.get("batch")?,
        max_epochs: rc.get("epochs")?,
        patience: rc.get("patience")?,
        seed: rc.get("seed")?,
        eval_batch: rc.get("eval_batch")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn report_json(report: &TrainReport, rc: &RunConfig, model: &TfkanModel) -> Result<Value> {
    let mut v: Value = serde_json::from_str(&report.metrics_json(rc.resolved())?)?;
    v["param_count"] = json!(model.param_count());
    v["command"] = json!(rc.command().name());
    Ok(v)
}

fn breakdown_text(model: &TfkanModel) -> String {
    let mut s = format!("param_count = {}\n", model.param_count());
    for (name, n) in model.param_breakdown() {
        let _ = writeln!(s, "params.{name} = {n}");
    }
    s
}

pub fn cmd_train(rc: &RunConfig) -> Result<(), CliError> {
    let seed: u64 = rc.get("seed")?;
    let lookback = rc.get("lookback")?;
    let raw = load_dataset(rc, lookback, rc.get("horizon")?)?;
    let config = model_config(rc, raw.channels())?;
    let base = train_config(rc)?;
    let denorm = rc.flag("denormalize")?;
    let (data, scaler) = MinMaxScaler::fit_dataset(&raw)?;
    let out = out_dir(rc)?;

    let lrs: Vec<f64> = rc.list("lr_grid")?;
    let batches: Vec<usize> = rc.list("batch_grid")?;
    let lrs = if lrs.is_empty() { vec![base.lr] } else { lrs };
    let batches = if batches.is_empty() { vec![base.batch_size] } else { batches };
    let mut best: Option<(TfkanModel, TrainReport, TrainConfig)> = None;
    let mut grid = Report::new(&["lr", "batch", "best_val_loss", "best_epoch"]);
    for &lr in &lrs {
        for &batch_size in &batches {
            let cfg = TrainConfig { lr, batch_size, ..base.clone() };
            cfg.validate()?;
            let mut model = TfkanModel::new(config.clone(), seed)?;
            let report = train(&mut model, &data, &cfg, denorm.then_some(&scaler))?;
            grid.push(vec![num(lr), batch_size.to_string(), num(report.best_val_loss), report.best_epoch.to_string()]);
            if best.as_ref().map_or(true, |b| report.best_val_loss < b.1.best_val_loss) {
                best = Some((model, report, cfg));
            }
        }
    }
    let (model, report, chosen) = best.expect("grid is never empty");
    if grid.rows.len() > 1 {
        grid.write_csv(&out.join("grid.csv"))?;
        write(&out.join("grid.txt"), &grid.render())?;
    }

    let mut meta = BTreeMap::new();
    let (smin, smax) = scaler.to_text();
    meta.insert("scaler.min".to_string(), smin);
    meta.insert("scaler.max".to_string(), smax);
    meta.insert("channels.names".to_string(), data.names().join(","));
    meta.insert("train.lr".to_string(), num(chosen.lr));
    meta.insert("train.batch".to_string(), chosen.batch_size.to_string());
    for k in DATA_KEYS {
        meta.insert(format!("config.{k}"), rc.text(k).to_string());
    }
    save_checkpoint(&out.join("model.manifest"), &model, seed, &meta)?;

    let mut text = config_header(rc);
    let _ = writeln!(text, "chosen.lr = {:?}\nchosen.batch = {}", chosen.lr, chosen.batch_size);
    text += &breakdown_text(&model);
    text += &report.to_text(&BTreeMap::new());
    write(&out.join("report.txt"), &text)?;
    write(&out.join("metrics.json"), &json_text(&report_json(&report, rc, &model)?)?)?;
    println!(
        "trained {} epochs (best {}): test MAE {:.6} RMSE {:.6}; wrote {}",
        report.epochs.len(),
        report.best_epoch,
        report.test.mae,
        report.test.rmse,
        out.display()
    );
    Ok(())
}

fn checkpoint_path(rc: &RunConfig) -> Result<PathBuf, CliError> {
    rc.path("checkpoint")
        .map(Path::to_path_buf)
        .ok_or_else(|| CliError::usage("missing checkpoint: pass --checkpoint <MANIFEST>"))
}

fn stored_scaler(meta: &BTreeMap<String, String>) -> Result<MinMaxScaler> {
    match (meta.get("scaler.min"), meta.get("scaler.max")) {
        (Some(a), Some(b)) => MinMaxScaler::from_text(a, b),
        _ => Err(Error::Integrity("checkpoint has no scaler metadata".into())),
    }
}

/// Data settings stored in a checkpoint, as a config layer below the user's.
pub(crate) fn checkpoint_layer(meta: &BTreeMap<String, String>) -> Vec<(String, String)> {
    DATA_KEYS
        .iter()
        .filter_map(|k| meta.get(&format!("config.{k}")).map(|v| (k.to_string(), v.clone())))
        .collect()
}

pub fn cmd_eval(rc: &RunConfig) -> Result<(), CliError> {
    let path = checkpoint_path(rc)?;
    let ck = load_checkpoint(&path)?;
    let mc = ck.model.config().clone();
    for (key, theirs) in [("lookback", mc.lookback), ("horizon", mc.horizon)] {
        if rc.is_explicit(key) {
            let ours: usize = rc.get(key)?;
            if ours != theirs {
                return Err(Error::Config(format!(
                    "{key} mismatch: checkpoint was trained with {theirs}, --{key} is {ours}"
                ))
                .into());
            }
        }
    }
    let raw = load_dataset(rc, mc.lookback, mc.horizon)?;
    if raw.channels() != mc.n_channels {
        return Err(Error::Config(format!(
            "channel mismatch: checkpoint expects {}, data has {}",
            mc.n_channels,
            raw.channels()
        ))
        .into());
    }
    let scaler = stored_scaler(&ck.meta)?;
    let data = raw.with_values(scaler.transform(raw.values())?)?;
    let batch: usize = rc.get("eval_batch")?;
    let test = evaluate(&ck.model, &data, Split::Test, batch, None)?;
    let mut doc = json!({
        "command": "eval",
        "config": rc.resolved(),
        "test": test,
    });
    if rc.flag("denormalize")? {
        doc["test_denormalized"] = json!(evaluate(&ck.model, &data, Split::Test, batch, Some(&scaler))?);
    }
    let out = out_dir(rc)?;
    write(&out.join("eval_metrics.json"), &json_text(&doc)?)?;
    let mut text = config_header(rc);
    let _ = writeln!(text, "test_mse = {:?}\ntest_mae = {:?}\ntest_rmse = {:?}", test.mse, test.mae, test.rmse);
    write(&out.join("eval_report.txt"), &text)?;
    println!("test MAE {:.6} RMSE {:.6}", test.mae, test.rmse);
    Ok(())
}

pub fn cmd_predict(rc: &RunConfig) -> Result<(), CliError> {
    let path = checkpoint_path(rc)?;
    let input = rc
        .path("input")
        .ok_or_else(|| CliError::usage("missing input: pass --input <CSV>"))?
        .to_path_buf();
    let ck = load_checkpoint(&path)?;
    let mc = ck.model.config().clone();
    let table = read_table(&input)?;
    if table.values.shape()[1] != mc.n_channels {
        return Err(Error::Config(format!(
            "channel mismatch: checkpoint expects {}, {} has {}",
            mc.n_channels,
            input.display(),
            table.values.shape()[1]
        ))
        .into());
    }
    let scaler = stored_scaler(&ck.meta)?;
    let forecast = forecast_last_window(&ck.model, &scaler, &table.values)?;
    let out = out_dir(rc)?;
    crate::data::write_csv(&out.join("forecast.csv"), &table.names, &forecast, None)?;
    println!("wrote {} forecast rows to {}", forecast.shape()[0], out.join("forecast.csv").display());
    Ok(())
}

/// Denormalized `[τ, N]` forecast after the last `L` rows of `values [T, N]`.
pub fn forecast_last_window(model: &TfkanModel, scaler: &MinMaxScaler, values: &crate::Array) -> Result<crate::Array> {
    let c = model.config();
    let x = SeriesDataset::last_window(values, c.lookback)?;
    let x = scaler.transform_axis(&x, 1)?;
    let y = scaler.inverse_axis(&model.predict(&x)?, 1)?;
    y.reshape([c.n_channels, c.horizon])?.swap_axes(0, 1)
}

pub fn toy_config(rc: &RunConfig) -> Result<ToyStudyConfig> {
    Ok(ToyStudyConfig {
        train_points: rc.get("train_points")?,
        test_points: rc.get("test_points")?,
        steps: rc.get("steps")?,
        lr: rc.get("lr")?,
        kan_hidden: rc.get("kan_hidden")?,
        grid_size: rc.get("grid_size")?,
        spline_order: rc.get("spline_order")?,
        seed: rc.get("seed")?,
    })
}

pub fn cmd_toy(rc: &RunConfig) -> Result<(), CliError> {
    let cfg = toy_config(rc)?;
    let start = Instant::now();
    let results = toy_study(&cfg)?;
    let out = out_dir(rc)?;
    let mut table = Report::new(&["function", "kan_mse", "mlp_mse", "kan_params", "mlp_params"]);
    let mut rows = Vec::new();
    for r in &results {
        table.push(vec![
            r.function.to_string(),
            num(r.kan_mse),
            num(r.mlp_mse),
            r.kan_params.to_string(),
            r.mlp_params.to_string(),
        ]);
        rows.push(json!({
            "function": r.function.to_string(),
            "kan_mse": r.kan_mse,
            "mlp_mse": r.mlp_mse,
            "kan_params": r.kan_params,
            "mlp_params": r.mlp_params,
        }));
        let mut curve = Report::new(&["x", "truth", "kan", "mlp"]);
        for i in 0..r.curve.x.len() {
            curve.push(vec![num(r.curve.x[i]), num(r.curve.truth[i]), num(r.curve.kan[i]), num(r.curve.mlp[i])]);
        }
        curve.write_csv(&out.join(format!("toy_curve_{}.csv", r.function)))?;
    }
    let wins = results.iter().filter(|r| r.kan_mse < r.mlp_mse).count();
    table.write_csv(&out.join("toy.csv"))?;
    let rendered = table.render();
    let mut text = config_header(rc);
    let _ = writeln!(text, "mlp_hidden = {}\nkan_wins = {wins}\nseconds = {:.1}\n", cfg.mlp_hidden(), start.elapsed().as_secs_f64());
    text += &rendered;
    write(&out.join("toy.txt"), &text)?;
    let doc = json!({ "command": "toy", "config": rc.resolved(), "kan_wins": wins, "rows": rows });
    write(&out.join("toy_metrics.json"), &json_text(&doc)?)?;
    print!("{rendered}");
    println!("KAN lower on {wins} of {} functions", results.len());
    Ok(())
}

fn study_dataset(rc: &RunConfig, lookback: usize, horizon: usize) -> Result<SeriesDataset, CliError> {
    if rc.path("data").is_none() && !rc.is_explicit("synthetic") {
        // The studies default to the synthetic series.
        let ratios: SplitRatios = rc.get("split")?;
        let t = gen_synthetic(&synthetic_spec(rc)?)?;
        return Ok(SeriesDataset::new(t.values, t.names, ratios, lookback, horizon)?);
    }
    load_dataset(rc, lookback, horizon)
}

pub fn cmd_ablate(rc: &RunConfig) -> Result<(), CliError> {
    let raw = study_dataset(rc, rc.get("lookback")?, rc.get("horizon")?)?;
    let (data, _) = MinMaxScaler::fit_dataset(&raw)?;
    let model = model_config(rc, data.channels())?;
    let variants: Vec<Variant> = match rc.text("variants") {
        "all" => Variant::ALL.to_vec(),
        _ => rc.list("variants")?,
    };
    let rows = ablation_on(&data, &model, &train_config(rc)?, &variants, rc.get("seed")?, rc.get("jobs")?)?;
    let out = out_dir(rc)?;
    let mut table = Report::new(&["variant", "mae", "rmse", "mse", "params", "epoch_seconds", "epochs", "best_epoch"]);
    let mut json_rows = Vec::new();
    for row in &rows {
        let r = &row.outcome.report;
        table.push(vec![
            row.variant.name().to_string(),
            num(r.test.mae),
            num(r.test.rmse),
            num(r.test.mse),
            row.outcome.params.to_string(),
            format!("{:.3}", r.mean_epoch_seconds()),
            r.epochs.len().to_string(),
            r.best_epoch.to_string(),
        ]);
        json_rows.push(json!({
            "variant": row.variant.name(),
            "test": r.test,
            "params": row.outcome.params,
            "epochs": r.epochs.len(),
            "best_epoch": r.best_epoch,
        }));
    }
    table.write_csv(&out.join("ablation.csv"))?;
    let rendered = table.render();
    write(&out.join("ablation.txt"), &(config_header(rc) + "\n" + &rendered))?;
    let doc = json!({ "command": "ablate", "config": rc.resolved(), "rows": json_rows });
    write(&out.join("ablation_metrics.json"), &json_text(&doc)?)?;
    print!("{rendered}");
    Ok(())
}

pub fn cmd_sweep(rc: &RunConfig) -> Result<(), CliError> {
    let model = model_config(rc, 1)?;
    let cfg = SweepConfig {
        synthetic: synthetic_spec(rc)?,
        ratios: rc.get("split")?,
        model,
        train: train_config(rc)?,
        lookbacks: rc.list("lookbacks")?,
        embed_dims: rc.list("embed_dims")?,
        seed: rc.get("seed")?,
        jobs: rc.get("jobs")?,
    };
    let cfg = SweepConfig {
        model: ModelConfig { n_channels: cfg.synthetic.channels, ..cfg.model.clone() },
        ..cfg
    };
    if rc.path("data").is_some() {
        return Err(CliError::usage("sweep runs on the synthetic series; --data is not supported"));
    }
    let rows = sweep(&cfg)?;
    let out = out_dir(rc)?;
    let mut table = Report::new(&["axis", "value", "lookback", "embed_dim", "mae", "rmse", "params", "epoch_seconds"]);
    let mut json_rows = Vec::new();
    for row in &rows {
        let r = &row.outcome.report;
        table.push(vec![
            row.axis.name().to_string(),
            row.value.to_string(),
            row.lookback.to_string(),
            row.embed_dim.to_string(),
            num(r.test.mae),
            num(r.test.rmse),
            row.outcome.params.to_string(),
            format!("{:.3}", r.mean_epoch_seconds()),
        ]);
        json_rows.push(json!({
            "axis": row.axis.name(),
            "value": row.value,
            "test": r.test,
            "params": row.outcome.params,
            "epochs": r.epochs.len(),
        }));
    }
    table.write_csv(&out.join("sweep.csv"))?;
    let rendered = table.render();
    write(&out.join("sweep.txt"), &(config_header(rc) + "\n" + &rendered))?;
    let doc = json!({ "command": "sweep", "config": rc.resolved(), "rows": json_rows });
    write(&out.join("sweep_metrics.json"), &json_text(&doc)?)?;
    print!("{rendered}");
    for (a, b) in epoch_time_regressions(&rows, 0.1) {
        eprintln!("warning: epoch time fell from lookback {a} to {b}");
    }
    Ok(())
}

pub fn dispatch(rc: &RunConfig) -> Result<(), CliError> {
    match rc.command() {
        Command::Train => cmd_train(rc),
        Command::Eval => cmd_eval(rc),
        Command::Predict => cmd_predict(rc),
        Command::Toy => cmd_toy(rc),
        Command::Ablate => cmd_ablate(rc),
        Command::Sweep => cmd_sweep(rc),
    }
}
