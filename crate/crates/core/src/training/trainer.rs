use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{mse_loss, Adam, MinMaxScaler};
use crate::array::Array;
use crate::autodiff::Graph;
use crate::data::{SeriesDataset, Split};
use crate::error::{Error, Result};
use crate::model::TfkanModel;
use crate::param::Module;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Seeds the per-epoch shuffle.
    pub seed: u64,
    /// Windows per forward pass during evaluation.
    pub eval_batch: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch_size: 32,
            max_epochs: 10,
            patience: 3,
            seed: 42,
            eval_batch: 64,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if self.batch_size == 0 || self.eval_batch == 0 || self.max_epochs == 0 {
            return Err(Error::Config("batch sizes and epoch cap must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub mse: f64,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
    pub steps: u64,
    /// Validation MSE after the best parameters are restored.
    pub final_val_loss: f64,
    pub test: Metrics,
    pub test_denormalized: Option<Metrics>,
}

#[derive(Serialize)]
struct EpochJson {
    epoch: usize,
    train_loss: f64,
    val_loss: f64,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    config: &'a BTreeMap<String, String>,
    epochs: Vec<EpochJson>,
    best_epoch: usize,
    best_val_loss: f64,
    stopped_early: bool,
    steps: u64,
    test: Metrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    test_denormalized: Option<Metrics>,
}

impl TrainReport {
    pub fn mean_epoch_seconds(&self) -> f64 {
        if self.epochs.is_empty() {
            return 0.0;
        }
        self.epochs.iter().map(|e| e.seconds).sum::<f64>() / self.epochs.len() as f64
    }

    /// Machine-readable metrics. Wall-clock fields are left out so that equal
    /// seeds give byte-identical files.
    pub fn metrics_json(&self, config: &BTreeMap<String, String>) -> Result<String> {
        let doc = ReportJson {
            config,
            epochs: self
                .epochs
                .iter()
                .map(|e| EpochJson {
                    epoch: e.epoch,
                    train_loss: e.train_loss,
                    val_loss: e.val_loss,
                })
                .collect(),
            best_epoch: self.best_epoch,
            best_val_loss: self.best_val_loss,
            stopped_early: self.stopped_early,
            steps: self.steps,
            test: self.test,
            test_denormalized: self.test_denormalized,
        };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    /// Key-value header followed by the per-epoch table.
    pub fn to_text(&self, config: &BTreeMap<String, String>) -> String {
        let mut s = String::new();
        for (k, v) in config {
            let _ = writeln!(s, "config.{k} = {v}");
        }
        let _ = writeln!(s, "best_epoch = {}", self.best_epoch);
        let _ = writeln!(s, "best_val_loss = {:?}", self.best_val_loss);
        let _ = writeln!(s, "stopped_early = {}", self.stopped_early);
        let _ = writeln!(s, "steps = {}", self.steps);
        let _ = writeln!(s, "test_mse = {:?}", self.test.mse);
        let _ = writeln!(s, "test_mae = {:?}", self.test.mae);
        let _ = writeln!(s, "test_rmse = {:?}", self.test.rmse);
        if let Some(d) = &self.test_denormalized {
            let _ = writeln!(s, "test_mae_denormalized = {:?}", d.mae);
            let _ = writeln!(s, "test_rmse_denormalized = {:?}", d.rmse);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>5}  {:>14}  {:>14}  {:>9}", "epoch", "train_loss", "val_loss", "seconds");
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{:>5}  {:>14.8}  {:>14.8}  {:>9.3}",
                e.epoch, e.train_loss, e.val_loss, e.seconds
            );
        }
        s
    }
}

/// One Adam step on a batch; returns the loss before the step.
pub fn fit_batch(model: &mut TfkanModel, adam: &mut Adam, x: &Array, y: &Array) -> Result<f64> {
    let grads = {
        let g = Graph::new();
        let pred = model.forward(&g, g.constant(x.clone()))?;
        let loss = mse_loss(pred, g.constant(y.clone()))?;
        let value = loss.value().item();
        (loss.backward()?, value)
    };
    adam.step(model, &grads.0)?;
    Ok(grads.1)
}

/// Metrics over every window of `split`, in chronological order. With a
/// scaler, predictions and targets are mapped back to the original scale first.
pub fn evaluate(
    model: &TfkanModel,
    data: &SeriesDataset,
    split: Split,
    batch: usize,
    scaler: Option<&MinMaxScaler>,
) -> Result<Metrics> {
    let count = data.window_count(split);
    if count == 0 {
        return Err(Error::contract(format!("{} split has no windows", split.name())));
    }
    let (mut se, mut ae, mut n) = (0.0, 0.0, 0usize);
    let indices: Vec<usize> = (0..count).collect();
    for chunk in indices.chunks(batch.max(1)) {
        let (x, y) = data.batch(split, chunk);
        let mut pred = model.predict(&x)?;
        let mut y = y;
        if let Some(s) = scaler {
            pred = s.inverse_axis(&pred, 1)?;
            y = s.inverse_axis(&y, 1)?;
        }
        for (p, t) in pred.data().iter().zip(y.data()) {
            let d = p - t;
            se += d * d;
            ae += d.abs();
        }
        n += y.len();
    }
    let mse = se / n as f64;
    Ok(Metrics {
        mse,
        mae: ae / n as f64,
        rmse: mse.sqrt(),
    })
}

/// Shuffled mini-batch epochs with early stopping on validation MSE.
///
/// `data` must already be scaled. Training stops once `patience` consecutive
/// epochs fail to improve (so `patience = 0` stops at the first one) or at the
/// epoch cap; the best parameters are then restored and scored on the test split.
pub fn train(
    model: &mut TfkanModel,
    data: &SeriesDataset,
    cfg: &TrainConfig,
    scaler: Option<&MinMaxScaler>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let c = model.config();
    if c.n_channels != data.channels() || c.lookback != data.lookback() || c.horizon != data.horizon() {
        return Err(Error::Config(format!(
            "model expects N={}, L={}, τ={} but data has N={}, L={}, τ={}",
            c.n_channels,
            c.lookback,
            c.horizon,
            data.channels(),
            data.lookback(),
            data.horizon()
        )));
    }
    for split in Split::ALL {
        if data.window_count(split) == 0 {
            return Err(Error::contract(format!("{} split has no windows", split.name())));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.lr);
    let mut order: Vec<usize> = (0..data.window_count(Split::Train)).collect();
    let mut epochs = Vec::new();
    let mut best: Option<(usize, f64, Vec<Array>)> = None;
    let mut wait = 0;
    let mut stopped_early = false;

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let (x, y) = data.batch(Split::Train, chunk);
            let loss = fit_batch(model, &mut adam, &x, &y)?;
            if !loss.is_finite() {
                return Err(Error::contract(format!("training loss became {loss} in epoch {epoch}")));
            }
            total += loss * chunk.len() as f64;
        }
        let train_loss = total / order.len() as f64;
        let val_loss = evaluate(model, data, Split::Val, cfg.eval_batch, None)?.mse;
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            seconds: start.elapsed().as_secs_f64(),
        });
        if best.as_ref().map_or(true, |b| val_loss < b.1) {
            best = Some((epoch, val_loss, model.snapshot()));
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience {
                stopped_early = epoch < cfg.max_epochs;
                break;
            }
        }
    }

    let (best_epoch, best_val_loss, snapshot) = best.expect("at least one epoch ran");
    model.restore(&snapshot);
    let final_val_loss = evaluate(model, data, Split::Val, cfg.eval_batch, None)?.mse;
    let test = evaluate(model, data, Split::Test, cfg.eval_batch, None)?;
    let test_denormalized = match scaler {
        Some(s) => Some(evaluate(model, data, Split::Test, cfg.eval_batch, Some(s))?),
        None => None,
    };
    Ok(TrainReport {
        epochs,
        best_epoch,
        best_val_loss,
        stopped_early,
        steps: adam.steps_taken(),
        final_val_loss,
        test,
        test_denormalized,
    })
}
