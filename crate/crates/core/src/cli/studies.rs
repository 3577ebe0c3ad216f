//! Experiment drivers shared by the command line and the examples.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::array::Array;
use crate::autodiff::{Graph, Var};
use crate::data::{gen_synthetic, gen_toy, Sampling, SeriesDataset, SplitRatios, SyntheticSpec, ToyFunction, ToySpec};
use crate::error::{Error, Result};
use crate::kan::{KanStack, KnotGrid, Mlp};
use crate::model::{ModelConfig, TfkanModel, Variant};
use crate::param::Module;
use crate::training::{mse, mse_loss, train, Adam, MinMaxScaler, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyStudyConfig {
    pub train_points: usize,
    pub test_points: usize,
    pub steps: usize,
    pub lr: f64,
    pub kan_hidden: usize,
    pub grid_size: usize,
    pub spline_order: usize,
    pub seed: u64,
}

impl Default for ToyStudyConfig {
    fn default() -> Self {
        Self {
            train_points: 512,
            test_points: 256,
            steps: 2000,
            lr: 1e-3,
            kan_hidden: 64,
            grid_size: 2,
            spline_order: 1,
            seed: 42,
        }
    }
}

impl ToyStudyConfig {
    pub fn kan_params(&self) -> usize {
        let nb = self.grid_size + self.spline_order;
        2 * self.kan_hidden * (nb + 2)
    }

    /// Hidden width `m` of the `1 -> m -> 1` MLP whose `3m + 1` parameters come
    /// closest to the KAN's.
    pub fn mlp_hidden(&self) -> usize {
        ((self.kan_params() as f64 - 1.0) / 3.0).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone)]
pub struct ToyCurve {
    pub x: Vec<f64>,
    pub truth: Vec<f64>,
    pub kan: Vec<f64>,
    pub mlp: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ToyResult {
    pub function: ToyFunction,
    pub kan_mse: f64,
    pub mlp_mse: f64,
    pub kan_params: usize,
    pub mlp_params: usize,
    pub curve: ToyCurve,
    pub seconds: f64,
}

fn column(v: &[f64]) -> Array {
    Array::new([v.len(), 1], v.to_vec()).unwrap()
}

/// Full-batch Adam regression of `y` on `x`; returns the final train loss.
pub fn fit_regressor<M: Module>(
    model: &mut M,
    forward: impl for<'g> Fn(&M, &'g Graph, Var<'g>) -> Result<Var<'g>>,
    x: &Array,
    y: &Array,
    steps: usize,
    lr: f64,
) -> Result<f64> {
    let mut adam = Adam::new(lr);
    let mut last = f64::NAN;
    for _ in 0..steps {
        let g = Graph::new();
        let pred = forward(model, &g, g.constant(x.clone()))?;
        let loss = mse_loss(pred, g.constant(y.clone()))?;
        last = loss.value().item();
        let grads = loss.backward()?;
        adam.step(model, &grads)?;
    }
    Ok(last)
}

fn predict_with<M>(model: &M, forward: impl for<'g> Fn(&M, &'g Graph, Var<'g>) -> Result<Var<'g>>, x: &Array) -> Result<Array> {
    let g = Graph::new();
    let out = forward(model, &g, g.constant(x.clone()))?;
    Ok(out.value().as_ref().clone())
}

fn kan_fwd<'g>(m: &KanStack, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
    m.forward(g, x)
}

fn mlp_fwd<'g>(m: &Mlp, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
    m.forward(g, x)
}

pub fn toy_function_study(function: ToyFunction, cfg: &ToyStudyConfig) -> Result<ToyResult> {
    let start = Instant::now();
    let (xs, ys) = gen_toy(&ToySpec::new(function, cfg.train_points, Sampling::Equispaced))?;
    let (xt, yt) = gen_toy(&ToySpec::new(function, cfg.test_points, Sampling::Midpoints))?;
    let (x, y, x_test, y_test) = (column(&xs), column(&ys), column(&xt), column(&yt));

    let grid = KnotGrid::uniform(cfg.grid_size, cfg.spline_order)?;
    let mut kan = KanStack::new(&[1, cfg.kan_hidden, 1], &grid, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut mlp = Mlp::two_layer(1, cfg.mlp_hidden(), 1, &mut ChaCha8Rng::seed_from_u64(cfg.seed));
    fit_regressor(&mut kan, kan_fwd, &x, &y, cfg.steps, cfg.lr)?;
    fit_regressor(&mut mlp, mlp_fwd, &x, &y, cfg.steps, cfg.lr)?;

    let kan_pred = predict_with(&kan, kan_fwd, &x_test)?;
    let mlp_pred = predict_with(&mlp, mlp_fwd, &x_test)?;
    Ok(ToyResult {
        function,
        kan_mse: mse(&kan_pred, &y_test)?,
        mlp_mse: mse(&mlp_pred, &y_test)?,
        kan_params: kan.param_count(),
        mlp_params: mlp.param_count(),
        curve: ToyCurve {
            x: xt,
            truth: yt,
            kan: kan_pred.into_data(),
            mlp: mlp_pred.into_data(),
        },
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn toy_study(cfg: &ToyStudyConfig) -> Result<Vec<ToyResult>> {
    ToyFunction::ALL.iter().map(|&f| toy_function_study(f, cfg)).collect()
}

/// Desk-scale model used by the ablation and sweep drivers.
pub fn desk_model_config(n_channels: usize) -> ModelConfig {
    ModelConfig {
        n_channels,
        lookback: 48,
        horizon: 12,
        embed_dim: 16,
        hidden: 32,
        ..ModelConfig::default()
    }
}

/// One training run: fresh model from `seed`, scaled data, early stopping.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: TrainReport,
    pub params: usize,
}

pub fn run_training(config: &ModelConfig, data: &SeriesDataset, train_cfg: &TrainConfig, seed: u64) -> Result<RunOutcome> {
    let mut model = TfkanModel::new(config.clone(), seed)?;
    let report = train(&mut model, data, train_cfg, None)?;
    Ok(RunOutcome {
        report,
        params: model.param_count(),
    })
}

/// Runs `jobs` closures at a time, keeping results in input order.
pub fn run_parallel<T: Send, R: Send>(items: Vec<T>, jobs: usize, f: impl Fn(T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }
    let n = items.len();
    let queue = std::sync::Mutex::new(items.into_iter().enumerate().collect::<Vec<_>>().into_iter());
    let results = std::sync::Mutex::new((0..n).map(|_| None).collect::<Vec<Option<R>>>());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(n) {
            scope.spawn(|| loop {
                let next = queue.lock().unwrap().next();
                let Some((i, item)) = next else { break };
                let r = f(item);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationConfig {
    pub synthetic: SyntheticSpec,
    pub ratios: SplitRatios,
    /// Geometry and sizes; the variant flags are overwritten per row.
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub variants: Vec<Variant>,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for AblationConfig {
    fn default() -> Self {
        let synthetic = SyntheticSpec::default();
        Self {
            model: desk_model_config(synthetic.channels),
            synthetic,
            ratios: SplitRatios::STANDARD,
            train: TrainConfig::default(),
            variants: Variant::ALL.to_vec(),
            seed: 42,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: Variant,
    pub outcome: RunOutcome,
}

/// Scaled dataset for a synthetic spec.
pub fn synthetic_dataset(
    spec: &SyntheticSpec,
    ratios: SplitRatios,
    lookback: usize,
    horizon: usize,
) -> Result<(SeriesDataset, MinMaxScaler)> {
    let table = gen_synthetic(spec)?;
    let raw = SeriesDataset::new(table.values, table.names, ratios, lookback, horizon)?;
    MinMaxScaler::fit_dataset(&raw)
}

/// Trains every variant on `data` with shared seed and hyperparameters.
pub fn ablation_on(
    data: &SeriesDataset,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    variants: &[Variant],
    seed: u64,
    jobs: usize,
) -> Result<Vec<AblationRow>> {
    let results = run_parallel(variants.to_vec(), jobs, |v| {
        let cfg = model.clone().with_variant(v);
        run_training(&cfg, data, train_cfg, seed).map(|outcome| AblationRow { variant: v, outcome })
    });
    results.into_iter().collect()
}

pub fn ablation(cfg: &AblationConfig) -> Result<Vec<AblationRow>> {
    let (data, _) = synthetic_dataset(&cfg.synthetic, cfg.ratios, cfg.model.lookback, cfg.model.horizon)?;
    ablation_on(&data, &cfg.model, &cfg.train, &cfg.variants, cfg.seed, cfg.jobs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Lookback,
    EmbedDim,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Lookback => "lookback",
            SweepAxis::EmbedDim => "embed_dim",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub synthetic: SyntheticSpec,
    pub ratios: SplitRatios,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub lookbacks: Vec<usize>,
    pub embed_dims: Vec<usize>,
    pub seed: u64,
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let synthetic = SyntheticSpec {
            length: 4000,
            ..SyntheticSpec::default()
        };
        Self {
            model: desk_model_config(synthetic.channels),
            synthetic,
            ratios: SplitRatios::STANDARD,
            train: TrainConfig::default(),
            lookbacks: vec![48, 96, 192, 336],
            embed_dims: vec![32, 64, 128, 256, 512],
            seed: 42,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: usize,
    pub lookback: usize,
    pub embed_dim: usize,
    pub outcome: RunOutcome,
}

/// One row per lookback (embedding fixed) and one per embedding width
/// (lookback fixed at the configured value).
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let table = gen_synthetic(&cfg.synthetic)?;
    let mut settings: Vec<(SweepAxis, usize, ModelConfig)> = Vec::new();
    for &l in &cfg.lookbacks {
        settings.push((SweepAxis::Lookback, l, ModelConfig { lookback: l, ..cfg.model.clone() }));
    }
    for &d in &cfg.embed_dims {
        settings.push((SweepAxis::EmbedDim, d, ModelConfig { embed_dim: d, ..cfg.model.clone() }));
    }
    if settings.is_empty() {
        return Err(Error::Config("sweep needs at least one lookback or embedding value".into()));
    }
    let results = run_parallel(settings, cfg.jobs, |(axis, value, model)| {
        let raw = SeriesDataset::new(
            table.values.clone(),
            table.names.clone(),
            cfg.ratios,
            model.lookback,
            model.horizon,
        )?;
        let (data, _) = MinMaxScaler::fit_dataset(&raw)?;
        let outcome = run_training(&model, &data, &cfg.train, cfg.seed)?;
        Ok(SweepRow {
            axis,
            value,
            lookback: model.lookback,
            embed_dim: model.embed_dim,
            outcome,
        })
    });
    results.into_iter().collect()
}

/// Lookback rows whose mean epoch time drops below the previous row by more
/// than `jitter` (relative). Empty when the timing is monotone.
pub fn epoch_time_regressions(rows: &[SweepRow], jitter: f64) -> Vec<(usize, usize)> {
    let mut l_rows: Vec<&SweepRow> = rows.iter().filter(|r| r.axis == SweepAxis::Lookback).collect();
    l_rows.sort_by_key(|r| r.value);
    l_rows
        .windows(2)
        .filter(|w| {
            let (a, b) = (w[0].outcome.report.mean_epoch_seconds(), w[1].outcome.report.mean_epoch_seconds());
            b < a * (1.0 - jitter)
        })
        .map(|w| (w[0].value, w[1].value))
        .collect()
}
