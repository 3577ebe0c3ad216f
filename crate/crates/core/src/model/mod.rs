//! The dual-branch time/frequency forecaster.
//!
//! Shapes, for a batch of `B` windows over `N` channels with lookback `L`,
//! horizon `τ` and embedding width `d`:
//!
//! ```text
//! x [B,N,L] ─┬─ ⊗ embed ─> F [B,N,L,d] ─ rfft_L ─ freq net (re, im) ─ irfft_L ─> R [B,N,L,d]
//!            └──────────> T [B,N,L]   ─ time net over L ─────────────────────> S [B,N,L]
//! H = R + S + (F + T)     (S and T broadcast over d)
//! y = predictor(flatten_{L,d} H) [B,N,τ]
//! ```
//!
//! Channels never mix: every channel runs through the same weights.

mod checkpoint;
mod config;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT};
pub use config::{Adjust, BranchModule, Depth, ModelConfig, PredictorModule, Sharing, Variant, VariantFlags};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::array::Array;
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::kan::{Block, KanStack, KnotGrid, Mlp};
use crate::param::{Module, Param};
use crate::spectral::{complex_linear_combine, domain_detransform, domain_transform, Spectrum};

#[derive(Debug)]
pub struct TfkanModel {
    config: ModelConfig,
    embed: Option<Param>,
    time_embed: Option<Param>,
    freq_net: Option<Block>,
    freq_net_im: Option<Block>,
    time_net: Option<Block>,
    predictor: Block,
}

/// Outputs of the dimension-adjustment step, each `[B, N, L, width]`.
pub struct Adjusted<'g> {
    pub freq: Option<Var<'g>>,
    pub time: Option<Var<'g>>,
}

/// Intermediate tensors of one forward pass.
pub struct Trace<'g> {
    pub adjusted: Adjusted<'g>,
    pub spectrum: Option<Spectrum<'g>>,
    pub freq_out: Option<Var<'g>>,
    pub time_out: Option<Var<'g>>,
    pub hidden: Var<'g>,
    pub output: Var<'g>,
}

fn build_block(
    kind: BranchModule,
    dims: &[usize],
    grid: &KnotGrid,
    prefix: &str,
    rng: &mut impl Rng,
) -> Option<Block> {
    let mut block = match kind {
        BranchModule::Off => return None,
        BranchModule::Kan => Block::Kan(KanStack::new(dims, grid, rng)),
        BranchModule::Mlp => Block::Mlp(Mlp::new(dims, rng)),
    };
    block.visit_params_mut(&mut |p| p.prefix_name(prefix));
    Some(block)
}

fn embed_param(name: &str, d: usize, rng: &mut impl Rng) -> Param {
    let uni = Uniform::new_inclusive(-1.0, 1.0);
    Param::new(name, Array::from_fn([1, d], |_| uni.sample(rng)))
}

impl TfkanModel {
    /// Builds a randomly initialized model; identical seeds give identical weights.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = KnotGrid::uniform(config.grid_size, config.spline_order)?;
        let f = config.flags;
        let (d, h, l) = (config.embed_dim, config.hidden, config.lookback);
        let freq_on = f.freq != BranchModule::Off;
        let time_on = f.time != BranchModule::Off;

        let embed = (freq_on && f.adjust.embeds_freq()).then(|| embed_param("embed", d, &mut rng));
        let time_embed = (time_on && f.adjust.embeds_time()).then(|| embed_param("time_embed", d, &mut rng));

        let fw = config.freq_width();
        let freq_dims = [fw, h, fw];
        let freq_net = build_block(f.freq, &freq_dims, &grid, "freq", &mut rng);
        let freq_net_im = match f.sharing {
            Sharing::Two => build_block(f.freq, &freq_dims, &grid, "freq_im", &mut rng),
            Sharing::Shared => None,
        };

        let time_dims: Vec<usize> = match config.depth {
            Depth::Two => vec![l, h, l],
            Depth::One => vec![l, l],
        };
        let time_net = build_block(f.time, &time_dims, &grid, "time", &mut rng);

        let pred_dims: Vec<usize> = match config.depth {
            Depth::Two => vec![config.predictor_input(), h, config.horizon],
            Depth::One => vec![config.predictor_input(), config.horizon],
        };
        let pred_kind = match f.predictor {
            PredictorModule::Kan => BranchModule::Kan,
            PredictorModule::Mlp => BranchModule::Mlp,
        };
        let predictor = build_block(pred_kind, &pred_dims, &grid, "predictor", &mut rng).expect("predictor is never off");

        Ok(Self {
            config,
            embed,
            time_embed,
            freq_net,
            freq_net_im,
            time_net,
            predictor,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn freq_net(&self) -> Option<&Block> {
        self.freq_net.as_ref()
    }

    pub fn freq_net_im(&self) -> Option<&Block> {
        self.freq_net_im.as_ref()
    }

    pub fn time_net(&self) -> Option<&Block> {
        self.time_net.as_ref()
    }

    pub fn predictor(&self) -> &Block {
        &self.predictor
    }

    pub fn freq_net_mut(&mut self) -> Option<&mut Block> {
        self.freq_net.as_mut()
    }

    pub fn freq_net_im_mut(&mut self) -> Option<&mut Block> {
        self.freq_net_im.as_mut()
    }

    pub fn time_net_mut(&mut self) -> Option<&mut Block> {
        self.time_net.as_mut()
    }

    pub fn predictor_mut(&mut self) -> &mut Block {
        &mut self.predictor
    }

    pub fn embed(&self) -> Option<&Param> {
        self.embed.as_ref()
    }

    pub fn embed_mut(&mut self) -> Option<&mut Param> {
        self.embed.as_mut()
    }

    /// Learnable scalars per component, in parameter visit order.
    pub fn param_breakdown(&self) -> Vec<(&'static str, usize)> {
        let mut out = Vec::new();
        if let Some(p) = &self.embed {
            out.push(("embed", p.numel()));
        }
        if let Some(p) = &self.time_embed {
            out.push(("time_embed", p.numel()));
        }
        if let Some(b) = &self.freq_net {
            out.push(("freq", b.param_count()));
        }
        if let Some(b) = &self.freq_net_im {
            out.push(("freq_im", b.param_count()));
        }
        if let Some(b) = &self.time_net {
            out.push(("time", b.param_count()));
        }
        out.push(("predictor", self.predictor.param_count()));
        out
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        let c = &self.config;
        if shape.len() != 3 || shape[1] != c.n_channels || shape[2] != c.lookback {
            return Err(Error::dim("model input", shape, &[0, c.n_channels, c.lookback]));
        }
        Ok(())
    }

    /// `x [B,N,L]` to the per-branch inputs: embedded (`[B,N,L,d]`) or not (`[B,N,L,1]`).
    pub fn dimension_adjust<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Adjusted<'g>> {
        self.check_input(&x.shape())?;
        let s = x.shape();
        let x4 = x.reshape([s[0], s[1], s[2], 1])?;
        let f = self.config.flags;
        let embed = |p: &Option<Param>| -> Result<Var<'g>> {
            match p {
                Some(w) => x4.matmul(g.param(w)),
                None => Ok(x4),
            }
        };
        Ok(Adjusted {
            freq: (f.freq != BranchModule::Off).then(|| embed(&self.embed)).transpose()?,
            time: (f.time != BranchModule::Off).then(|| embed(&self.time_embed)).transpose()?,
        })
    }

    /// Transform along `L`, run the frequency net over the trailing width for the
    /// real and imaginary parts, transform back.
    pub fn frequency_branch<'g>(&self, g: &'g Graph, input: Var<'g>) -> Result<(Var<'g>, Spectrum<'g>)> {
        let net = self
            .freq_net
            .as_ref()
            .ok_or_else(|| Error::contract("frequency branch is off"))?;
        let spec = domain_transform(input, 2)?;
        let re = net.forward(g, spec.re)?;
        let im = self.freq_net_im.as_ref().unwrap_or(net).forward(g, spec.im)?;
        let z = complex_linear_combine(re, im, spec.len, spec.axis)?;
        Ok((domain_detransform(&z)?, spec))
    }

    /// Run the time net along `L`; the trailing width (1 or `d`) acts as batch.
    pub fn time_branch<'g>(&self, g: &'g Graph, input: Var<'g>) -> Result<Var<'g>> {
        let net = self
            .time_net
            .as_ref()
            .ok_or_else(|| Error::contract("time branch is off"))?;
        let s = input.shape();
        if s.len() != 4 || s[2] != self.config.lookback {
            return Err(Error::dim("time branch", &s, &[0, 0, self.config.lookback, 0]));
        }
        if s[3] == 1 {
            let y = net.forward(g, input.reshape([s[0], s[1], s[2]])?)?;
            y.reshape(s)
        } else {
            let y = net.forward(g, input.swap_axes(2, 3)?)?;
            y.swap_axes(2, 3)
        }
    }

    /// `H = R + S + (F + T)` broadcast to the fused width, flattened over
    /// `(L, width)` and fed to the predictor.
    pub fn fuse_and_predict<'g>(&self, g: &'g Graph, parts: &[Var<'g>]) -> Result<(Var<'g>, Var<'g>)> {
        let first = parts.first().ok_or_else(|| Error::contract("nothing to fuse"))?;
        let s = first.shape();
        let width = self.config.fused_width();
        let target = [s[0], s[1], s[2], width];
        let mut hidden: Option<Var<'g>> = None;
        for p in parts {
            let term = if p.shape() == target {
                *p
            } else {
                p.broadcast_to(&target)?
            };
            hidden = Some(match hidden {
                Some(h) => h.add(term)?,
                None => term,
            });
        }
        let hidden = hidden.unwrap();
        let flat = hidden.reshape([s[0], s[1], s[2] * width])?;
        let y = self.predictor.forward(g, flat)?;
        Ok((hidden, y))
    }

    pub fn forward_trace<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Trace<'g>> {
        let adjusted = self.dimension_adjust(g, x)?;
        let mut parts = Vec::with_capacity(4);
        let mut spectrum = None;
        let mut freq_out = None;
        let mut time_out = None;
        if let Some(fin) = adjusted.freq {
            let (r, spec) = self.frequency_branch(g, fin)?;
            parts.push(r);
            parts.push(fin);
            spectrum = Some(spec);
            freq_out = Some(r);
        }
        if let Some(tin) = adjusted.time {
            let s = self.time_branch(g, tin)?;
            parts.push(s);
            parts.push(tin);
            time_out = Some(s);
        }
        let (hidden, output) = self.fuse_and_predict(g, &parts)?;
        Ok(Trace {
            adjusted,
            spectrum,
            freq_out,
            time_out,
            hidden,
            output,
        })
    }

    /// `[B, N, L] -> [B, N, τ]`.
    pub fn forward<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
        Ok(self.forward_trace(g, x)?.output)
    }

    /// Forward pass without gradient bookkeeping beyond a throwaway graph.
    pub fn predict(&self, x: &Array) -> Result<Array> {
        let g = Graph::new();
        let y = self.forward(&g, g.constant(x.clone()))?;
        Ok(y.value().as_ref().clone())
    }
}

impl Module for TfkanModel {
    fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param)) {
        if let Some(p) = &self.embed {
            f(p);
        }
        if let Some(p) = &self.time_embed {
            f(p);
        }
        for b in [&self.freq_net, &self.freq_net_im, &self.time_net].into_iter().flatten() {
            b.visit_params(f);
        }
        self.predictor.visit_params(f);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        if let Some(p) = &mut self.embed {
            f(p);
        }
        if let Some(p) = &mut self.time_embed {
            f(p);
        }
        for b in [&mut self.freq_net, &mut self.freq_net_im, &mut self.time_net]
            .into_iter()
            .flatten()
        {
            b.visit_params_mut(f);
        }
        self.predictor.visit_params_mut(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(variant: Variant) -> ModelConfig {
        ModelConfig {
            n_channels: 2,
            lookback: 8,
            horizon: 4,
            embed_dim: 4,
            hidden: 6,
            ..ModelConfig::default()
        }
        .with_variant(variant)
    }

    fn input(b: usize, n: usize, l: usize) -> Array {
        Array::from_fn([b, n, l], |i| ((i as f64) * 0.37).sin() * 0.5 + 0.5)
    }

    #[test]
    fn end_to_end_shape() {
        let m = TfkanModel::new(tiny(Variant::Full), 1).unwrap();
        let g = Graph::new();
        let y = m.forward(&g, g.constant(Array::zeros([2, 2, 8]))).unwrap();
        assert_eq!(y.shape(), vec![2, 2, 4]);
        let cfg = ModelConfig {
            n_channels: 3,
            ..tiny(Variant::Full)
        };
        let m = TfkanModel::new(cfg, 1).unwrap();
        assert_eq!(m.predict(&input(2, 3, 8)).unwrap().shape(), &[2, 3, 4]);
    }

    #[test]
    fn every_variant_runs_and_is_finite() {
        for v in Variant::ALL {
            let m = TfkanModel::new(tiny(v), 5).unwrap();
            for b in [1, 3] {
                let y = m.predict(&input(b, 2, 8)).unwrap();
                assert_eq!(y.shape(), &[b, 2, 4], "{v}");
                assert!(y.is_finite(), "{v}");
            }
        }
    }

    #[test]
    fn rejects_wrong_input_shape() {
        let m = TfkanModel::new(tiny(Variant::Full), 1).unwrap();
        assert!(matches!(m.predict(&Array::zeros([1, 2, 7])), Err(Error::Dimension { .. })));
        assert!(m.predict(&Array::zeros([2, 8])).is_err());
    }

    #[test]
    fn embedding_is_an_outer_product() {
        let mut m = TfkanModel::new(tiny(Variant::Full), 1).unwrap();
        *m.embed_mut().unwrap().value_mut() = Array::ones([1, 4]);
        let g = Graph::new();
        let x = input(1, 2, 8);
        let a = m.dimension_adjust(&g, g.constant(x.clone())).unwrap();
        let f = a.freq.unwrap().value();
        assert_eq!(f.shape(), &[1, 2, 8, 4]);
        for (i, v) in f.data().iter().enumerate() {
            assert_eq!(*v, x.data()[i / 4]);
        }
        assert_eq!(a.time.unwrap().value().data(), x.data());

        let cfg = ModelConfig {
            embed_dim: 1,
            ..tiny(Variant::Full)
        };
        let mut m = TfkanModel::new(cfg, 1).unwrap();
        *m.embed_mut().unwrap().value_mut() = Array::full([1, 1], 2.0);
        let g = Graph::new();
        let f = m.dimension_adjust(&g, g.constant(x.clone())).unwrap().freq.unwrap().value();
        for (a, b) in f.data().iter().zip(x.data()) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    fn zero_block(b: &mut Block) {
        b.visit_params_mut(&mut |p| p.value_mut().data_mut().fill(0.0));
    }

    #[test]
    fn zero_branches_leave_the_skip_connection() {
        let mut m = TfkanModel::new(tiny(Variant::Full), 2).unwrap();
        zero_block(m.freq_net_mut().unwrap());
        zero_block(m.time_net_mut().unwrap());
        let g = Graph::new();
        let t = m.forward_trace(&g, g.constant(input(2, 2, 8))).unwrap();
        assert!(t.freq_out.unwrap().value().data().iter().all(|v| v.abs() < 1e-15));
        assert!(t.time_out.unwrap().value().data().iter().all(|&v| v == 0.0));
        let f = t.adjusted.freq.unwrap().value();
        let tt = t.adjusted.time.unwrap().value();
        let h = t.hidden.value();
        for (i, v) in h.data().iter().enumerate() {
            let bias = f.data()[i] + tt.data()[i / 4];
            assert!((v - bias).abs() < 1e-15);
        }
    }

    #[test]
    fn flatten_is_temporal_major() {
        // with a linear one-layer predictor picking element (l, j), the output
        // equals H[b, n, l, j]
        let cfg = ModelConfig {
            depth: Depth::One,
            horizon: 1,
            ..tiny(Variant::MlpPred)
        };
        let mut m = TfkanModel::new(cfg, 3).unwrap();
        let (l, j) = (5, 2);
        let Block::Mlp(mlp) = m.predictor_mut() else { unreachable!() };
        let mut w = Array::zeros([32, 1]);
        w.data_mut()[l * 4 + j] = 1.0;
        let lin = crate::kan::Linear::from_parts(w, Array::zeros([1])).unwrap();
        *mlp = Mlp::from_layers(vec![lin]).unwrap();
        let g = Graph::new();
        let t = m.forward_trace(&g, g.constant(input(2, 2, 8))).unwrap();
        let h = t.hidden.value();
        let y = t.output.value();
        for bn in 0..4 {
            assert!((y.data()[bn] - h.data()[bn * 32 + l * 4 + j]).abs() < 1e-14);
        }
    }

    #[test]
    fn shared_and_two_agree_with_tied_weights() {
        let shared = TfkanModel::new(tiny(Variant::Full), 11).unwrap();
        let mut two = TfkanModel::new(tiny(Variant::TwoFreqKan), 11).unwrap();
        let mut values = shared.snapshot();
        // duplicate the frequency net's tensors for the imaginary copy
        let n_freq = shared.freq_net().unwrap().params().len();
        let freq: Vec<Array> = values[1..1 + n_freq].to_vec();
        for (k, v) in freq.into_iter().enumerate() {
            values.insert(1 + n_freq + k, v);
        }
        two.restore(&values);
        let x = input(2, 2, 8);
        let a = shared.predict(&x).unwrap();
        let b = two.predict(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn breakdown_sums_to_count() {
        for v in Variant::ALL {
            let m = TfkanModel::new(tiny(v), 0).unwrap();
            let total: usize = m.param_breakdown().iter().map(|(_, n)| n).sum();
            assert_eq!(total, m.param_count(), "{v}");
        }
    }

    #[test]
    fn depth_one_uses_single_layers() {
        let cfg = ModelConfig {
            depth: Depth::One,
            ..tiny(Variant::Full)
        };
        let m = TfkanModel::new(cfg, 0).unwrap();
        let Block::Kan(t) = m.time_net().unwrap() else { panic!() };
        assert_eq!(t.layers().len(), 1);
        let Block::Kan(p) = m.predictor() else { panic!() };
        assert_eq!(p.layers().len(), 1);
        assert_eq!(m.predict(&input(1, 2, 8)).unwrap().shape(), &[1, 2, 4]);
    }

    #[test]
    fn same_seed_same_weights() {
        let a = TfkanModel::new(tiny(Variant::Full), 9).unwrap().snapshot();
        let b = TfkanModel::new(tiny(Variant::Full), 9).unwrap().snapshot();
        let c = TfkanModel::new(tiny(Variant::Full), 10).unwrap().snapshot();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
