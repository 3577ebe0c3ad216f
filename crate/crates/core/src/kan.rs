//! Kolmogorov-Arnold layers on a uniform B-spline grid, plus the ReLU MLP
//! used as a drop-in replacement in ablations.
//!
//! A layer computes `SiLU(x) · W_base + Σ_i (scaler ⊙ c_i) · B_i(x)`, where the
//! sum runs over the `s + k` degree-`k` B-spline bases of the shared knot grid
//! and the contraction is over the input dimension.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::array::Array;
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::param::{Module, Param};

/// Uniform knot vector: `s` interior intervals partitioning `[-1, 1]`, extended
/// by `k` knots on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    grid_size: usize,
    order: usize,
    knots: Vec<f64>,
}

impl KnotGrid {
    pub fn uniform(grid_size: usize, order: usize) -> Result<Self> {
        if grid_size == 0 {
            return Err(Error::contract("grid size must be positive"));
        }
        let h = 2.0 / grid_size as f64;
        let k = order as isize;
        let knots = (-k..=grid_size as isize + k)
            .map(|i| -1.0 + i as f64 * h)
            .collect();
        Ok(Self {
            grid_size,
            order,
            knots,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of degree-`k` basis functions, `s + k`.
    pub fn basis_count(&self) -> usize {
        self.grid_size + self.order
    }

    /// Support `[t_i, t_{i+k+1}]` of basis `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + self.order + 1])
    }

    /// Evaluates every basis at `x` into `out` (length `s + k`) by the Cox-de Boor
    /// recursion. `work` must hold at least `s + 2k` values. If `deriv` is given,
    /// it receives `dB_i/dx`.
    pub fn eval_into(&self, x: f64, work: &mut [f64], out: &mut [f64], mut deriv: Option<&mut [f64]>) {
        let t = &self.knots;
        let n0 = t.len() - 1;
        let k = self.order;
        for i in 0..n0 {
            work[i] = if x >= t[i] && x < t[i + 1] { 1.0 } else { 0.0 };
        }
        for d in 1..=k {
            if d == k {
                if let Some(der) = deriv.as_deref_mut() {
                    let kf = k as f64;
                    for i in 0..n0 - k {
                        der[i] = kf / (t[i + k] - t[i]) * work[i]
                            - kf / (t[i + k + 1] - t[i + 1]) * work[i + 1];
                    }
                }
            }
            for i in 0..n0 - d {
                let left = (x - t[i]) / (t[i + d] - t[i]);
                let right = (t[i + d + 1] - x) / (t[i + d + 1] - t[i + 1]);
                work[i] = left * work[i] + right * work[i + 1];
            }
        }
        if k == 0 {
            if let Some(der) = deriv {
                der[..n0].fill(0.0);
            }
        }
        out[..n0 - k].copy_from_slice(&work[..n0 - k]);
    }

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.knots.len() - 1]
    }
}

/// Basis values for every element of `x`, shape `[.., s + k]`.
pub fn bspline_basis(x: &Array, grid: &KnotGrid) -> Array {
    let nb = grid.basis_count();
    let mut out = vec![0.0; x.len() * nb];
    let mut work = grid.scratch();
    for (v, row) in x.data().iter().zip(out.chunks_exact_mut(nb)) {
        grid.eval_into(*v, &mut work, row, None);
    }
    let mut shape = x.shape().to_vec();
    shape.push(nb);
    Array::new(shape, out).unwrap()
}

/// Derivative of every basis with respect to its argument, shape `[.., s + k]`.
/// Zero for order 0 (piecewise-constant bases).
pub fn bspline_basis_derivative(x: &Array, grid: &KnotGrid) -> Array {
    let nb = grid.basis_count();
    let mut out = vec![0.0; x.len() * nb];
    let mut basis = vec![0.0; nb];
    let mut work = grid.scratch();
    if grid.order() > 0 {
        for (v, row) in x.data().iter().zip(out.chunks_exact_mut(nb)) {
            grid.eval_into(*v, &mut work, &mut basis, Some(row));
        }
    }
    let mut shape = x.shape().to_vec();
    shape.push(nb);
    Array::new(shape, out).unwrap()
}

/// Differentiable basis expansion `[.., n] -> [.., n, s + k]`.
pub fn bspline_basis_var<'g>(x: Var<'g>, grid: &KnotGrid) -> Var<'g> {
    let out = bspline_basis(&x.value(), grid);
    let grid = grid.clone();
    x.graph().custom(&[x], out, move |a| {
        if !a.needs[0] {
            return vec![None];
        }
        let nb = grid.basis_count();
        let d = bspline_basis_derivative(a.inputs[0], &grid);
        let gx: Vec<f64> = a
            .grad
            .data()
            .chunks_exact(nb)
            .zip(d.data().chunks_exact(nb))
            .map(|(g, dv)| g.iter().zip(dv).map(|(a, b)| a * b).sum())
            .collect();
        vec![Some(Array::new(a.inputs[0].shape().to_vec(), gx).unwrap())]
    })
}

/// Folds `spline [in, out, nb]` and `scaler [in, out]` into the matmul-ready
/// `[in * nb, out]` layout: `W[i * nb + j, o] = spline[i, o, j] * scaler[i, o]`.
fn scaled_spline_weights<'g>(spline: Var<'g>, scaler: Var<'g>) -> Var<'g> {
    let w = spline.value();
    let s = scaler.value();
    let (n_in, n_out, nb) = (w.shape()[0], w.shape()[1], w.shape()[2]);
    let mut out = vec![0.0; n_in * nb * n_out];
    for i in 0..n_in {
        for o in 0..n_out {
            let sc = s.data()[i * n_out + o];
            for j in 0..nb {
                out[(i * nb + j) * n_out + o] = w.data()[(i * n_out + o) * nb + j] * sc;
            }
        }
    }
    let out = Array::new(vec![n_in * nb, n_out], out).unwrap();
    spline.graph().custom(&[spline, scaler], out, move |a| {
        let (w, s, g) = (a.inputs[0].data(), a.inputs[1].data(), a.grad.data());
        let mut gw = vec![0.0; w.len()];
        let mut gs = vec![0.0; s.len()];
        for i in 0..n_in {
            for o in 0..n_out {
                let sc = s[i * n_out + o];
                let mut acc = 0.0;
                for j in 0..nb {
                    let gv = g[(i * nb + j) * n_out + o];
                    gw[(i * n_out + o) * nb + j] = gv * sc;
                    acc += gv * w[(i * n_out + o) * nb + j];
                }
                gs[i * n_out + o] = acc;
            }
        }
        vec![
            a.needs[0].then(|| Array::new(a.inputs[0].shape().to_vec(), gw).unwrap()),
            a.needs[1].then(|| Array::new(a.inputs[1].shape().to_vec(), gs).unwrap()),
        ]
    })
}

fn flatten_rows<'g>(x: Var<'g>, width: usize, op: &'static str) -> Result<(Var<'g>, Vec<usize>)> {
    let shape = x.shape();
    if shape.last() != Some(&width) {
        return Err(Error::dim(op, &shape, &[width]));
    }
    let rows = shape.iter().product::<usize>() / width.max(1);
    Ok((x.reshape([rows, width])?, shape))
}

fn restore_rows<'g>(y: Var<'g>, mut shape: Vec<usize>, width: usize) -> Result<Var<'g>> {
    *shape.last_mut().unwrap() = width;
    y.reshape(shape)
}

#[derive(Debug)]
pub struct KanLayer {
    in_dim: usize,
    out_dim: usize,
    grid: KnotGrid,
    base: Param,
    spline: Param,
    scaler: Param,
}

impl KanLayer {
    /// Random init: base weights uniform in `±sqrt(6 / in)`, spline
    /// coefficients normal with std `0.1 / sqrt(in)`, scaler ones.
    pub fn new(in_dim: usize, out_dim: usize, grid: KnotGrid, rng: &mut impl Rng) -> Self {
        let nb = grid.basis_count();
        let bound = (6.0 / in_dim as f64).sqrt();
        let uni = Uniform::new_inclusive(-bound, bound);
        let normal = Normal::new(0.0, 0.1 / (in_dim as f64).sqrt()).unwrap();
        let base = Array::from_fn([in_dim, out_dim], |_| uni.sample(rng));
        let spline = Array::from_fn([in_dim, out_dim, nb], |_| normal.sample(rng));
        Self::from_parts(grid, base, spline, Array::ones([in_dim, out_dim])).unwrap()
    }

    pub fn zeros(in_dim: usize, out_dim: usize, grid: KnotGrid) -> Self {
        let nb = grid.basis_count();
        Self::from_parts(
            grid,
            Array::zeros([in_dim, out_dim]),
            Array::zeros([in_dim, out_dim, nb]),
            Array::zeros([in_dim, out_dim]),
        )
        .unwrap()
    }

    pub fn from_parts(grid: KnotGrid, base: Array, spline: Array, scaler: Array) -> Result<Self> {
        let [in_dim, out_dim] = base.shape() else {
            return Err(Error::dim("KanLayer base", base.shape(), &[0, 0]));
        };
        let (in_dim, out_dim) = (*in_dim, *out_dim);
        let want = [in_dim, out_dim, grid.basis_count()];
        if spline.shape() != want {
            return Err(Error::dim("KanLayer spline", spline.shape(), &want));
        }
        if scaler.shape() != base.shape() {
            return Err(Error::dim("KanLayer scaler", scaler.shape(), base.shape()));
        }
        Ok(Self {
            in_dim,
            out_dim,
            grid,
            base: Param::new("base", base),
            spline: Param::new("spline", spline),
            scaler: Param::new("scaler", scaler),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn base(&self) -> &Param {
        &self.base
    }

    pub fn spline(&self) -> &Param {
        &self.spline
    }

    pub fn scaler(&self) -> &Param {
        &self.scaler
    }

    pub fn base_mut(&mut self) -> &mut Array {
        self.base.value_mut()
    }

    pub fn spline_mut(&mut self) -> &mut Array {
        self.spline.value_mut()
    }

    pub fn scaler_mut(&mut self) -> &mut Array {
        self.scaler.value_mut()
    }

    /// Base (SiLU) path only.
    pub fn forward_base<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
        let (rows, shape) = flatten_rows(x, self.in_dim, "kan layer")?;
        let z = rows.silu().matmul(g.param(&self.base))?;
        restore_rows(z, shape, self.out_dim)
    }

    /// B-spline path only.
    pub fn forward_spline<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
        let (rows, shape) = flatten_rows(x, self.in_dim, "kan layer")?;
        let z = self.spline_rows(g, rows)?;
        restore_rows(z, shape, self.out_dim)
    }

    fn spline_rows<'g>(&self, g: &'g Graph, rows: Var<'g>) -> Result<Var<'g>> {
        let n = rows.shape()[0];
        let basis = bspline_basis_var(rows, &self.grid).reshape([n, self.in_dim * self.grid.basis_count()])?;
        let w = scaled_spline_weights(g.param(&self.spline), g.param(&self.scaler));
        basis.matmul(w)
    }

    /// `[.., in] -> [.., out]`, the sum of the base and spline paths.
    pub fn forward<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
        let (rows, shape) = flatten_rows(x, self.in_dim, "kan layer")?;
        let base = rows.silu().matmul(g.param(&self.base))?;
        let spline = self.spline_rows(g, rows)?;
        restore_rows(base.add(spline)?, shape, self.out_dim)
    }
}

impl Module for KanLayer {
    fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param)) {
        f(&self.base);
        f(&self.spline);
        f(&self.scaler);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.base);
        f(&mut self.spline);
        f(&mut self.scaler);
    }
}

/// Sequential KAN layers, `dims[0] -> dims[1] -> ... -> dims[n]`.
#[derive(Debug)]
pub struct KanStack {
    layers: Vec<KanLayer>,
}

impl KanStack {
    pub fn new(dims: &[usize], grid: &KnotGrid, rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "a stack needs at least one layer");
        let layers = dims
            .windows(2)
            .map(|w| KanLayer::new(w[0], w[1], grid.clone(), rng))
            .collect();
        Self::from_layers(layers).unwrap()
    }

    pub fn from_layers(mut layers: Vec<KanLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim != pair[1].in_dim {
                return Err(Error::dim(
                    "kan stack",
                    &[pair[0].in_dim, pair[0].out_dim],
                    &[pair[1].in_dim, pair[1].out_dim],
                ));
            }
        }
        for (i, l) in layers.iter_mut().enumerate() {
            l.visit_params_mut(&mut |p| p.prefix_name(&i.to_string()));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [KanLayer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn forward<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
        self.layers.iter().try_fold(x, |h, l| l.forward(g, h))
    }
}

impl Module for KanStack {
    fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param)) {
        for l in &self.layers {
            l.visit_params(f);
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        for l in &mut self.layers {
            l.visit_params_mut(f);
        }
    }
}

#[derive(Debug)]
pub struct Linear {
    weight: Param,
    bias: Param,
}

impl Linear {
    /// Uniform init in `±1/sqrt(in)` for weight and bias.
    pub fn new(in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let uni = Uniform::new_inclusive(-bound, bound);
        let w = Array::from_fn([in_dim, out_dim], |_| uni.sample(rng));
        let b = Array::from_fn([out_dim], |_| uni.sample(rng));
        Self::from_parts(w, b).unwrap()
    }

    pub fn from_parts(weight: Array, bias: Array) -> Result<Self> {
        if weight.ndim() != 2 || bias.shape() != [weight.shape()[1]] {
            return Err(Error::dim("linear", weight.shape(), bias.shape()));
        }
        Ok(Self {
            weight: Param::new("weight", weight),
            bias: Param::new("bias", bias),
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weight.value().shape()[0]
    }

    pub fn out_dim(&self) -> usize {
        self.weight.value().shape()[1]
    }

    pub fn weight(&self) -> &Param {
        &self.weight
    }

    pub fn bias(&self) -> &Param {
        &self.bias
    }

    fn forward_rows<'g>(&self, g: &'g Graph, rows: Var<'g>) -> Result<Var<'g>> {
        let xw = rows.matmul(g.param(&self.weight))?;
        let b = g.param(&self.bias).broadcast_to(&xw.shape())?;
        xw.add(b)
    }
}

impl Module for Linear {
    fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param)) {
        f(&self.weight);
        f(&self.bias);
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        f(&mut self.weight);
        f(&mut self.bias);
    }
}

/// Affine layers with ReLU between them.
#[derive(Debug)]
pub struct Mlp {
    layers: Vec<Linear>,
}

impl Mlp {
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Self::from_layers(layers).unwrap()
    }

    pub fn two_layer(in_dim: usize, hidden: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        Self::new(&[in_dim, hidden, out_dim], rng)
    }

    pub fn from_layers(mut layers: Vec<Linear>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim(
                    "mlp",
                    &[pair[0].in_dim(), pair[0].out_dim()],
                    &[pair[1].in_dim(), pair[1].out_dim()],
                ));
            }
        }
        for (i, l) in layers.iter_mut().enumerate() {
            l.visit_params_mut(&mut |p| p.prefix_name(&i.to_string()));
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn forward<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
        let (mut h, shape) = flatten_rows(x, self.in_dim(), "mlp")?;
        for (i, l) in self.layers.iter().enumerate() {
            if i > 0 {
                h = h.relu();
            }
            h = l.forward_rows(g, h)?;
        }
        restore_rows(h, shape, self.out_dim())
    }
}

impl Module for Mlp {
    fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param)) {
        for l in &self.layers {
            l.visit_params(f);
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        for l in &mut self.layers {
            l.visit_params_mut(f);
        }
    }
}

/// A learnable univariate-function block: either a KAN stack or its MLP replacement.
#[derive(Debug)]
pub enum Block {
    Kan(KanStack),
    Mlp(Mlp),
}

impl Block {
    pub fn forward<'g>(&self, g: &'g Graph, x: Var<'g>) -> Result<Var<'g>> {
        match self {
            Block::Kan(k) => k.forward(g, x),
            Block::Mlp(m) => m.forward(g, x),
        }
    }

    pub fn in_dim(&self) -> usize {
        match self {
            Block::Kan(k) => k.in_dim(),
            Block::Mlp(m) => m.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Block::Kan(k) => k.out_dim(),
            Block::Mlp(m) => m.out_dim(),
        }
    }
}

impl Module for Block {
    fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param)) {
        match self {
            Block::Kan(k) => k.visit_params(f),
            Block::Mlp(m) => m.visit_params(f),
        }
    }

    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
        match self {
            Block::Kan(k) => k.visit_params_mut(f),
            Block::Mlp(m) => m.visit_params_mut(f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid21() -> KnotGrid {
        KnotGrid::uniform(2, 1).unwrap()
    }

    fn basis_at(x: f64, grid: &KnotGrid) -> Vec<f64> {
        bspline_basis(&Array::vector(&[x]), grid).into_data()
    }

    #[test]
    fn knot_layout() {
        let g = grid21();
        assert_eq!(g.knots(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert_eq!(g.basis_count(), 3);
        let g = KnotGrid::uniform(5, 3).unwrap();
        assert_eq!(g.knots().len(), 5 + 2 * 3 + 1);
        assert!((g.knots()[3] + 1.0).abs() < 1e-15);
        assert!((g.knots()[8] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_tents() {
        let g = grid21();
        assert_eq!(basis_at(0.0, &g), vec![0.0, 1.0, 0.0]);
        assert_eq!(basis_at(0.5, &g), vec![0.0, 0.5, 0.5]);
        assert!((basis_at(-1.0, &g).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = bspline_basis_derivative(&Array::vector(&[0.5]), &g);
        assert_eq!(d.data(), &[0.0, -1.0, 1.0]);
    }

    #[test]
    fn outside_extended_span_is_zero() {
        let g = grid21();
        assert_eq!(basis_at(2.5, &g), vec![0.0; 3]);
        assert_eq!(basis_at(-7.0, &g), vec![0.0; 3]);
        // between the last interior and last extended knot the tail decays linearly
        let tail = basis_at(1.5, &g);
        assert_eq!(tail, vec![0.0, 0.0, 0.5]);
    }

    #[test]
    fn order_zero_derivative_is_zero() {
        let g = KnotGrid::uniform(3, 0).unwrap();
        let d = bspline_basis_derivative(&Array::vector(&[0.1, 0.9]), &g);
        assert!(d.data().iter().all(|&v| v == 0.0));
        assert_eq!(basis_at(0.1, &g).iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn param_count_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = KanLayer::new(2, 3, grid21(), &mut rng);
        assert_eq!(l.param_count(), 30);
        let m = Mlp::two_layer(2, 4, 1, &mut rng);
        assert_eq!(m.param_count(), 17);
    }

    #[test]
    fn zero_layer_gives_zero() {
        let l = KanLayer::zeros(3, 2, grid21());
        let g = Graph::new();
        let x = g.constant(Array::from_fn([4, 3], |i| i as f64 * 0.3 - 1.0));
        let y = l.forward(&g, x).unwrap().value();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_base_reproduces_silu() {
        let mut base = Array::zeros([2, 2]);
        base.data_mut()[0] = 1.0;
        base.data_mut()[3] = 1.0;
        let l = KanLayer::from_parts(grid21(), base, Array::zeros([2, 2, 3]), Array::ones([2, 2])).unwrap();
        let g = Graph::new();
        let xs = [-1.5, 0.2, 0.7, 3.0];
        let y = l.forward(&g, g.constant(Array::new([2, 2], xs.to_vec()).unwrap())).unwrap();
        for (o, x) in y.value().data().iter().zip(xs) {
            assert!((o - crate::autodiff::silu(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_input_hits_only_the_central_basis() {
        // SiLU(0) = 0, so the output at x = 0 is the spline path at the middle tent.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let l = KanLayer::new(1, 2, grid21(), &mut rng);
        let g = Graph::new();
        let y = l.forward(&g, g.constant(Array::zeros([1, 1]))).unwrap().value();
        let w = l.spline().value().data();
        assert!((y.data()[0] - w[1]).abs() < 1e-15);
        assert!((y.data()[1] - w[4]).abs() < 1e-15);
    }

    #[test]
    fn stack_rejects_unchained_dims() {
        let a = KanLayer::zeros(2, 3, grid21());
        let b = KanLayer::zeros(4, 1, grid21());
        assert!(KanStack::from_layers(vec![a, b]).is_err());
    }

    #[test]
    fn wrong_trailing_extent_errors() {
        let l = KanLayer::zeros(3, 2, grid21());
        let g = Graph::new();
        let x = g.constant(Array::zeros([4, 2]));
        assert!(matches!(l.forward(&g, x), Err(Error::Dimension { .. })));
    }

    #[test]
    fn mlp_relu_blocks_negative_hidden() {
        let l1 = Linear::from_parts(Array::matrix(&[&[1.0]]), Array::vector(&[0.0])).unwrap();
        let l2 = Linear::from_parts(Array::matrix(&[&[1.0]]), Array::vector(&[0.0])).unwrap();
        let m = Mlp::from_layers(vec![l1, l2]).unwrap();
        let g = Graph::new();
        let y = m.forward(&g, g.constant(Array::matrix(&[&[-1.0], &[2.0]]))).unwrap();
        assert_eq!(y.value().data(), &[0.0, 2.0]);
    }
}
