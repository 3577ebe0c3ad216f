//! Minimal reverse-mode automatic differentiation.
//!
//! A [`Graph`] is a tape: nodes are appended as operations run, so node ids are
//! already a topological order and [`Var::backward`] walks them in reverse.
//! A graph lives for one forward/backward pass and is then dropped.
//!
//! ```
//! use tfkan::{Array, Graph};
//!
//! let g = Graph::new();
//! let x = g.leaf(Array::vector(&[3.0]));
//! let y = x.mul(x).unwrap().sum();
//! let grads = y.backward().unwrap();
//! assert_eq!(grads.wrt(x).unwrap().data(), &[6.0]);
//! ```

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use crate::array::{gemm, numel, Array};
use crate::error::{Error, Result};
use crate::param::{Param, ParamId};

/// Arguments handed to a backward rule.
pub struct BackwardArgs<'a> {
    /// Gradient of the root with respect to this node's output.
    pub grad: &'a Array,
    /// Values of the parent nodes, in the order they were passed.
    pub inputs: &'a [&'a Array],
    /// This node's forward value.
    pub output: &'a Array,
    /// Whether each parent needs a gradient. Rules may return `None` where false.
    pub needs: &'a [bool],
}

type BackwardFn = dyn Fn(&BackwardArgs<'_>) -> Vec<Option<Array>>;

struct Node {
    value: Arc<Array>,
    parents: Vec<usize>,
    backward: Option<Box<BackwardFn>>,
    requires_grad: bool,
}

#[derive(Default)]
pub struct Graph {
    nodes: RefCell<Vec<Node>>,
    bound: RefCell<HashMap<ParamId, usize>>,
}

/// Handle to a node of a [`Graph`].
#[derive(Clone, Copy)]
pub struct Var<'g> {
    graph: &'g Graph,
    id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.shape())
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Arc<Array>, parents: Vec<usize>, backward: Option<Box<BackwardFn>>) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let requires_grad = backward.is_some() && parents.iter().any(|&p| nodes[p].requires_grad);
        let backward = if requires_grad { backward } else { None };
        nodes.push(Node {
            value,
            parents,
            backward,
            requires_grad,
        });
        Var {
            graph: self,
            id: nodes.len() - 1,
        }
    }

    fn push_leaf(&self, value: Arc<Array>, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            parents: Vec::new(),
            backward: None,
            requires_grad,
        });
        Var {
            graph: self,
            id: nodes.len() - 1,
        }
    }

    /// Input that receives no gradient.
    pub fn constant(&self, value: Array) -> Var<'_> {
        self.push_leaf(Arc::new(value), false)
    }

    /// Free leaf that receives a gradient.
    pub fn leaf(&self, value: Array) -> Var<'_> {
        self.push_leaf(Arc::new(value), true)
    }

    /// Binds a parameter as a gradient-receiving leaf. Binding the same
    /// parameter twice returns the same node, so shared weights accumulate.
    pub fn param(&self, p: &Param) -> Var<'_> {
        if let Some(&id) = self.bound.borrow().get(&p.id()) {
            return Var { graph: self, id };
        }
        let v = self.push_leaf(p.shared(), true);
        self.bound.borrow_mut().insert(p.id(), v.id);
        v
    }

    /// Records a custom operation. `backward` maps the output gradient to one
    /// gradient per parent (same shape as that parent's value).
    pub fn custom<'g>(
        &'g self,
        parents: &[Var<'g>],
        value: Array,
        backward: impl Fn(&BackwardArgs<'_>) -> Vec<Option<Array>> + 'static,
    ) -> Var<'g> {
        self.push(
            Arc::new(value),
            parents.iter().map(|p| p.id).collect(),
            Some(Box::new(backward)),
        )
    }

    pub fn concat<'g>(&'g self, parts: &[Var<'g>], axis: usize) -> Result<Var<'g>> {
        let values: Vec<Arc<Array>> = parts.iter().map(|p| p.value()).collect();
        let refs: Vec<&Array> = values.iter().map(|v| v.as_ref()).collect();
        let out = Array::concat(&refs, axis)?;
        let extents: Vec<usize> = refs.iter().map(|a| a.shape()[axis]).collect();
        Ok(self.custom(parts, out, move |a| {
            let mut start = 0;
            extents
                .iter()
                .zip(a.needs)
                .map(|(&w, &need)| {
                    let s = start;
                    start += w;
                    need.then(|| a.grad.slice_axis(axis, s, s + w).unwrap())
                })
                .collect()
        }))
    }
}

impl<'g> Var<'g> {
    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Arc<Array> {
        Arc::clone(&self.graph.nodes.borrow()[self.id].value)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.graph.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn requires_grad(&self) -> bool {
        self.graph.nodes.borrow()[self.id].requires_grad
    }

    fn unary(self, value: Array, backward: impl Fn(&BackwardArgs<'_>) -> Array + 'static) -> Var<'g> {
        self.graph
            .custom(&[self], value, move |a| vec![Some(backward(a))])
    }

    pub fn add(self, rhs: Var<'g>) -> Result<Var<'g>> {
        let out = self.value().zip_map(&rhs.value(), |a, b| a + b)?;
        Ok(self.graph.custom(&[self, rhs], out, |a| {
            vec![
                a.needs[0].then(|| a.grad.clone()),
                a.needs[1].then(|| a.grad.clone()),
            ]
        }))
    }

    pub fn sub(self, rhs: Var<'g>) -> Result<Var<'g>> {
        let out = self.value().zip_map(&rhs.value(), |a, b| a - b)?;
        Ok(self.graph.custom(&[self, rhs], out, |a| {
            vec![
                a.needs[0].then(|| a.grad.clone()),
                a.needs[1].then(|| a.grad.map(|g| -g)),
            ]
        }))
    }

    pub fn mul(self, rhs: Var<'g>) -> Result<Var<'g>> {
        let out = self.value().zip_map(&rhs.value(), |a, b| a * b)?;
        Ok(self.graph.custom(&[self, rhs], out, |a| {
            vec![
                a.needs[0].then(|| a.grad.zip_map(a.inputs[1], |g, y| g * y).unwrap()),
                a.needs[1].then(|| a.grad.zip_map(a.inputs[0], |g, x| g * x).unwrap()),
            ]
        }))
    }

    pub fn scale(self, c: f64) -> Var<'g> {
        let out = self.value().map(|v| v * c);
        self.unary(out, move |a| a.grad.map(|g| g * c))
    }

    pub fn square(self) -> Var<'g> {
        let out = self.value().map(|v| v * v);
        self.unary(out, |a| a.grad.zip_map(a.inputs[0], |g, x| 2.0 * g * x).unwrap())
    }

    pub fn silu(self) -> Var<'g> {
        let out = self.value().map(silu);
        self.unary(out, |a| a.grad.zip_map(a.inputs[0], |g, x| g * silu_grad(x)).unwrap())
    }

    pub fn relu(self) -> Var<'g> {
        let out = self.value().map(|v| v.max(0.0));
        self.unary(out, |a| {
            a.grad
                .zip_map(a.inputs[0], |g, x| if x > 0.0 { g } else { 0.0 })
                .unwrap()
        })
    }

    /// Sum of all elements, shape `[1]`.
    pub fn sum(self) -> Var<'g> {
        let out = Array::scalar(self.value().sum());
        self.unary(out, |a| Array::full(a.inputs[0].shape(), a.grad.item()))
    }

    pub fn mean(self) -> Var<'g> {
        let v = self.value();
        let n = v.len().max(1) as f64;
        let out = Array::scalar(v.sum() / n);
        self.unary(out, move |a| Array::full(a.inputs[0].shape(), a.grad.item() / n))
    }

    pub fn reshape(self, shape: impl Into<Vec<usize>>) -> Result<Var<'g>> {
        let out = self.value().reshape(shape)?;
        Ok(self.unary(out, |a| a.grad.clone().with_shape(a.inputs[0].shape().to_vec())))
    }

    pub fn swap_axes(self, i: usize, j: usize) -> Result<Var<'g>> {
        let out = self.value().swap_axes(i, j)?;
        Ok(self.unary(out, move |a| a.grad.swap_axes(i, j).unwrap()))
    }

    pub fn slice_axis(self, axis: usize, start: usize, end: usize) -> Result<Var<'g>> {
        let out = self.value().slice_axis(axis, start, end)?;
        Ok(self.unary(out, move |a| {
            let shape = a.inputs[0].shape();
            let (outer, extent, inner) = Array::axis_split(shape, axis);
            let mut g = vec![0.0; numel(shape)];
            let w = end - start;
            let gd = a.grad.data();
            for o in 0..outer {
                let dst = o * extent * inner + start * inner;
                g[dst..dst + w * inner].copy_from_slice(&gd[o * w * inner..(o + 1) * w * inner]);
            }
            Array::new(shape.to_vec(), g).unwrap()
        }))
    }

    pub fn broadcast_to(self, target: &[usize]) -> Result<Var<'g>> {
        let out = self.value().broadcast_to(target)?;
        Ok(self.unary(out, |a| a.grad.sum_to_shape(a.inputs[0].shape()).unwrap()))
    }

    /// `[.., m, p] x [p, q] -> [.., m, q]`.
    pub fn matmul(self, rhs: Var<'g>) -> Result<Var<'g>> {
        let out = self.value().matmul(&rhs.value())?;
        Ok(self.graph.custom(&[self, rhs], out, |a| {
            let (x, w) = (a.inputs[0], a.inputs[1]);
            let (rows, p) = x.rows_cols();
            let q = w.shape()[1];
            let g = a.grad.data();
            let gx = a.needs[0].then(|| {
                let mut buf = vec![0.0; rows * p];
                gemm(rows, q, p, g, q, 1, w.data(), 1, q, &mut buf);
                Array::new(x.shape().to_vec(), buf).unwrap()
            });
            let gw = a.needs[1].then(|| {
                let mut buf = vec![0.0; p * q];
                gemm(p, rows, q, x.data(), 1, p, g, q, 1, &mut buf);
                Array::new(vec![p, q], buf).unwrap()
            });
            vec![gx, gw]
        }))
    }

    /// Reverse pass from a scalar root. Gradients of shared nodes accumulate by addition.
    pub fn backward(self) -> Result<Gradients> {
        let nodes = self.graph.nodes.borrow();
        let root = &nodes[self.id];
        if root.value.len() != 1 {
            return Err(Error::contract(format!(
                "backward() needs a scalar root, got shape {:?}",
                root.value.shape()
            )));
        }
        let mut grads: Vec<Option<Array>> = (0..nodes.len()).map(|_| None).collect();
        grads[self.id] = Some(Array::ones(root.value.shape()));
        for i in (0..=self.id).rev() {
            let node = &nodes[i];
            let Some(rule) = &node.backward else { continue };
            let Some(g) = grads[i].take() else { continue };
            let inputs: Vec<&Array> = node.parents.iter().map(|&p| nodes[p].value.as_ref()).collect();
            let needs: Vec<bool> = node.parents.iter().map(|&p| nodes[p].requires_grad).collect();
            let parent_grads = rule(&BackwardArgs {
                grad: &g,
                inputs: &inputs,
                output: &node.value,
                needs: &needs,
            });
            debug_assert_eq!(parent_grads.len(), node.parents.len());
            for ((&p, pg), need) in node.parents.iter().zip(parent_grads).zip(needs) {
                let Some(pg) = pg else { continue };
                if !need {
                    continue;
                }
                debug_assert_eq!(pg.shape(), nodes[p].value.shape(), "gradient shape for node {p}");
                match &mut grads[p] {
                    Some(acc) => acc.add_assign(&pg),
                    slot => *slot = Some(pg),
                }
            }
        }
        Ok(Gradients {
            grads,
            bound: self.graph.bound.borrow().clone(),
        })
    }
}

/// Gradient table produced by [`Var::backward`]. Only leaves keep their entries.
pub struct Gradients {
    grads: Vec<Option<Array>>,
    bound: HashMap<ParamId, usize>,
}

impl Gradients {
    pub fn wrt(&self, v: Var<'_>) -> Option<&Array> {
        self.grads.get(v.id).and_then(|g| g.as_ref())
    }

    /// Gradient of a bound parameter; `None` if it was not used in the graph.
    pub fn param(&self, p: &Param) -> Option<&Array> {
        self.bound
            .get(&p.id())
            .and_then(|&id| self.grads.get(id))
            .and_then(|g| g.as_ref())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

pub fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn silu_values() {
        assert_eq!(silu(0.0), 0.0);
        assert!((silu(1.0) - 0.7310585786300049).abs() < 1e-12);
        let tiny = silu(-20.0);
        assert!(tiny < 0.0 && tiny.is_finite());
        assert!((tiny - (-20.0 * (-20f64).exp() / (1.0 + (-20f64).exp()))).abs() < 1e-20);
        assert!((tiny + 4.122307e-8).abs() < 1e-13);
    }

    #[test]
    fn root_is_leaf() {
        let g = Graph::new();
        let x = g.leaf(Array::scalar(4.0));
        let grads = x.backward().unwrap();
        assert_eq!(grads.wrt(x).unwrap().data(), &[1.0]);
    }

    #[test]
    fn fan_out_accumulates() {
        let g = Graph::new();
        let x = g.leaf(Array::scalar(1.5));
        let y = x.add(x).unwrap();
        let grads = y.backward().unwrap();
        assert_eq!(grads.wrt(x).unwrap().data(), &[2.0]);
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let g = Graph::new();
        let x = g.leaf(Array::zeros([2]));
        assert!(matches!(x.backward(), Err(Error::Contract(_))));
    }

    #[test]
    fn mean_distributes_evenly() {
        let g = Graph::new();
        let x = g.leaf(Array::from_fn([4], |i| i as f64));
        let grads = x.mean().scale(8.0).backward().unwrap();
        assert_eq!(grads.wrt(x).unwrap().data(), &[2.0; 4]);
    }

    #[test]
    fn constants_get_no_gradient() {
        let g = Graph::new();
        let c = g.constant(Array::ones([2, 2]));
        let w = g.leaf(Array::ones([2, 1]));
        let grads = c.matmul(w).unwrap().sum().backward().unwrap();
        assert!(grads.wrt(c).is_none());
        assert_eq!(grads.wrt(w).unwrap().data(), &[2.0, 2.0]);
    }

    #[test]
    fn shared_param_binds_once() {
        let p = Param::new("w", Array::scalar(3.0));
        let g = Graph::new();
        let a = g.param(&p);
        let b = g.param(&p);
        assert_eq!(a.id(), b.id());
        let grads = a.mul(b).unwrap().backward().unwrap();
        assert_eq!(grads.param(&p).unwrap().data(), &[6.0]);
    }
}
