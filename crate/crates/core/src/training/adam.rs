use crate::array::Array;
use crate::autodiff::Gradients;
use crate::error::{Error, Result};
use crate::param::Module;

/// Bias-corrected Adam. Moments are created lazily on the first step and
/// follow the module's parameter visit order.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Array>,
    v: Vec<Array>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Array], &[Array]) {
        (&self.m, &self.v)
    }

    /// One update from a backward pass. Every parameter must have a gradient.
    pub fn step<M: Module>(&mut self, model: &mut M, grads: &Gradients) -> Result<()> {
        let table: Vec<Array> = model
            .params()
            .into_iter()
            .map(|p| {
                grads
                    .param(p)
                    .cloned()
                    .ok_or_else(|| Error::contract(format!("no gradient for parameter `{}`", p.name())))
            })
            .collect::<Result<_>>()?;
        self.step_with(model, &table)
    }

    /// One update from an explicit gradient table in visit order.
    pub fn step_with<M: Module>(&mut self, model: &mut M, grads: &[Array]) -> Result<()> {
        let shapes: Vec<Vec<usize>> = model.params().iter().map(|p| p.value().shape().to_vec()).collect();
        if grads.len() != shapes.len() {
            return Err(Error::contract(format!(
                "gradient table has {} entries for {} parameters",
                grads.len(),
                shapes.len()
            )));
        }
        for (g, s) in grads.iter().zip(&shapes) {
            if g.shape() != s.as_slice() {
                return Err(Error::dim("adam gradient", g.shape(), s));
            }
        }
        if self.m.is_empty() {
            self.m = shapes.iter().map(|s| Array::zeros(s.clone())).collect();
            self.v = self.m.clone();
        } else if self.m.len() != shapes.len() {
            return Err(Error::contract("optimizer state does not match the module"));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let mut k = 0;
        let (ms, vs) = (&mut self.m, &mut self.v);
        model.visit_params_mut(&mut |p| {
            let g = grads[k].data();
            let m = ms[k].data_mut();
            let v = vs[k].data_mut();
            for (((w, gi), mi), vi) in p.value_mut().data_mut().iter_mut().zip(g).zip(m).zip(v) {
                *mi = b1 * *mi + (1.0 - b1) * gi;
                *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            k += 1;
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::Param;

    struct One(Param);

    impl Module for One {
        fn visit_params<'a>(&'a self, f: &mut dyn FnMut(&'a Param)) {
            f(&self.0)
        }
        fn visit_params_mut(&mut self, f: &mut dyn FnMut(&mut Param)) {
            f(&mut self.0)
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut m = One(Param::new("w", Array::scalar(0.0)));
        let mut adam = Adam::new(0.1);
        adam.step_with(&mut m, &[Array::scalar(1.0)]).unwrap();
        // m_hat / sqrt(v_hat) = 1, so the step is lr / (1 + eps).
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((m.0.value().item() - expected).abs() < 1e-15);
        assert_eq!(adam.steps_taken(), 1);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = One(Param::new("w", Array::vector(&[1.0, -2.0])));
        let mut adam = Adam::new(0.1);
        for _ in 0..3 {
            adam.step_with(&mut m, &[Array::zeros([2])]).unwrap();
        }
        assert_eq!(m.0.value().data(), &[1.0, -2.0]);
    }

    #[test]
    fn wrong_table_is_rejected() {
        let mut m = One(Param::new("w", Array::vector(&[1.0, -2.0])));
        let mut adam = Adam::new(0.1);
        assert!(adam.step_with(&mut m, &[]).is_err());
        assert!(adam.step_with(&mut m, &[Array::zeros([3])]).is_err());
        let g = crate::autodiff::Graph::new();
        let unrelated = g.leaf(Array::scalar(1.0)).sum();
        let grads = unrelated.backward().unwrap();
        assert!(matches!(adam.step(&mut m, &grads), Err(Error::Contract(_))));
    }
}
