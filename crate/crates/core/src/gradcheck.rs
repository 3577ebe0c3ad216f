//! Central finite-difference gradient checks.
//!
//! Only forward evaluations are used here, so the check stays independent of
//! the backward rules it verifies.

use crate::array::Array;
use crate::autodiff::{Graph, Var};
use crate::error::Result;
use crate::param::Module;

/// `|a - f| / max(|a|, |f|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central differences of a scalar function at `x`.
pub fn numeric_gradient(x: &Array, h: f64, mut f: impl FnMut(&Array) -> f64) -> Array {
    let mut probe = x.clone();
    let mut out = Array::zeros(x.shape());
    for i in 0..x.len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let up = f(&probe);
        probe.data_mut()[i] = orig - h;
        let down = f(&probe);
        probe.data_mut()[i] = orig;
        out.data_mut()[i] = (up - down) / (2.0 * h);
    }
    out
}

#[derive(Debug, Clone)]
pub struct Mismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    /// Entry with the largest relative error.
    pub worst: Option<Mismatch>,
    /// Per-parameter maximum relative error, in visit order.
    pub per_param: Vec<(String, f64)>,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

fn loss_value<M: Module>(model: &M, loss: &impl for<'g> Fn(&M, &'g Graph) -> Result<Var<'g>>) -> Result<f64> {
    let g = Graph::new();
    Ok(loss(model, &g)?.value().item())
}

/// Compares backprop gradients of `loss` against central differences for every
/// scalar of every parameter of `model`.
pub fn check_module<M: Module>(
    model: &mut M,
    h: f64,
    loss: impl for<'g> Fn(&M, &'g Graph) -> Result<Var<'g>>,
) -> Result<GradCheckReport> {
    let analytic: Vec<Array> = {
        let g = Graph::new();
        let root = loss(model, &g)?;
        let grads = root.backward()?;
        model
            .params()
            .into_iter()
            .map(|p| grads.param(p).cloned().unwrap_or_else(|| Array::zeros(p.value().shape())))
            .collect()
    };
    let names: Vec<String> = model.params().iter().map(|p| p.name().to_string()).collect();
    let sizes: Vec<usize> = model.params().iter().map(|p| p.numel()).collect();

    let mut report = GradCheckReport {
        checked: 0,
        max_rel_err: 0.0,
        worst: None,
        per_param: Vec::new(),
    };
    for (k, (name, size)) in names.iter().zip(&sizes).enumerate() {
        let mut param_max: f64 = 0.0;
        for j in 0..*size {
            let orig = nudge(model, k, j, None);
            nudge(model, k, j, Some(orig + h));
            let up = loss_value(model, &loss)?;
            nudge(model, k, j, Some(orig - h));
            let down = loss_value(model, &loss)?;
            nudge(model, k, j, Some(orig));
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[k].data()[j];
            let err = relative_error(a, numeric);
            param_max = param_max.max(err);
            report.checked += 1;
            if err > report.max_rel_err || report.worst.is_none() {
                report.max_rel_err = report.max_rel_err.max(err);
                report.worst = Some(Mismatch {
                    param: name.clone(),
                    index: j,
                    analytic: a,
                    numeric,
                    rel_err: err,
                });
            }
        }
        report.per_param.push((name.clone(), param_max));
    }
    Ok(report)
}

/// Reads (and optionally overwrites) scalar `j` of parameter `k`; returns the old value.
fn nudge<M: Module>(model: &mut M, k: usize, j: usize, set: Option<f64>) -> f64 {
    let mut seen = 0;
    let mut old = f64::NAN;
    model.visit_params_mut(&mut |p| {
        if seen == k {
            let slot = &mut p.value_mut().data_mut()[j];
            old = *slot;
            if let Some(v) = set {
                *slot = v;
            }
        }
        seen += 1;
    });
    old
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
        assert!((relative_error(0.0, 1e-12) - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn numeric_gradient_of_quadratic() {
        let x = Array::vector(&[1.0, -2.0]);
        let g = numeric_gradient(&x, 1e-5, |a| a.data().iter().map(|v| v * v).sum());
        assert!((g.data()[0] - 2.0).abs() < 1e-8);
        assert!((g.data()[1] + 4.0).abs() < 1e-8);
    }
}
