//! Loss, metrics, optimizer, scaling and the early-stopping training loop.

mod adam;
mod scaler;
mod trainer;

pub use adam::Adam;
pub use scaler::MinMaxScaler;
pub use trainer::{
    evaluate, fit_batch, train, EpochRecord, Metrics, TrainConfig, TrainReport,
};

use crate::array::Array;
use crate::autodiff::Var;
use crate::error::{Error, Result};

/// Mean of squared differences over every element.
pub fn mse_loss<'g>(pred: Var<'g>, target: Var<'g>) -> Result<Var<'g>> {
    if pred.shape() != target.shape() {
        return Err(Error::dim("mse_loss", &pred.shape(), &target.shape()));
    }
    Ok(pred.sub(target)?.square().mean())
}

fn check_same(op: &'static str, a: &Array, b: &Array) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::dim(op, a.shape(), b.shape()));
    }
    if a.is_empty() {
        return Err(Error::contract(format!("{op} of empty arrays")));
    }
    Ok(())
}

pub fn mse(pred: &Array, target: &Array) -> Result<f64> {
    check_same("mse", pred, target)?;
    let s: f64 = pred.data().iter().zip(target.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / pred.len() as f64)
}

pub fn mae(pred: &Array, target: &Array) -> Result<f64> {
    check_same("mae", pred, target)?;
    let s: f64 = pred.data().iter().zip(target.data()).map(|(a, b)| (a - b).abs()).sum();
    Ok(s / pred.len() as f64)
}

pub fn rmse(pred: &Array, target: &Array) -> Result<f64> {
    Ok(mse(pred, target)?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Graph;

    #[test]
    fn loss_and_metric_values() {
        let p = Array::vector(&[1.0, 2.0]);
        let y = Array::vector(&[2.0, 4.0]);
        assert_eq!(mse(&p, &y).unwrap(), 2.5);
        assert_eq!(mae(&p, &y).unwrap(), 1.5);
        assert!((rmse(&p, &y).unwrap() - 1.581_138_830_084_189_8).abs() < 1e-15);
        assert_eq!(mae(&p, &p).unwrap(), 0.0);
        assert_eq!(rmse(&p, &p).unwrap(), 0.0);
        assert!(mse(&p, &Array::vector(&[1.0])).is_err());
    }

    #[test]
    fn mse_loss_gradient_is_two_diff_over_count() {
        let g = Graph::new();
        let p = g.leaf(Array::vector(&[1.0, 2.0]));
        let y = g.constant(Array::vector(&[2.0, 4.0]));
        let loss = mse_loss(p, y).unwrap();
        assert_eq!(loss.value().item(), 2.5);
        let grads = loss.backward().unwrap();
        assert_eq!(grads.wrt(p).unwrap().data(), &[-1.0, -2.0]);
        let z = g.leaf(Array::vector(&[1.0, 2.0, 3.0]));
        assert!(mse_loss(z, y).is_err());
    }
}
