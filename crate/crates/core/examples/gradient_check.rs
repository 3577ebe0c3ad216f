//! Finite-difference check of every parameter of a small model.

use tfkan::gradcheck::check_module;
use tfkan::model::{ModelConfig, TfkanModel, Variant};
use tfkan::training::mse_loss;
use tfkan::Array;

fn main() -> tfkan::Result<()> {
    let x = Array::from_fn([2, 2, 8], |i| (i as f64 * 0.37).sin());
    let y = Array::from_fn([2, 2, 4], |i| (i as f64 * 0.21).cos());
    for variant in [Variant::Full, Variant::Mlp, Variant::TwoFreqKan] {
        let config = ModelConfig {
            n_channels: 2,
            lookback: 8,
            horizon: 4,
            embed_dim: 4,
            hidden: 6,
            ..ModelConfig::default()
        }
        .with_variant(variant);
        let mut model = TfkanModel::new(config, 1)?;
        let report = check_module(&mut model, 1e-5, |m, g| {
            mse_loss(m.forward(g, g.constant(x.clone()))?, g.constant(y.clone()))
        })?;
        println!("{:<12} {} scalars, max relative error {:.2e}", variant.name(), report.checked, report.max_rel_err);
    }
    Ok(())
}
