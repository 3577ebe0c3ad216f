//! Trains the full model on a synthetic series and reports test metrics.

use tfkan::cli::studies::{desk_model_config, synthetic_dataset};
use tfkan::data::{SplitRatios, SyntheticSpec};
use tfkan::training::{train, TrainConfig};
use tfkan::TfkanModel;

fn main() -> tfkan::Result<()> {
    let spec = SyntheticSpec::default();
    let config = desk_model_config(spec.channels);
    let (data, scaler) = synthetic_dataset(&spec, SplitRatios::STANDARD, config.lookback, config.horizon)?;
    let mut model = TfkanModel::new(config, 42)?;
    let cfg = TrainConfig { max_epochs: 5, ..TrainConfig::default() };
    let report = train(&mut model, &data, &cfg, Some(&scaler))?;
    for e in &report.epochs {
        println!("epoch {:2}  train {:.6}  val {:.6}  {:.2}s", e.epoch, e.train_loss, e.val_loss, e.seconds);
    }
    println!("best epoch {}  test MAE {:.5}  RMSE {:.5}", report.best_epoch, report.test.mae, report.test.rmse);
    if let Some(d) = report.test_denormalized {
        println!("original scale: MAE {:.5}  RMSE {:.5}", d.mae, d.rmse);
    }
    Ok(())
}
