//! Trains all fourteen variants on the seeded multi-periodic series.

use tfkan::cli::studies::{ablation, AblationConfig};

fn main() -> tfkan::Result<()> {
    let cfg = AblationConfig::default();
    for row in ablation(&cfg)? {
        let r = &row.outcome.report;
        println!(
            "{:<18} mae {:.5}  rmse {:.5}  params {:>8}  epochs {:>2}  {:.2}s/epoch",
            row.variant.name(),
            r.test.mae,
            r.test.rmse,
            row.outcome.params,
            r.epochs.len(),
            r.mean_epoch_seconds()
        );
    }
    Ok(())
}
