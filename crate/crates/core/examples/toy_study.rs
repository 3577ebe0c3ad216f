//! KAN versus a parameter-matched ReLU MLP on the four toy functions.

use tfkan::cli::studies::{toy_study, ToyStudyConfig};

fn main() -> tfkan::Result<()> {
    let cfg = ToyStudyConfig::default();
    println!("kan params {}  mlp hidden {}", cfg.kan_params(), cfg.mlp_hidden());
    for r in toy_study(&cfg)? {
        println!(
            "{}  kan {:.3e}  mlp {:.3e}  ({} vs {} params, {:.1}s)",
            r.function, r.kan_mse, r.mlp_mse, r.kan_params, r.mlp_params, r.seconds
        );
    }
    Ok(())
}
