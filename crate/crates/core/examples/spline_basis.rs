//! Prints the B-spline bases and their derivatives across [-1, 1].

use tfkan::kan::{bspline_basis, bspline_basis_derivative, KnotGrid};
use tfkan::Array;

fn main() -> tfkan::Result<()> {
    let grid = KnotGrid::uniform(4, 2)?;
    println!("knots {:?}", grid.knots());
    let xs: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
    let b = bspline_basis(&Array::vector(&xs), &grid);
    let d = bspline_basis_derivative(&Array::vector(&xs), &grid);
    let nb = grid.basis_count();
    for (i, x) in xs.iter().enumerate() {
        let row = &b.data()[i * nb..(i + 1) * nb];
        let fmt = |r: &[f64]| r.iter().map(|v| format!("{v:6.3}")).collect::<Vec<_>>().join(" ");
        println!(
            "x {x:5.2}  B [{}]  sum {:.3}  dB [{}]",
            fmt(row),
            row.iter().sum::<f64>(),
            fmt(&d.data()[i * nb..(i + 1) * nb])
        );
    }
    Ok(())
}
