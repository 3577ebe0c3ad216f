//! One-sided spectrum of a two-tone signal and its exact inverse.

use tfkan::spectral::{irfft, rfft};
use tfkan::Array;

fn main() -> tfkan::Result<()> {
    let l = 48;
    let x = Array::from_fn([l], |t| {
        let t = t as f64;
        (2.0 * std::f64::consts::PI * t / 12.0).sin() + 0.5 * (2.0 * std::f64::consts::PI * t / 8.0).cos()
    });
    let z = rfft(&x, 0)?;
    for f in 0..z.re.len() {
        let mag = z.re.data()[f].hypot(z.im.data()[f]);
        if mag > 1e-9 {
            println!("bin {f:2} (period {:5.1}): |X| = {mag:.3}", l as f64 / f as f64);
        }
    }
    let back = irfft(&z, 0, l)?;
    println!("round-trip max error {:.2e}", back.max_abs_diff(&x));
    Ok(())
}
