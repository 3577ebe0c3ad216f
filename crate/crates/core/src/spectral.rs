//! One-sided real DFT along an arbitrary axis, differentiable in both directions.
//!
//! Forward is unnormalized, `X_f = Σ_n x_n e^{-2πi f n / L}` for `f = 0..=L/2`;
//! the inverse carries the `1/L` factor and treats the bins as the half spectrum
//! of a Hermitian sequence (imaginary parts of the DC and, for even `L`, Nyquist
//! bins do not contribute).

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::array::Array;
use crate::autodiff::Var;
use crate::error::{Error, Result};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let (planner, cache) = &mut *cell.borrow_mut();
        cache
            .entry((len, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(len)
                } else {
                    planner.plan_fft_forward(len)
                }
            })
            .clone()
    })
}

/// Bin count of the one-sided spectrum of a length-`len` real signal.
pub fn bin_count(len: usize) -> usize {
    len / 2 + 1
}

/// Multiplicity of bin `f` in the full spectrum (1 for DC and Nyquist, else 2).
fn multiplicity(f: usize, len: usize) -> f64 {
    if f == 0 || (len % 2 == 0 && f == len / 2) {
        1.0
    } else {
        2.0
    }
}

/// Real and imaginary parts of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPair {
    pub re: Array,
    pub im: Array,
}

impl ComplexPair {
    pub fn new(re: Array, im: Array) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::dim("complex pair", re.shape(), im.shape()));
        }
        Ok(Self { re, im })
    }
}

fn check_axis(shape: &[usize], axis: usize, op: &'static str) -> Result<()> {
    if axis >= shape.len() {
        return Err(Error::dim(op, shape, &[axis]));
    }
    Ok(())
}

/// Forward transform of a real array along `axis`.
pub fn rfft(x: &Array, axis: usize) -> Result<ComplexPair> {
    check_axis(x.shape(), axis, "rfft")?;
    let (outer, len, inner) = Array::axis_split(x.shape(), axis);
    if len < 2 {
        return Err(Error::contract(format!("transform length must be >= 2, got {len}")));
    }
    let bins = bin_count(len);
    let mut shape = x.shape().to_vec();
    shape[axis] = bins;
    let mut re = vec![0.0; outer * bins * inner];
    let mut im = vec![0.0; outer * bins * inner];
    let fft = plan(len, false);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let xd = x.data();
    for o in 0..outer {
        for i in 0..inner {
            for (n, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(xd[(o * len + n) * inner + i], 0.0);
            }
            fft.process(&mut buf);
            for f in 0..bins {
                let dst = (o * bins + f) * inner + i;
                re[dst] = buf[f].re;
                im[dst] = buf[f].im;
            }
        }
    }
    // sin(0) and sin(πn) vanish identically; keep those bins exactly real
    for o in 0..outer {
        for i in 0..inner {
            im[(o * bins) * inner + i] = 0.0;
            if len % 2 == 0 {
                im[(o * bins + bins - 1) * inner + i] = 0.0;
            }
        }
    }
    Ok(ComplexPair {
        re: Array::new(shape.clone(), re)?,
        im: Array::new(shape, im)?,
    })
}

/// Inverse transform back to a real signal of length `len` along `axis`.
pub fn irfft(z: &ComplexPair, axis: usize, len: usize) -> Result<Array> {
    check_axis(z.re.shape(), axis, "irfft")?;
    if z.re.shape() != z.im.shape() {
        return Err(Error::dim("irfft", z.re.shape(), z.im.shape()));
    }
    let (outer, bins, inner) = Array::axis_split(z.re.shape(), axis);
    if len < 2 || bins != bin_count(len) {
        return Err(Error::contract(format!(
            "{bins} bins is inconsistent with original length {len}"
        )));
    }
    let mut shape = z.re.shape().to_vec();
    shape[axis] = len;
    let mut out = vec![0.0; outer * len * inner];
    let ifft = plan(len, true);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let (re, im) = (z.re.data(), z.im.data());
    let scale = 1.0 / len as f64;
    for o in 0..outer {
        for i in 0..inner {
            let at = |f: usize| (o * bins + f) * inner + i;
            buf[0] = Complex64::new(re[at(0)], 0.0);
            for f in 1..bins {
                let v = if multiplicity(f, len) == 1.0 {
                    Complex64::new(re[at(f)], 0.0)
                } else {
                    Complex64::new(re[at(f)], im[at(f)])
                };
                buf[f] = v;
                if f != len - f {
                    buf[len - f] = v.conj();
                }
            }
            ifft.process(&mut buf);
            for n in 0..len {
                out[(o * len + n) * inner + i] = buf[n].re * scale;
            }
        }
    }
    Array::new(shape, out)
}

/// Largest imaginary part left by a full complex inverse when the spectrum is
/// extended by conjugate symmetry without discarding the DC/Nyquist imaginary
/// parts. Zero (to rounding) exactly when `z` is the spectrum of a real signal.
pub fn imaginary_residue(z: &ComplexPair, axis: usize, len: usize) -> Result<f64> {
    let (outer, bins, inner) = Array::axis_split(z.re.shape(), axis);
    if bins != bin_count(len) {
        return Err(Error::contract(format!(
            "{bins} bins is inconsistent with original length {len}"
        )));
    }
    let ifft = plan(len, true);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let (re, im) = (z.re.data(), z.im.data());
    let mut worst: f64 = 0.0;
    for o in 0..outer {
        for i in 0..inner {
            let at = |f: usize| (o * bins + f) * inner + i;
            buf.fill(Complex64::new(0.0, 0.0));
            for f in 0..bins {
                let v = Complex64::new(re[at(f)], im[at(f)]);
                buf[f] = v;
                if f != 0 && f != len - f {
                    buf[len - f] = v.conj();
                }
            }
            ifft.process(&mut buf);
            for b in &buf {
                worst = worst.max((b.im / len as f64).abs());
            }
        }
    }
    Ok(worst)
}

/// Adjoint of [`rfft`]: `dx_n = Re Σ_f (gRe_f + i gIm_f) e^{2πi f n / L}`.
fn rfft_adjoint(g_re: &Array, g_im: &Array, axis: usize, len: usize) -> Array {
    let (outer, bins, inner) = Array::axis_split(g_re.shape(), axis);
    let mut shape = g_re.shape().to_vec();
    shape[axis] = len;
    let mut out = vec![0.0; outer * len * inner];
    let ifft = plan(len, true);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let (gr, gi) = (g_re.data(), g_im.data());
    for o in 0..outer {
        for i in 0..inner {
            buf.fill(Complex64::new(0.0, 0.0));
            for f in 0..bins {
                let at = (o * bins + f) * inner + i;
                buf[f] = Complex64::new(gr[at], gi[at]);
            }
            ifft.process(&mut buf);
            for n in 0..len {
                out[(o * len + n) * inner + i] = buf[n].re;
            }
        }
    }
    Array::new(shape, out).unwrap()
}

/// Adjoint of [`irfft`]: `(c_f / L) · rfft(g)_f` with `c_f` the bin multiplicity.
fn irfft_adjoint(g: &Array, axis: usize, len: usize) -> ComplexPair {
    let mut spec = rfft(g, axis).expect("adjoint of a validated inverse");
    let (outer, bins, inner) = Array::axis_split(spec.re.shape(), axis);
    let ComplexPair { re, im } = &mut spec;
    let (re, im) = (re.data_mut(), im.data_mut());
    for o in 0..outer {
        for f in 0..bins {
            let c = multiplicity(f, len) / len as f64;
            for i in 0..inner {
                let at = (o * bins + f) * inner + i;
                re[at] *= c;
                im[at] *= c;
            }
        }
    }
    spec
}

/// A one-sided spectrum held in the graph, tagged with the signal length and
/// the axis it was taken along.
#[derive(Debug, Clone, Copy)]
pub struct Spectrum<'g> {
    pub re: Var<'g>,
    pub im: Var<'g>,
    pub len: usize,
    pub axis: usize,
}

impl Spectrum<'_> {
    pub fn values(&self) -> ComplexPair {
        ComplexPair {
            re: self.re.value().as_ref().clone(),
            im: self.im.value().as_ref().clone(),
        }
    }
}

/// Time domain to frequency domain along `axis`.
pub fn domain_transform(x: Var<'_>, axis: usize) -> Result<Spectrum<'_>> {
    let spec = rfft(&x.value(), axis)?;
    let len = x.shape()[axis];
    let re = x.graph().custom(&[x], spec.re, move |a| {
        let zeros = Array::zeros(a.grad.shape());
        vec![Some(rfft_adjoint(a.grad, &zeros, axis, len))]
    });
    let im = x.graph().custom(&[x], spec.im, move |a| {
        let zeros = Array::zeros(a.grad.shape());
        vec![Some(rfft_adjoint(&zeros, a.grad, axis, len))]
    });
    Ok(Spectrum { re, im, len, axis })
}

/// Frequency domain back to a real signal.
pub fn domain_detransform<'g>(z: &Spectrum<'g>) -> Result<Var<'g>> {
    let (axis, len) = (z.axis, z.len);
    let pair = ComplexPair::new(z.re.value().as_ref().clone(), z.im.value().as_ref().clone())?;
    let out = irfft(&pair, axis, len)?;
    Ok(z.re.graph().custom(&[z.re, z.im], out, move |a| {
        let g = irfft_adjoint(a.grad, axis, len);
        vec![a.needs[0].then_some(g.re), a.needs[1].then_some(g.im)]
    }))
}

/// Packs separately computed real and imaginary parts into a spectrum.
pub fn complex_linear_combine<'g>(re: Var<'g>, im: Var<'g>, len: usize, axis: usize) -> Result<Spectrum<'g>> {
    let (rs, is) = (re.shape(), im.shape());
    if rs != is {
        return Err(Error::dim("complex combine", &rs, &is));
    }
    check_axis(&rs, axis, "complex combine")?;
    if rs[axis] != bin_count(len) {
        return Err(Error::contract(format!(
            "{} bins is inconsistent with original length {len}",
            rs[axis]
        )));
    }
    Ok(Spectrum { re, im, len, axis })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_has_only_dc() {
        let x = Array::full([6], 2.5);
        let s = rfft(&x, 0).unwrap();
        assert!((s.re.data()[0] - 15.0).abs() < 1e-12);
        assert!(s.re.data()[1..].iter().all(|v| v.abs() < 1e-12));
        assert!(s.im.data().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn four_point_hand_values() {
        let s = rfft(&Array::vector(&[1.0, 2.0, 3.0, 4.0]), 0).unwrap();
        let want_re = [10.0, -2.0, -2.0];
        let want_im = [0.0, 2.0, 0.0];
        for f in 0..3 {
            assert!((s.re.data()[f] - want_re[f]).abs() < 1e-12);
            assert!((s.im.data()[f] - want_im[f]).abs() < 1e-12);
        }
    }

    #[test]
    fn dc_only_inverts_to_ones() {
        let mut re = Array::zeros([5]);
        re.data_mut()[0] = 8.0;
        let x = irfft(&ComplexPair::new(re, Array::zeros([5])).unwrap(), 0, 8).unwrap();
        assert!(x.data().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let z = irfft(&ComplexPair::new(Array::zeros([5]), Array::zeros([5])).unwrap(), 0, 8).unwrap();
        assert!(z.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn length_and_bin_contracts() {
        assert!(matches!(rfft(&Array::vector(&[1.0]), 0), Err(Error::Contract(_))));
        let pair = ComplexPair::new(Array::zeros([4]), Array::zeros([4])).unwrap();
        assert!(irfft(&pair, 0, 8).is_err());
        assert!(irfft(&pair, 0, 7).is_ok());
        assert!(ComplexPair::new(Array::zeros([4]), Array::zeros([3])).is_err());
    }

    #[test]
    fn transform_along_middle_axis() {
        let x = Array::from_fn([2, 4, 3], |i| ((i * 7) % 5) as f64);
        let s = rfft(&x, 1).unwrap();
        assert_eq!(s.re.shape(), &[2, 3, 3]);
        let back = irfft(&s, 1, 4).unwrap();
        assert!(back.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn residue_flags_invalid_dc_imaginary() {
        let x = Array::from_fn([7], |i| (i as f64).sin());
        let mut s = rfft(&x, 0).unwrap();
        assert!(imaginary_residue(&s, 0, 7).unwrap() < 1e-12);
        s.im.data_mut()[0] = 1.0;
        assert!(imaginary_residue(&s, 0, 7).unwrap() > 0.1);
    }
}
