//! The four closed-form univariate toy functions on `[0, 1]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ToyFunction {
    F1,
    F2,
    F3,
    F4,
}

impl ToyFunction {
    pub const ALL: [ToyFunction; 4] = [Self::F1, Self::F2, Self::F3, Self::F4];

    pub fn eval(self, x: f64) -> f64 {
        let t = 2.0 * PI * x;
        match self {
            Self::F1 => t.sin() + 0.5 * (2.0 * t).cos(),
            Self::F2 => (2.0 * t).sin() + 0.3 * (4.0 * t).cos(),
            Self::F3 => t.sin() + (3.0 * t).cos() + 0.3 * (5.0 * t).cos(),
            Self::F4 => t.sin() + (2.0 * t + PI / 3.0).sin() + (3.0 * t).cos(),
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            Self::F1 => "sin(2πx) + 0.5cos(4πx)",
            Self::F2 => "sin(4πx) + 0.3cos(8πx)",
            Self::F3 => "sin(2πx) + cos(6πx) + 0.3cos(10πx)",
            Self::F4 => "sin(2πx) + sin(4πx + π/3) + cos(6πx)",
        }
    }
}

impl fmt::Display for ToyFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ToyFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown toy function `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sampling {
    /// `i / (n - 1)`, endpoints included.
    Equispaced,
    /// Midpoints between consecutive points of the equispaced grid with
    /// `n + 1` points.
    Midpoints,
    Uniform { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToySpec {
    pub function: ToyFunction,
    pub samples: usize,
    pub sampling: Sampling,
    pub noise: f64,
    pub noise_seed: u64,
}

impl ToySpec {
    pub fn new(function: ToyFunction, samples: usize, sampling: Sampling) -> Self {
        Self {
            function,
            samples,
            sampling,
            noise: 0.0,
            noise_seed: 0,
        }
    }
}

/// Returns `(x, f(x) + noise)`.
pub fn gen_toy(spec: &ToySpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = spec.samples;
    if n == 0 {
        return Err(Error::Config("toy sample count must be >= 1".into()));
    }
    let xs: Vec<f64> = match spec.sampling {
        Sampling::Equispaced if n == 1 => vec![0.0],
        Sampling::Equispaced => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
        Sampling::Midpoints => (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(),
        Sampling::Uniform { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()
        }
    };
    let mut ys: Vec<f64> = xs.iter().map(|&x| spec.function.eval(x)).collect();
    if spec.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
        let normal = Normal::new(0.0, spec.noise).map_err(|e| Error::Config(e.to_string()))?;
        for y in &mut ys {
            *y += normal.sample(&mut rng);
        }
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert!((ToyFunction::F1.eval(0.25) - 0.5).abs() < 1e-15);
        assert!((ToyFunction::F2.eval(0.0) - 0.3).abs() < 1e-15);
        assert!((ToyFunction::F4.eval(0.0) - 1.866_025_403_784_438_6).abs() < 1e-12);
        assert!((ToyFunction::F3.eval(0.0) - 1.3).abs() < 1e-15);
    }

    #[test]
    fn sampling_layouts() {
        let (x, _) = gen_toy(&ToySpec::new(ToyFunction::F1, 5, Sampling::Equispaced)).unwrap();
        assert_eq!(x, [0.0, 0.25, 0.5, 0.75, 1.0]);
        let (x, _) = gen_toy(&ToySpec::new(ToyFunction::F1, 4, Sampling::Midpoints)).unwrap();
        assert_eq!(x, [0.125, 0.375, 0.625, 0.875]);
        let (x, _) = gen_toy(&ToySpec::new(ToyFunction::F1, 100, Sampling::Uniform { seed: 3 })).unwrap();
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn noiseless_targets_are_exact_and_zero_samples_fail() {
        let (x, y) = gen_toy(&ToySpec::new(ToyFunction::F3, 9, Sampling::Equispaced)).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert_eq!(ToyFunction::F3.eval(*a), *b);
        }
        assert!(gen_toy(&ToySpec::new(ToyFunction::F3, 0, Sampling::Equispaced)).is_err());
        assert!("F5".parse::<ToyFunction>().is_err());
        assert_eq!("f2".parse::<ToyFunction>().unwrap(), ToyFunction::F2);
    }
}
