use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Table;
use crate::array::Array;
use crate::error::{Error, Result};

/// Seeded multi-periodic series: each channel sums 2 or 3 sinusoids with
/// distinct periods drawn from `periods`, plus a linear trend and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub channels: usize,
    pub length: usize,
    pub periods: Vec<f64>,
    pub noise: f64,
    /// Largest absolute rise of the trend over the whole series.
    pub trend: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            channels: 3,
            length: 2000,
            periods: vec![24.0, 12.0, 8.0, 48.0],
            noise: 0.05,
            trend: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub period: f64,
    pub amplitude: f64,
    pub phase: f64,
}

/// Sinusoid components of each channel, in generation order.
pub fn synthetic_components(spec: &SyntheticSpec) -> Vec<Vec<Component>> {
    generate(spec).1
}

fn generate(spec: &SyntheticSpec) -> (Vec<f64>, Vec<Vec<Component>>) {
    let (n, t_len) = (spec.channels, spec.length);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.noise.max(0.0)).unwrap();
    let mut values = vec![0.0; t_len * n];
    let mut all = Vec::with_capacity(n);
    for c in 0..n {
        let k = rng.gen_range(2..=3).min(spec.periods.len());
        let mut pool = spec.periods.clone();
        pool.shuffle(&mut rng);
        let comps: Vec<Component> = pool[..k]
            .iter()
            .map(|&period| Component {
                period,
                amplitude: rng.gen_range(0.5..1.5),
                phase: rng.gen_range(0.0..2.0 * PI),
            })
            .collect();
        let slope = if spec.trend > 0.0 {
            rng.gen_range(-spec.trend..=spec.trend)
        } else {
            0.0
        };
        for t in 0..t_len {
            let tf = t as f64;
            let mut v: f64 = comps
                .iter()
                .map(|s| s.amplitude * (2.0 * PI * tf / s.period + s.phase).sin())
                .sum();
            v += slope * tf / t_len as f64;
            if spec.noise > 0.0 {
                v += normal.sample(&mut rng);
            }
            values[t * n + c] = v;
        }
        all.push(comps);
    }
    (values, all)
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Table> {
    if spec.channels == 0 || spec.periods.is_empty() {
        return Err(Error::Config("synthetic series needs channels and periods".into()));
    }
    let mut sorted = spec.periods.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted[0] <= 0.0 {
        return Err(Error::Config("synthetic periods must be positive and distinct".into()));
    }
    if spec.length as f64 <= *sorted.last().unwrap() {
        return Err(Error::Sizing(format!(
            "series length {} must exceed the largest period",
            spec.length
        )));
    }
    let (values, _) = generate(spec);
    Ok(Table {
        names: (0..spec.channels).map(|c| format!("ch{c}")).collect(),
        values: Array::new([spec.length, spec.channels], values)?,
        dropped_label: false,
    })
}
