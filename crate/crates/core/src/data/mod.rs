//! Series datasets: CSV ingestion, chronological splits, sliding windows and
//! synthetic generators.

mod csv_io;
mod synthetic;
mod toy;

pub use csv_io::{load_csv, parse_csv, read_table, write_csv, LoadOptions, Table};
pub use synthetic::{gen_synthetic, synthetic_components, Component, SyntheticSpec};
pub use toy::{gen_toy, Sampling, ToyFunction, ToySpec};

use std::ops::Range;
use std::str::FromStr;

use crate::array::Array;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Relative sizes of the train/val/test splits, e.g. `7:2:1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitRatios {
    pub const STANDARD: SplitRatios = SplitRatios {
        train: 7.0,
        val: 2.0,
        test: 1.0,
    };
    /// For short series.
    pub const SHORT: SplitRatios = SplitRatios {
        train: 6.0,
        val: 2.0,
        test: 2.0,
    };

    /// Train and val lengths are floored; the remainder goes to test.
    pub fn boundaries(&self, rows: usize) -> SplitBounds {
        let total = self.train + self.val + self.test;
        let n_train = (rows as f64 * self.train / total).floor() as usize;
        let n_val = (rows as f64 * self.val / total).floor() as usize;
        SplitBounds {
            train: 0..n_train,
            val: n_train..n_train + n_val,
            test: n_train + n_val..rows,
        }
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self::STANDARD
    }
}

impl std::fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.train, self.val, self.test)
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad split ratios `{s}`")))?;
        match parts[..] {
            [train, val, test] if parts.iter().all(|v| v.is_finite() && *v >= 0.0) && train > 0.0 => {
                Ok(Self { train, val, test })
            }
            _ => Err(Error::Config(format!("split ratios must be `a:b:c` with a > 0, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitBounds {
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

impl SplitBounds {
    pub fn get(&self, split: Split) -> Range<usize> {
        match split {
            Split::Train => self.train.clone(),
            Split::Val => self.val.clone(),
            Split::Test => self.test.clone(),
        }
    }
}

/// A multivariate series `[T, N]` with split boundaries and window geometry.
///
/// Windows never straddle a split boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesDataset {
    values: Array,
    names: Vec<String>,
    bounds: SplitBounds,
    lookback: usize,
    horizon: usize,
}

impl SeriesDataset {
    pub fn new(
        values: Array,
        names: Vec<String>,
        ratios: SplitRatios,
        lookback: usize,
        horizon: usize,
    ) -> Result<Self> {
        if values.ndim() != 2 {
            return Err(Error::dim("dataset values", values.shape(), &[0, 0]));
        }
        if names.len() != values.shape()[1] {
            return Err(Error::dim("dataset names", values.shape(), &[names.len()]));
        }
        if lookback == 0 || horizon == 0 {
            return Err(Error::Config("lookback and horizon must be positive".into()));
        }
        let bounds = ratios.boundaries(values.shape()[0]);
        let ds = Self {
            values,
            names,
            bounds,
            lookback,
            horizon,
        };
        for split in Split::ALL {
            let len = ds.split_len(split);
            if len < lookback + horizon {
                return Err(Error::Sizing(format!(
                    "{} split has {len} rows, needs at least lookback + horizon = {}",
                    split.name(),
                    lookback + horizon
                )));
            }
        }
        Ok(ds)
    }

    pub fn values(&self) -> &Array {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn bounds(&self) -> &SplitBounds {
        &self.bounds
    }

    pub fn rows(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn channels(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn split_len(&self, split: Split) -> usize {
        self.bounds.get(split).len()
    }

    /// Rows `[T_split, N]` of one split.
    pub fn split_values(&self, split: Split) -> Array {
        let r = self.bounds.get(split);
        self.values.slice_axis(0, r.start, r.end).unwrap()
    }

    /// Same geometry with new values (e.g. after scaling).
    pub fn with_values(&self, values: Array) -> Result<Self> {
        if values.shape() != self.values.shape() {
            return Err(Error::dim("with_values", self.values.shape(), values.shape()));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    /// `split length - L - τ + 1`, clamped at zero.
    pub fn window_count(&self, split: Split) -> usize {
        (self.split_len(split) + 1).saturating_sub(self.lookback + self.horizon)
    }

    /// Absolute row where window `i` of `split` starts.
    pub fn window_start(&self, split: Split, i: usize) -> usize {
        self.bounds.get(split).start + i
    }

    /// Window `i` as `(x [N, L], y [N, τ])`; `y` starts right after `x` ends.
    pub fn window(&self, split: Split, i: usize) -> (Array, Array) {
        let (x, y) = self.batch(split, &[i]);
        let n = self.channels();
        (
            x.reshape([n, self.lookback]).unwrap(),
            y.reshape([n, self.horizon]).unwrap(),
        )
    }

    /// Stacked windows `(x [B, N, L], y [B, N, τ])`.
    pub fn batch(&self, split: Split, indices: &[usize]) -> (Array, Array) {
        let n = self.channels();
        let (l, h) = (self.lookback, self.horizon);
        let count = self.window_count(split);
        let v = self.values.data();
        let mut x = Vec::with_capacity(indices.len() * n * l);
        let mut y = Vec::with_capacity(indices.len() * n * h);
        for &i in indices {
            assert!(i < count, "window {i} out of range for {} ({count})", split.name());
            let start = self.window_start(split, i);
            for c in 0..n {
                x.extend((start..start + l).map(|t| v[t * n + c]));
                y.extend((start + l..start + l + h).map(|t| v[t * n + c]));
            }
        }
        let b = indices.len();
        (
            Array::new([b, n, l], x).unwrap(),
            Array::new([b, n, h], y).unwrap(),
        )
    }

    /// Windows of one split in chronological order.
    pub fn make_windows(&self, split: Split) -> Result<Vec<(Array, Array)>> {
        let len = self.split_len(split);
        if len < self.lookback + self.horizon {
            return Err(Error::Sizing(format!(
                "{} split has {len} rows, needs {}",
                split.name(),
                self.lookback + self.horizon
            )));
        }
        Ok((0..self.window_count(split)).map(|i| self.window(split, i)).collect())
    }

    /// The last `L` rows as a model input `[1, N, L]`.
    pub fn last_window(values: &Array, lookback: usize) -> Result<Array> {
        let (t, n) = (values.shape()[0], values.shape()[1]);
        if t < lookback {
            return Err(Error::Sizing(format!("need at least {lookback} rows, got {t}")));
        }
        let v = values.data();
        let mut x = Vec::with_capacity(n * lookback);
        for c in 0..n {
            x.extend((t - lookback..t).map(|r| v[r * n + c]));
        }
        Array::new([1, n, lookback], x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(rows: usize, cols: usize) -> SeriesDataset {
        let v = Array::from_fn([rows, cols], |i| i as f64);
        let names = (0..cols).map(|c| format!("c{c}")).collect();
        SeriesDataset::new(v, names, SplitRatios::STANDARD, 2, 1).unwrap()
    }

    #[test]
    fn split_rounding_sends_remainder_to_test() {
        let b = SplitRatios::STANDARD.boundaries(100);
        assert_eq!((b.train.len(), b.val.len(), b.test.len()), (70, 20, 10));
        let b = SplitRatios::STANDARD.boundaries(105);
        assert_eq!((b.train.len(), b.val.len(), b.test.len()), (73, 21, 11));
        let b = SplitRatios::SHORT.boundaries(101);
        assert_eq!((b.train.len(), b.val.len(), b.test.len()), (60, 20, 21));
    }

    #[test]
    fn ratio_parsing() {
        assert_eq!("6:2:2".parse::<SplitRatios>().unwrap(), SplitRatios::SHORT);
        assert!("7:2".parse::<SplitRatios>().is_err());
        assert!("a:b:c".parse::<SplitRatios>().is_err());
    }

    #[test]
    fn one_window_when_split_is_exactly_l_plus_tau() {
        let v = Array::from_fn([12 * 3, 1], |i| i as f64);
        let ds = SeriesDataset::new(v, vec!["a".into()], SplitRatios { train: 1.0, val: 1.0, test: 1.0 }, 8, 4).unwrap();
        assert_eq!(ds.window_count(Split::Train), 1);
        let (x, y) = ds.window(Split::Val, 0);
        assert_eq!(x.data()[0], 12.0);
        assert_eq!(y.data()[0], 12.0 + 8.0);
    }

    #[test]
    fn undersized_split_is_a_sizing_error() {
        let v = Array::zeros([20, 1]);
        let err = SeriesDataset::new(v, vec!["a".into()], SplitRatios::STANDARD, 8, 4).unwrap_err();
        assert!(matches!(err, Error::Sizing(_)));
    }

    #[test]
    fn window_layout_is_channel_major() {
        let ds = ramp(100, 2);
        let (x, y) = ds.window(Split::Train, 3);
        // rows 3,4 -> channel 0 values 6, 8; channel 1 values 7, 9
        assert_eq!(x.data(), &[6.0, 8.0, 7.0, 9.0]);
        assert_eq!(y.data(), &[10.0, 11.0]);
    }

    #[test]
    fn last_window_takes_trailing_rows() {
        let v = Array::from_fn([5, 2], |i| i as f64);
        let x = SeriesDataset::last_window(&v, 3).unwrap();
        assert_eq!(x.shape(), &[1, 2, 3]);
        assert_eq!(x.data(), &[4.0, 6.0, 8.0, 5.0, 7.0, 9.0]);
        assert!(SeriesDataset::last_window(&v, 6).is_err());
    }
}
