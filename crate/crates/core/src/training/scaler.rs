use crate::array::Array;
use crate::data::{SeriesDataset, Split};
use crate::error::{Error, Result};

/// Per-column min-max scaling to `[0, 1]`. A constant column maps to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    /// Fits on `[rows, columns]`.
    pub fn fit(values: &Array) -> Result<Self> {
        if values.ndim() != 2 || values.shape()[0] == 0 {
            return Err(Error::contract(format!("scaler needs a non-empty [rows, columns] array, got {:?}", values.shape())));
        }
        let n = values.shape()[1];
        let mut min = vec![f64::INFINITY; n];
        let mut max = vec![f64::NEG_INFINITY; n];
        for row in values.data().chunks(n) {
            for (c, &v) in row.iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        Ok(Self { min, max })
    }

    /// Fits on the training split only and scales the whole series with it.
    pub fn fit_dataset(data: &SeriesDataset) -> Result<(SeriesDataset, Self)> {
        let scaler = Self::fit(&data.split_values(Split::Train))?;
        let scaled = data.with_values(scaler.transform(data.values())?)?;
        Ok((scaled, scaler))
    }

    /// Identity on every column.
    pub fn identity(columns: usize) -> Self {
        Self {
            min: vec![0.0; columns],
            max: vec![1.0; columns],
        }
    }

    pub fn columns(&self) -> usize {
        self.min.len()
    }

    fn span(&self, c: usize) -> Option<f64> {
        let s = self.max[c] - self.min[c];
        (s > 0.0).then_some(s)
    }

    /// Applies `f(value, column)` where the column is axis `axis` of `values`.
    fn apply(&self, values: &Array, axis: usize, f: impl Fn(f64, usize) -> f64) -> Result<Array> {
        if axis >= values.ndim() || values.shape()[axis] != self.columns() {
            return Err(Error::dim("scaler", values.shape(), &[self.columns()]));
        }
        let (_, extent, inner) = Array::axis_split(values.shape(), axis);
        let mut out = values.clone();
        for (i, v) in out.data_mut().iter_mut().enumerate() {
            *v = f(*v, (i / inner) % extent);
        }
        Ok(out)
    }

    /// Scales `[rows, columns]`.
    pub fn transform(&self, values: &Array) -> Result<Array> {
        self.transform_axis(values, values.ndim().saturating_sub(1))
    }

    pub fn inverse_transform(&self, values: &Array) -> Result<Array> {
        self.inverse_axis(values, values.ndim().saturating_sub(1))
    }

    /// Scales an array whose channel axis is `axis`, e.g. `[B, N, τ]` with axis 1.
    pub fn transform_axis(&self, values: &Array, axis: usize) -> Result<Array> {
        self.apply(values, axis, |v, c| match self.span(c) {
            Some(s) => (v - self.min[c]) / s,
            None => 0.0,
        })
    }

    pub fn inverse_axis(&self, values: &Array, axis: usize) -> Result<Array> {
        self.apply(values, axis, |v, c| match self.span(c) {
            Some(s) => v * s + self.min[c],
            None => self.min[c],
        })
    }

    pub fn to_text(&self) -> (String, String) {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",");
        (join(&self.min), join(&self.max))
    }

    pub fn from_text(min: &str, max: &str) -> Result<Self> {
        let parse = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Integrity(format!("bad scaler value `{t}`"))))
                .collect()
        };
        let (min, max) = (parse(min)?, parse(max)?);
        if min.len() != max.len() {
            return Err(Error::Integrity("scaler min/max lengths differ".into()));
        }
        Ok(Self { min, max })
    }
}
