//! Dense row-major `f64` arrays.
//!
//! [`Array`] is the value type carried by every node of the autodiff graph.
//! Operations here are plain eager kernels with no gradient bookkeeping.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct Array {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for Array {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.data.len() <= 16 {
            write!(f, "Array{:?} {:?}", self.shape, self.data)
        } else {
            write!(f, "Array{:?} [{} values]", self.shape, self.data.len())
        }
    }
}

pub(crate) fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl Array {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        if numel(&shape) != data.len() {
            return Err(Error::dim("Array::new", &shape, &[data.len()]));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, 0.0)
    }

    pub fn ones(shape: impl Into<Vec<usize>>) -> Self {
        Self::full(shape, 1.0)
    }

    pub fn full(shape: impl Into<Vec<usize>>, value: f64) -> Self {
        let shape = shape.into();
        let data = vec![value; numel(&shape)];
        Self { shape, data }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            data: vec![value],
        }
    }

    /// One-dimensional array from a slice.
    pub fn vector(values: &[f64]) -> Self {
        Self {
            shape: vec![values.len()],
            data: values.to_vec(),
        }
    }

    /// Two-dimensional array from nested rows. Panics on ragged input.
    pub fn matrix(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged matrix rows");
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self {
            shape: vec![rows.len(), cols],
            data,
        }
    }

    pub fn from_fn(shape: impl Into<Vec<usize>>, mut f: impl FnMut(usize) -> f64) -> Self {
        let shape = shape.into();
        let data = (0..numel(&shape)).map(&mut f).collect();
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Value of a single-element array.
    pub fn item(&self) -> f64 {
        assert_eq!(self.data.len(), 1, "item() on array of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn reshape(&self, shape: impl Into<Vec<usize>>) -> Result<Self> {
        let shape = shape.into();
        if numel(&shape) != self.data.len() {
            return Err(Error::dim("reshape", &self.shape, &shape));
        }
        Ok(Self {
            shape,
            data: self.data.clone(),
        })
    }

    pub(crate) fn with_shape(mut self, shape: Vec<usize>) -> Self {
        debug_assert_eq!(numel(&shape), self.data.len());
        self.shape = shape;
        self
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Array, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim("zip", &self.shape, &other.shape));
        }
        Ok(Self {
            shape: self.shape.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Array) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max_abs_diff(&self, other: &Array) -> f64 {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Splits the shape around `axis` into (outer, extent, inner) element counts.
    pub(crate) fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
        let outer = numel(&shape[..axis]);
        let inner = numel(&shape[axis + 1..]);
        (outer, shape[axis], inner)
    }

    /// `[.., m, p] x [p, q] -> [.., m, q]`.
    pub fn matmul(&self, rhs: &Array) -> Result<Self> {
        if self.ndim() < 2 || rhs.ndim() != 2 || self.shape[self.ndim() - 1] != rhs.shape[0] {
            return Err(Error::dim("matmul", &self.shape, &rhs.shape));
        }
        let p = rhs.shape[0];
        let q = rhs.shape[1];
        let rows = self.data.len() / p.max(1);
        let mut out = vec![0.0; rows * q];
        gemm(rows, p, q, &self.data, p, 1, &rhs.data, q, 1, &mut out);
        let mut shape = self.shape.clone();
        *shape.last_mut().unwrap() = q;
        Ok(Self { shape, data: out })
    }

    /// Matrix view of the array: leading axes collapsed into rows.
    pub(crate) fn rows_cols(&self) -> (usize, usize) {
        let cols = *self.shape.last().unwrap_or(&1);
        (self.data.len() / cols.max(1), cols)
    }

    /// Permutes two axes.
    pub fn swap_axes(&self, a: usize, b: usize) -> Result<Self> {
        let nd = self.ndim();
        if a >= nd || b >= nd {
            return Err(Error::dim("swap_axes", &self.shape, &[a, b]));
        }
        if a == b {
            return Ok(self.clone());
        }
        let mut out_shape = self.shape.clone();
        out_shape.swap(a, b);
        let in_strides = strides(&self.shape);
        let mut perm_strides = in_strides.clone();
        perm_strides.swap(a, b);
        let mut out = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; nd];
        for _ in 0..self.data.len() {
            let off: usize = idx.iter().zip(&perm_strides).map(|(i, s)| i * s).sum();
            out.push(self.data[off]);
            for d in (0..nd).rev() {
                idx[d] += 1;
                if idx[d] < out_shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self {
            shape: out_shape,
            data: out,
        })
    }

    /// Half-open range `start..end` along `axis`.
    pub fn slice_axis(&self, axis: usize, start: usize, end: usize) -> Result<Self> {
        if axis >= self.ndim() || start > end || end > self.shape[axis] {
            return Err(Error::dim("slice", &self.shape, &[axis, start, end]));
        }
        let (outer, extent, inner) = Self::axis_split(&self.shape, axis);
        let width = end - start;
        let mut out = Vec::with_capacity(outer * width * inner);
        for o in 0..outer {
            let base = o * extent * inner;
            out.extend_from_slice(&self.data[base + start * inner..base + end * inner]);
        }
        let mut shape = self.shape.clone();
        shape[axis] = width;
        Ok(Self { shape, data: out })
    }

    pub fn concat(parts: &[&Array], axis: usize) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat of zero arrays"))?;
        if axis >= first.ndim() {
            return Err(Error::dim("concat", &first.shape, &[axis]));
        }
        for p in parts {
            let ok = p.ndim() == first.ndim()
                && p.shape
                    .iter()
                    .zip(&first.shape)
                    .enumerate()
                    .all(|(d, (a, b))| d == axis || a == b);
            if !ok {
                return Err(Error::dim("concat", &first.shape, &p.shape));
            }
        }
        let (outer, _, inner) = Self::axis_split(&first.shape, axis);
        let total: usize = parts.iter().map(|p| p.shape[axis]).sum();
        let mut out = Vec::with_capacity(outer * total * inner);
        for o in 0..outer {
            for p in parts {
                let chunk = p.shape[axis] * inner;
                out.extend_from_slice(&p.data[o * chunk..(o + 1) * chunk]);
            }
        }
        let mut shape = first.shape.clone();
        shape[axis] = total;
        Ok(Self { shape, data: out })
    }

    /// Expands extent-1 axes and prepends leading axes to reach `target`.
    pub fn broadcast_to(&self, target: &[usize]) -> Result<Self> {
        let aligned = broadcast_alignment(&self.shape, target)
            .ok_or_else(|| Error::dim("broadcast", &self.shape, target))?;
        let src_strides = strides(&aligned);
        let nd = target.len();
        let eff: Vec<usize> = (0..nd)
            .map(|d| if aligned[d] == 1 { 0 } else { src_strides[d] })
            .collect();
        let n = numel(target);
        let mut out = Vec::with_capacity(n);
        let mut idx = vec![0usize; nd];
        for _ in 0..n {
            let off: usize = idx.iter().zip(&eff).map(|(i, s)| i * s).sum();
            out.push(self.data[off]);
            for d in (0..nd).rev() {
                idx[d] += 1;
                if idx[d] < target[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self {
            shape: target.to_vec(),
            data: out,
        })
    }

    /// Adjoint of [`Array::broadcast_to`]: sums over broadcast axes to reach `shape`.
    pub fn sum_to_shape(&self, shape: &[usize]) -> Result<Self> {
        let aligned = broadcast_alignment(shape, &self.shape)
            .ok_or_else(|| Error::dim("sum_to_shape", &self.shape, shape))?;
        let dst_strides = strides(&aligned);
        let nd = self.ndim();
        let eff: Vec<usize> = (0..nd)
            .map(|d| if aligned[d] == 1 { 0 } else { dst_strides[d] })
            .collect();
        let mut out = vec![0.0; numel(shape)];
        let mut idx = vec![0usize; nd];
        for &v in &self.data {
            let off: usize = idx.iter().zip(&eff).map(|(i, s)| i * s).sum();
            out[off] += v;
            for d in (0..nd).rev() {
                idx[d] += 1;
                if idx[d] < self.shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self {
            shape: shape.to_vec(),
            data: out,
        })
    }
}

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * shape[d + 1];
    }
    s
}

/// Left-pads `src` with ones to the rank of `target` if every axis is either
/// equal or of extent 1.
fn broadcast_alignment(src: &[usize], target: &[usize]) -> Option<Vec<usize>> {
    if src.len() > target.len() {
        return None;
    }
    let mut aligned = vec![1usize; target.len() - src.len()];
    aligned.extend_from_slice(src);
    aligned
        .iter()
        .zip(target)
        .all(|(&a, &t)| a == t || a == 1)
        .then_some(aligned)
}

/// `c = a * b` for an `m x k` by `k x n` product with arbitrary row/column strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(0.0);
        return;
    }
    assert!(c.len() >= m * n);
    // SAFETY: the extents and strides describe regions inside `a`, `b` and `c`
    // as checked by the callers; `c` is exclusively borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}
