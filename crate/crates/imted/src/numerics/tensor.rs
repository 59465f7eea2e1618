//! Flat row-major n-dimensional tensors.
//!
//! Storage only — differentiation lives in [`super::tape`]. The element
//! type is generic so the same model code runs in f32 for training and
//! in f64 for finite-difference gradient checks.

use crate::error::{Error, Result};

/// Scalar element type. Implemented for `f32` and `f64`.
pub trait Elem:
    num_traits::Float
    + num_traits::NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Elem for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Elem for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Shorthand for converting an `f64` constant into the working precision.
#[inline]
pub fn el<T: Elem>(v: f64) -> T {
    T::from_f64(v)
}

/// Row-major dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Elem> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Contract(format!(
                "tensor data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::zero(); n],
        }
    }

    pub fn ones(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![T::one(); n],
        }
    }

    pub fn full(shape: &[usize], v: T) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![v; n],
        }
    }

    pub fn scalar(v: T) -> Self {
        Tensor {
            shape: vec![1],
            data: vec![v],
        }
    }

    pub fn from_f64_slice(shape: &[usize], data: &[f64]) -> Result<Self> {
        Tensor::new(shape.to_vec(), data.iter().map(|&v| el(v)).collect())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Single element of a numel-1 tensor.
    pub fn item(&self) -> T {
        debug_assert_eq!(self.numel(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    pub fn at(&self, idx: &[usize]) -> T {
        self.data[flat_index(&self.shape, idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let i = flat_index(&self.shape, idx);
        self.data[i] = v;
    }

    /// Same data, new shape (must preserve numel).
    pub fn reshape(mut self, shape: &[usize]) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                lhs: self.shape.clone(),
                rhs: shape.to_vec(),
            });
        }
        self.shape = shape.to_vec();
        Ok(self)
    }

    /// Lossy precision conversion.
    pub fn cast<U: Elem>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Flat offset of a multi-index in a row-major shape.
pub fn flat_index(shape: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), idx.len());
    let mut flat = 0;
    for (d, (&s, &i)) in shape.iter().zip(idx).enumerate() {
        debug_assert!(i < s, "index {i} out of range {s} at dim {d}");
        flat = flat * s + i;
    }
    flat
}

/// Row-major strides for a shape.
pub fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * shape[d + 1];
    }
    s
}

/// Decompose a flat offset into a multi-index.
pub fn unravel(shape: &[usize], mut flat: usize) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

/// Right-aligned broadcast shape of two operands (numpy rules: trailing
/// dims must match or be 1; missing leading dims count as 1).
pub fn broadcast_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for d in 0..rank {
        let da = if d < rank - a.len() { 1 } else { a[d - (rank - a.len())] };
        let db = if d < rank - b.len() { 1 } else { b[d - (rank - b.len())] };
        if da != db && da != 1 && db != 1 {
            return Err(Error::ShapeMismatch {
                op,
                lhs: a.to_vec(),
                rhs: b.to_vec(),
            });
        }
        out[d] = da.max(db);
    }
    Ok(out)
}

/// Flat offset into an operand of shape `src` for a position `idx` in the
/// broadcast output (broadcast dims read position 0).
pub fn broadcast_offset(src: &[usize], idx: &[usize]) -> usize {
    let lead = idx.len() - src.len();
    let mut flat = 0;
    for (d, &s) in src.iter().enumerate() {
        let i = if s == 1 { 0 } else { idx[lead + d] };
        flat = flat * s + i;
    }
    flat
}

/// Sum a gradient of `from` shape down to the (broadcastable) `to` shape.
pub fn reduce_to_shape<T: Elem>(grad: &[T], from: &[usize], to: &[usize]) -> Vec<T> {
    if from == to {
        return grad.to_vec();
    }
    let n_to: usize = to.iter().product();
    let mut out = vec![T::zero(); n_to];
    let mut idx = vec![0usize; from.len()];
    for &g in grad {
        out[broadcast_offset(to, &idx)] += g;
        // advance row-major counter
        for d in (0..from.len()).rev() {
            idx[d] += 1;
            if idx[d] < from[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_data_invariant() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn flat_and_unravel_roundtrip() {
        let shape = [2, 3, 4];
        for flat in 0..24 {
            let idx = unravel(&shape, flat);
            assert_eq!(flat_index(&shape, &idx), flat);
        }
    }

    #[test]
    fn broadcast_rules() {
        assert_eq!(broadcast_shape("t", &[2, 3], &[3]).unwrap(), vec![2, 3]);
        assert_eq!(broadcast_shape("t", &[4, 1, 3], &[2, 1]).unwrap(), vec![4, 2, 3]);
        assert_eq!(broadcast_shape("t", &[1], &[5, 2]).unwrap(), vec![5, 2]);
        assert!(broadcast_shape("t", &[2, 3], &[2, 4]).is_err());
    }

    #[test]
    fn reduce_to_shape_sums_broadcast_dims() {
        // grad over [2,3] reduced to [3] sums the leading axis
        let grad = [1.0f64, 2.0, 3.0, 10.0, 20.0, 30.0];
        let r = reduce_to_shape(&grad, &[2, 3], &[3]);
        assert_eq!(r, vec![11.0, 22.0, 33.0]);
        let r = reduce_to_shape(&grad, &[2, 3], &[2, 1]);
        assert_eq!(r, vec![6.0, 60.0]);
    }
}
