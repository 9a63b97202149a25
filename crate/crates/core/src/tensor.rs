//! Dense real tensors and contraction primitives.
//!
//! Storage is a flat row-major buffer (last index fastest) plus a shape. An
//! order-0 tensor has an empty shape and exactly one element. Every operation
//! returns a fresh tensor; nothing mutates its inputs.

use std::fmt;

use crate::error::{Error, Result};
use crate::kernel::{gemm, MatMut, MatRef};

#[derive(Clone, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl fmt::Debug for DenseTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DenseTensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish()
    }
}

fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for k in (0..shape.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * shape[k + 1];
    }
    strides
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if let Some(k) = shape.iter().position(|&e| e == 0) {
            return Err(Error::InvalidTensor(format!("mode {k} has zero extent")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::InvalidTensor(format!(
                "shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        DenseTensor::filled(shape, 0.0)
    }

    pub fn filled(shape: &[usize], value: f64) -> Self {
        assert!(shape.iter().all(|&e| e > 0), "extents must be positive");
        let len = shape.iter().product();
        DenseTensor {
            shape: shape.to_vec(),
            data: vec![value; len],
        }
    }

    pub fn scalar(value: f64) -> Self {
        DenseTensor {
            shape: Vec::new(),
            data: vec![value],
        }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "vectors must be non-empty");
        DenseTensor {
            shape: vec![values.len()],
            data: values,
        }
    }

    /// `n x n` identity matrix.
    pub fn identity(n: usize) -> Self {
        let mut t = DenseTensor::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    /// Unit vector `e_index` of length `n`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut t = DenseTensor::zeros(&[n]);
        t.data[index] = 1.0;
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn order(&self) -> usize {
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

    /// Value of an order-0 tensor.
    pub fn scalar_value(&self) -> Option<f64> {
        (self.shape.is_empty()).then(|| self.data[0])
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index has wrong order");
        let mut off = 0;
        for (k, (&i, &e)) in index.iter().zip(&self.shape).enumerate() {
            assert!(i < e, "index {i} out of range on mode {k} (extent {e})");
            off = off * e + i;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|x| c * x)
    }

    /// `self + c * other`, for tensors of identical shape.
    pub fn add_scaled(&self, other: &DenseTensor, c: f64) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::InvalidTensor(format!(
                "cannot add shapes {:?} and {:?}",
                self.shape, other.shape
            )));
        }
        Ok(DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + c * b).collect(),
        })
    }

    /// Same data, new shape with the same number of entries.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<Self> {
        DenseTensor::new(shape, self.data.clone())
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    /// Reorders modes: mode `k` of the result is mode `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let order = self.order();
        if perm.len() != order {
            return Err(Error::InvalidParameter(format!(
                "permutation of length {} for tensor of order {order}",
                perm.len()
            )));
        }
        let mut seen = vec![false; order];
        for &p in perm {
            if p >= order {
                return Err(Error::ModeOutOfRange { mode: p, order });
            }
            if seen[p] {
                return Err(Error::RepeatedMode(p));
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }

        let src_strides = self.strides();
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let strides: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        let mut index = vec![0usize; order];
        let mut src = 0usize;
        for _ in 0..self.data.len() {
            data.push(self.data[src]);
            // odometer increment over the destination index
            for k in (0..order).rev() {
                index[k] += 1;
                src += strides[k];
                if index[k] < new_shape[k] {
                    break;
                }
                src -= strides[k] * new_shape[k];
                index[k] = 0;
            }
        }
        Ok(DenseTensor {
            shape: new_shape,
            data,
        })
    }

    /// Inverse permutation of `perm`.
    pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
        let mut inv = vec![0; perm.len()];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        inv
    }
}

/// Tensor product: entries `a[i] * b[j]`, modes of `a` followed by modes of `b`.
pub fn outer(a: &DenseTensor, b: &DenseTensor) -> DenseTensor {
    let mut data = Vec::with_capacity(a.len() * b.len());
    for &x in &a.data {
        data.extend(b.data.iter().map(|&y| x * y));
    }
    let mut shape = a.shape.clone();
    shape.extend_from_slice(&b.shape);
    DenseTensor { shape, data }
}

fn check_modes(order: usize, modes: impl IntoIterator<Item = usize>) -> Result<()> {
    let mut seen = vec![false; order];
    for m in modes {
        if m >= order {
            return Err(Error::ModeOutOfRange { mode: m, order });
        }
        if seen[m] {
            return Err(Error::RepeatedMode(m));
        }
        seen[m] = true;
    }
    Ok(())
}

/// Contracts mode `pairs[k].0` of `a` against mode `pairs[k].1` of `b` for every `k`.
///
/// The result carries the free modes of `a` (in order) followed by the free modes of `b`.
/// Implemented as permute, reshape to matrices, multiply.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    check_modes(a.order(), pairs.iter().map(|p| p.0))?;
    check_modes(b.order(), pairs.iter().map(|p| p.1))?;
    for &(i, j) in pairs {
        if a.shape[i] != b.shape[j] {
            return Err(Error::ShapeMismatch {
                left_mode: i,
                right_mode: j,
                left_extent: a.shape[i],
                right_extent: b.shape[j],
            });
        }
    }
    if pairs.is_empty() {
        return Ok(outer(a, b));
    }

    let free_a: Vec<usize> = (0..a.order()).filter(|m| !pairs.iter().any(|p| p.0 == *m)).collect();
    let free_b: Vec<usize> = (0..b.order()).filter(|m| !pairs.iter().any(|p| p.1 == *m)).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let ap = a.permute(&perm_a)?;
    let bp = b.permute(&perm_b)?;

    let rows: usize = free_a.iter().map(|&m| a.shape[m]).product();
    let inner: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let cols: usize = free_b.iter().map(|&m| b.shape[m]).product();

    let mut data = vec![0.0; rows * cols];
    gemm(
        1.0,
        MatRef::row_major(&ap.data, rows, inner),
        MatRef::row_major(&bp.data, inner, cols),
        0.0,
        MatMut::row_major(&mut data, rows, cols),
    );
    let shape: Vec<usize> = free_a
        .iter()
        .map(|&m| a.shape[m])
        .chain(free_b.iter().map(|&m| b.shape[m]))
        .collect();
    Ok(DenseTensor { shape, data })
}

/// Sums `a` over the diagonal of each pair of its own modes (a generalised trace).
pub fn self_contract(a: &DenseTensor, pairs: &[(usize, usize)]) -> Result<DenseTensor> {
    check_modes(a.order(), pairs.iter().flat_map(|p| [p.0, p.1]))?;
    for &(i, j) in pairs {
        if a.shape[i] != a.shape[j] {
            return Err(Error::ShapeMismatch {
                left_mode: i,
                right_mode: j,
                left_extent: a.shape[i],
                right_extent: a.shape[j],
            });
        }
    }
    if pairs.is_empty() {
        return Ok(a.clone());
    }
    let free: Vec<usize> = (0..a.order())
        .filter(|m| !pairs.iter().any(|p| p.0 == *m || p.1 == *m))
        .collect();
    let perm: Vec<usize> = free
        .iter()
        .copied()
        .chain(pairs.iter().map(|p| p.0))
        .chain(pairs.iter().map(|p| p.1))
        .collect();
    let ap = a.permute(&perm)?;
    let outer_len: usize = free.iter().map(|&m| a.shape[m]).product();
    let diag: usize = pairs.iter().map(|p| a.shape[p.0]).product();
    let block = diag * diag;

    // within a block, the paired indices (i_1..i_k, j_1..j_k) are equal exactly when the
    // flattened row index equals the flattened column index
    let data: Vec<f64> = (0..outer_len)
        .map(|f| (0..diag).map(|k| ap.data[f * block + k * diag + k]).sum())
        .collect();
    let shape = free.iter().map(|&m| a.shape[m]).collect();
    Ok(DenseTensor { shape, data })
}

/// Central finite-difference gradient of a scalar function, one entry at a time.
pub fn finite_difference_gradient(
    f: impl Fn(&DenseTensor) -> f64,
    x: &DenseTensor,
    step: f64,
) -> Result<DenseTensor> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    let mut grad = DenseTensor::zeros_like(x);
    let mut probe = x.clone();
    for k in 0..x.len() {
        let orig = probe.data[k];
        probe.data[k] = orig + step;
        let up = f(&probe);
        probe.data[k] = orig - step;
        let down = f(&probe);
        probe.data[k] = orig;
        grad.data[k] = (up - down) / (2.0 * step);
    }
    Ok(grad)
}

impl DenseTensor {
    pub fn zeros_like(other: &DenseTensor) -> Self {
        DenseTensor {
            shape: other.shape.clone(),
            data: vec![0.0; other.data.len()],
        }
    }
}
