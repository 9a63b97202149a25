//! Strided matrix-multiply helpers shared by tensor contraction and the grid sweep.

/// A row-major-or-strided view of a matrix stored in a slice.
#[derive(Clone, Copy, Debug)]
pub(crate) struct MatRef<'a> {
    pub data: &'a [f64],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> MatRef<'a> {
    pub fn row_major(data: &'a [f64], rows: usize, cols: usize) -> Self {
        MatRef {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    pub fn t(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn check(&self) {
        if self.rows > 0 && self.cols > 0 {
            let last = (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride;
            assert!(last < self.data.len(), "matrix view exceeds its buffer");
        }
    }
}

#[derive(Debug)]
pub(crate) struct MatMut<'a> {
    pub data: &'a mut [f64],
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> MatMut<'a> {
    pub fn row_major(data: &'a mut [f64], rows: usize, cols: usize) -> Self {
        MatMut {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    fn check(&self) {
        if self.rows > 0 && self.cols > 0 {
            let last = (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride;
            assert!(last < self.data.len(), "matrix view exceeds its buffer");
        }
    }
}

/// `c <- alpha * a * b + beta * c`. With `beta == 0` the previous contents of `c` are ignored.
pub(crate) fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, c: MatMut<'_>) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert_eq!(a.rows, c.rows, "row counts differ");
    assert_eq!(b.cols, c.cols, "column counts differ");
    a.check();
    b.check();
    c.check();
    if c.rows == 0 || c.cols == 0 {
        return;
    }
    if a.cols == 0 {
        // empty inner dimension: c <- beta * c
        for i in 0..c.rows {
            for j in 0..c.cols {
                let idx = i * c.row_stride + j * c.col_stride;
                c.data[idx] = if beta == 0.0 { 0.0 } else { beta * c.data[idx] };
            }
        }
        return;
    }
    // SAFETY: every view was bounds-checked above against its backing slice, and `c` is
    // borrowed mutably so it cannot alias `a` or `b`.
    unsafe {
        gemm::gemm(
            c.rows,
            c.cols,
            a.cols,
            c.data.as_mut_ptr(),
            c.col_stride as isize,
            c.row_stride as isize,
            beta != 0.0,
            a.data.as_ptr(),
            a.col_stride as isize,
            a.row_stride as isize,
            b.data.as_ptr(),
            b.col_stride as isize,
            b.row_stride as isize,
            beta,
            alpha,
            false,
            false,
            false,
            gemm::Parallelism::None,
        );
    }
}

/// Dimensions of a three-way batched product over a buffer laid out as `[outer][k][inner]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Batched {
    pub outer: usize,
    pub inner: usize,
}

/// `out[p, j, q] = sum_i mat[i, j] * input[p, i, q]` where `mat` is `k_in x k_out` row-major.
pub(crate) fn batched_apply(
    dims: Batched,
    mat: &[f64],
    k_in: usize,
    k_out: usize,
    input: &[f64],
    out: &mut [f64],
) {
    let Batched { outer, inner } = dims;
    debug_assert_eq!(input.len(), outer * k_in * inner);
    debug_assert_eq!(out.len(), outer * k_out * inner);
    let m = MatRef::row_major(mat, k_in, k_out);
    if outer <= inner {
        for p in 0..outer {
            let x = MatRef::row_major(&input[p * k_in * inner..(p + 1) * k_in * inner], k_in, inner);
            let y = MatMut::row_major(&mut out[p * k_out * inner..(p + 1) * k_out * inner], k_out, inner);
            gemm(1.0, m.t(), x, 0.0, y);
        }
    } else {
        for q in 0..inner {
            let x = MatRef {
                data: &input[q..],
                rows: outer,
                cols: k_in,
                row_stride: k_in * inner,
                col_stride: inner,
            };
            let y = MatMut {
                data: &mut out[q..],
                rows: outer,
                cols: k_out,
                row_stride: k_out * inner,
                col_stride: inner,
            };
            gemm(1.0, x, m, 0.0, y);
        }
    }
}

/// Reverse of [`batched_apply`]: given the output adjoint, writes the input adjoint into
/// `grad_input` and accumulates the matrix adjoint into `grad_mat`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn batched_apply_backward(
    dims: Batched,
    mat: &[f64],
    k_in: usize,
    k_out: usize,
    input: &[f64],
    grad_out: &[f64],
    grad_input: Option<&mut [f64]>,
    grad_mat: &mut [f64],
) {
    let Batched { outer, inner } = dims;
    debug_assert_eq!(grad_mat.len(), k_in * k_out);
    let m = MatRef::row_major(mat, k_in, k_out);
    if outer <= inner {
        if let Some(gin) = grad_input {
            for p in 0..outer {
                let g = MatRef::row_major(
                    &grad_out[p * k_out * inner..(p + 1) * k_out * inner],
                    k_out,
                    inner,
                );
                let y = MatMut::row_major(&mut gin[p * k_in * inner..(p + 1) * k_in * inner], k_in, inner);
                gemm(1.0, m, g, 0.0, y);
            }
        }
        for p in 0..outer {
            let x = MatRef::row_major(&input[p * k_in * inner..(p + 1) * k_in * inner], k_in, inner);
            let g = MatRef::row_major(
                &grad_out[p * k_out * inner..(p + 1) * k_out * inner],
                k_out,
                inner,
            );
            gemm(1.0, x, g.t(), 1.0, MatMut::row_major(grad_mat, k_in, k_out));
        }
    } else {
        if let Some(gin) = grad_input {
            for q in 0..inner {
                let g = MatRef {
                    data: &grad_out[q..],
                    rows: outer,
                    cols: k_out,
                    row_stride: k_out * inner,
                    col_stride: inner,
                };
                let y = MatMut {
                    data: &mut gin[q..],
                    rows: outer,
                    cols: k_in,
                    row_stride: k_in * inner,
                    col_stride: inner,
                };
                gemm(1.0, g, m.t(), 0.0, y);
            }
        }
        for q in 0..inner {
            let x = MatRef {
                data: &input[q..],
                rows: outer,
                cols: k_in,
                row_stride: k_in * inner,
                col_stride: inner,
            };
            let g = MatRef {
                data: &grad_out[q..],
                rows: outer,
                cols: k_out,
                row_stride: k_out * inner,
                col_stride: inner,
            };
            gemm(1.0, x.t(), g, 1.0, MatMut::row_major(grad_mat, k_in, k_out));
        }
    }
}
