//! Basis changes that leave every picture value unchanged.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gwm::{GwmModel, Side};
use crate::tensor::{contract, DenseTensor};

const RESIDUAL_LIMIT: f64 = 1e-8;

fn to_matrix(t: &DenseTensor) -> DMatrix<f64> {
    let (r, c) = (t.shape()[0], t.shape()[1]);
    DMatrix::from_row_slice(r, c, t.data())
}

fn from_matrix(m: &DMatrix<f64>) -> DenseTensor {
    let data = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect();
    DenseTensor::new(vec![m.nrows(), m.ncols()], data).expect("matrix shape")
}

/// Replaces mode `mode` of `t` by `sum_j t[.., j, ..] * a[j, i]`, keeping mode order.
fn mode_product(t: &DenseTensor, mode: usize, a: &DenseTensor) -> Result<DenseTensor> {
    let c = contract(t, a, &[(mode, 0)])?;
    // the new index was appended last; move it back into place
    let order = t.order();
    let mut perm: Vec<usize> = (0..order - 1).collect();
    perm.insert(mode, order - 1);
    c.permute(&perm)
}

/// Inverse of a square matrix, rejected when `P * P^-1` strays from the identity.
pub(crate) fn checked_inverse(p: &DenseTensor) -> Result<DenseTensor> {
    if p.order() != 2 || p.shape()[0] != p.shape()[1] {
        return Err(Error::InvalidParameter(format!(
            "basis change must be a square matrix, got shape {:?}",
            p.shape()
        )));
    }
    let m = to_matrix(p);
    let inv = m.clone().try_inverse().ok_or(Error::SingularMatrix {
        residual: f64::INFINITY,
    })?;
    let residual = (&m * &inv - DMatrix::identity(m.nrows(), m.ncols())).amax();
    if !(residual < RESIDUAL_LIMIT) {
        return Err(Error::SingularMatrix { residual });
    }
    Ok(from_matrix(&inv))
}

/// Gauge transform: `P^-1` on the west and north modes of every symbol tensor, `P` on the
/// east and south modes, and the compensating maps on the border vectors.
///
/// Each internal edge then carries a `P * P^-1` pair and each border contraction is
/// unchanged, so the new model computes the same value on every picture.
pub fn change_of_basis(model: &GwmModel, p: &DenseTensor) -> Result<GwmModel> {
    let d = model.dim();
    if p.shape() != [d, d] {
        return Err(Error::InvalidParameter(format!(
            "basis change must be {d}x{d}, got shape {:?}",
            p.shape()
        )));
    }
    let p_inv = checked_inverse(p)?;
    let p_inv_t = p_inv.permute(&[1, 0])?;

    let mut out = model.clone();
    for (k, &symbol) in model.alphabet().iter().enumerate() {
        let mut t = model.tensors()[k].clone();
        t = mode_product(&t, Side::West as usize, &p_inv_t)?;
        t = mode_product(&t, Side::North as usize, &p_inv_t)?;
        t = mode_product(&t, Side::East as usize, p)?;
        t = mode_product(&t, Side::South as usize, p)?;
        out.set_tensor(symbol, t)?;
    }
    for side in [Side::West, Side::North] {
        out.set_border(side, mode_product(model.border(side), 0, p)?)?;
    }
    for side in [Side::East, Side::South] {
        out.set_border(side, mode_product(model.border(side), 0, &p_inv_t)?)?;
    }
    Ok(out)
}
