//! Thin bridge between `ndarray` containers and `faer` factorizations.
//!
//! Everything numerical that needs an eigendecomposition or a Cholesky
//! factorization funnels through here, keeping the backend swap-in-one-place.

use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Side};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::symmetrize;

pub(crate) fn to_faer(a: &Array2<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_faer(m: faer::MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Eigendecompose symmetric `m = V diag(d) V^T` and rebuild it with mapped
/// eigenvalues: `V diag(f(d)) V^T`. The output is exactly symmetrized.
pub(crate) fn eigen_map_reconstruct(
    m: &Array2<f64>,
    f: impl Fn(f64) -> f64,
) -> Result<Array2<f64>> {
    let p = m.nrows();
    let fm = to_faer(m);
    let eig = fm
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenFailure)?;
    let s = eig.S();
    let u = eig.U();
    let mut w = u.to_owned();
    for j in 0..p {
        let fj = f(s[j]);
        for i in 0..p {
            w[(i, j)] *= fj;
        }
    }
    let out = &w * u.transpose();
    let mut out = from_faer(out.as_ref());
    symmetrize(&mut out);
    Ok(out)
}

/// Smallest eigenvalue of a symmetric matrix.
pub(crate) fn smallest_eigenvalue(m: &Array2<f64>) -> Result<f64> {
    let fm = to_faer(m);
    let eig = fm
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::EigenFailure)?;
    let s = eig.S();
    Ok((0..m.nrows()).map(|i| s[i]).fold(f64::INFINITY, f64::min))
}

fn llt_of(m: &Array2<f64>, what: &'static str) -> Result<Llt<f64>> {
    to_faer(m)
        .llt(Side::Lower)
        .map_err(|_| Error::CholeskyFailure { what })
}

/// Lower Cholesky factor `L` with `L L^T = m`.
pub(crate) fn cholesky_lower(m: &Array2<f64>, what: &'static str) -> Result<Array2<f64>> {
    let llt = llt_of(m, what)?;
    let l = llt.L();
    let p = m.nrows();
    Ok(Array2::from_shape_fn(
        (p, p),
        |(i, j)| if j <= i { l[(i, j)] } else { 0.0 },
    ))
}

/// `ln det(m)` for symmetric positive definite `m`, via Cholesky.
pub(crate) fn logdet_pd(m: &Array2<f64>, what: &'static str) -> Result<f64> {
    let llt = llt_of(m, what)?;
    let l = llt.L();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        acc += l[(i, i)].ln();
    }
    Ok(2.0 * acc)
}

/// Inverse of a symmetric positive definite matrix, exactly symmetrized.
pub(crate) fn inv_pd(m: &Array2<f64>, what: &'static str) -> Result<Array2<f64>> {
    let llt = llt_of(m, what)?;
    let p = m.nrows();
    let inv = llt.solve(&Mat::<f64>::identity(p, p));
    let mut inv = from_faer(inv.as_ref());
    symmetrize(&mut inv);
    Ok(inv)
}
