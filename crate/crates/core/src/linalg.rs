//! Small dense complex matrices (d = 2 or 4) and the handful of kernels the
//! pipelines need on top of nalgebra.

use nalgebra::{DMatrix, RowDVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type RealMatrix = DMatrix<f64>;
pub type RowVector = RowDVector<Complex64>;

/// Pivots smaller than this, relative to the largest entry, mark a matrix as
/// singular.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// The all-one row vector `e`.
pub fn ones_row(d: usize) -> RowVector {
    RowVector::from_element(d, c(1.0))
}

pub fn to_complex(m: &RealMatrix) -> ComplexMatrix {
    m.map(c)
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_row(v: &RowVector) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Solves `a x = b` by row-pivoted LU.
pub fn solve(a: &ComplexMatrix, b: &ComplexMatrix, context: &'static str) -> Result<ComplexMatrix> {
    let scale = max_abs(a);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularMatrix { context });
    }
    let lu = a.clone().lu();
    let u = lu.u();
    if u.diagonal().iter().any(|p| p.norm() <= PIVOT_TOLERANCE * scale) {
        return Err(Error::SingularMatrix { context });
    }
    lu.solve(b).ok_or(Error::SingularMatrix { context })
}

pub fn inverse(a: &ComplexMatrix, context: &'static str) -> Result<ComplexMatrix> {
    solve(a, &identity(a.nrows()), context)
}

/// Solves the row-vector system `x a = b`.
pub fn solve_row(a: &ComplexMatrix, b: &RowVector, context: &'static str) -> Result<RowVector> {
    let rhs = ComplexMatrix::from_column_slice(b.len(), 1, b.as_slice());
    let x = solve(&a.transpose(), &rhs, context)?;
    Ok(RowVector::from_iterator(x.len(), x.iter().copied()))
}

/// Eigenvalues via the complex Schur form.
pub fn eigenvalues(a: &ComplexMatrix) -> Vec<Complex64> {
    let (_, t) = a.clone().schur().unpack();
    t.diagonal().iter().copied().collect()
}

pub fn spectral_radius(a: &ComplexMatrix) -> f64 {
    eigenvalues(a).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn real_spectral_radius(a: &RealMatrix) -> f64 {
    spectral_radius(&to_complex(a))
}

pub fn matrix_power(a: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let mut out = identity(a.nrows());
    for _ in 0..k {
        out = &out * a;
    }
    out
}
