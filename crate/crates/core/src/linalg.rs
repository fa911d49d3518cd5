//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance used for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-8;

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    Ok(())
}

/// Rejects matrices whose asymmetry exceeds `tol * (1 + max |m_ij|)`.
pub fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    check_square(m)?;
    let scale = 1.0 + m.amax();
    let asym = max_asymmetry(m);
    if asym > tol * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigen().eigenvalues.min()
}

/// Checks `lambda_min(m) >= -tol * max(trace(m), 0) - 1e-14`.
pub fn check_psd(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    check_symmetric(m, 1e-10)?;
    let min_eig = min_eigenvalue(m);
    let bound = tol * m.trace().max(0.0) + 1e-14;
    if min_eig < -bound {
        return Err(Error::NotPsd {
            min_eig,
            tol: bound,
        });
    }
    Ok(())
}

/// `sum_ij a_ij b_ij`.
pub fn frobenius_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Quadratic form `w^T K w` with a fixed summation order.
pub fn quad_form(k: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let n = w.len();
    let mut total = 0.0;
    for j in 0..n {
        if w[j] == 0.0 {
            continue;
        }
        let mut col = 0.0;
        for i in 0..n {
            col += k[(i, j)] * w[i];
        }
        total += col * w[j];
    }
    total
}
