//! Top eigenpair of a small symmetric matrix by cyclic Jacobi rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg;

/// Full symmetric eigendecomposition (unsorted eigenvalues, eigenvectors
/// in the columns of the second matrix).
pub fn jacobi_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    linalg::check_symmetric(m, 1e-10)?;
    let n = m.nrows();
    let mut a = m.clone();
    linalg::symmetrize(&mut a);
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm();
    if n <= 1 || scale == 0.0 {
        return Ok(((0..n).map(|i| a[(i, i)]).collect(), v));
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Ok(((0..n).map(|i| a[(i, i)]).collect(), v))
}

/// Largest eigenvalue and a unit eigenvector. The eigenvector sign is fixed
/// so that its largest-magnitude entry is positive.
pub fn top_eig(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let (values, vectors) = jacobi_eigen(m)?;
    let n = values.len();
    if n == 0 {
        return Ok((0.0, DVector::zeros(0)));
    }
    let mut best = 0;
    for i in 1..n {
        if values[i] > values[best] {
            best = i;
        }
    }
    let mut v = vectors.column(best).into_owned();
    let norm = v.norm();
    if norm > 0.0 {
        v /= norm;
    }
    let mut pivot = 0;
    for i in 1..n {
        if v[i].abs() > v[pivot].abs() + 1e-12 {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        v = -v;
    }
    Ok((values[best], v))
}
