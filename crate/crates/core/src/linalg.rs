//! Small dense symmetric matrices: Cholesky, Jacobi eigendecomposition and a
//! square-root factor for positive semi-definite covariance matrices.

use crate::math::{abs, sqrt};
use crate::{Error, Result};

pub type Matrix<const N: usize> = [[f64; N]; N];

/// Eigenvalues down to this are treated as rounding noise around 0.
pub const PSD_TOLERANCE: f64 = 1e-10;

pub fn is_symmetric<const N: usize>(a: &Matrix<N>, tol: f64) -> bool {
    (0..N).all(|i| (0..i).all(|j| abs(a[i][j] - a[j][i]) <= tol))
}

pub fn transpose<const N: usize>(a: &Matrix<N>) -> Matrix<N> {
    let mut t = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn mul<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> Matrix<N> {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            c[i][j] = (0..N).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// `a a^T`.
pub fn gram<const N: usize>(a: &Matrix<N>) -> Matrix<N> {
    mul(a, &transpose(a))
}

pub fn mat_vec<const N: usize>(a: &Matrix<N>, v: &[f64; N]) -> [f64; N] {
    core::array::from_fn(|i| (0..N).map(|k| a[i][k] * v[k]).sum())
}

pub fn max_abs_diff<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            m = m.max(abs(a[i][j] - b[i][j]));
        }
    }
    m
}

/// Lower-triangular `L` with `L L^T = a`, or `None` unless `a` is
/// numerically positive definite.
pub fn cholesky<const N: usize>(a: &Matrix<N>) -> Option<Matrix<N>> {
    let mut l = [[0.0; N]; N];
    let scale = (0..N).map(|i| abs(a[i][i])).fold(0.0, f64::max);
    for j in 0..N {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 1e-13 * scale.max(1e-300)) {
            return None;
        }
        let djj = sqrt(d);
        l[j][j] = djj;
        for i in j + 1..N {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

/// Eigenvalues and eigenvectors (columns of the second matrix) of a
/// symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen<const N: usize>(a: &Matrix<N>) -> ([f64; N], Matrix<N>) {
    let mut m = *a;
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..N {
            for j in 0..i {
                off += m[i][j] * m[i][j];
            }
        }
        if off < 1e-300 {
            break;
        }
        for p in 0..N {
            for q in p + 1..N {
                if abs(m[p][q]) < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                let t = sign / (abs(theta) + sqrt(theta * theta + 1.0));
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    (core::array::from_fn(|i| m[i][i]), v)
}

pub fn min_eigenvalue<const N: usize>(a: &Matrix<N>) -> f64 {
    symmetric_eigen(a).0.iter().copied().fold(f64::INFINITY, f64::min)
}

/// A factor `F` with `F F^T = a` for a positive semi-definite `a`.
///
/// Cholesky when `a` is positive definite; otherwise `Q diag(sqrt(lambda))`
/// from the eigendecomposition, with eigenvalues in `[-PSD_TOLERANCE, 0)`
/// clipped to 0. Anything more negative is an error.
pub fn psd_factor<const N: usize>(a: &Matrix<N>) -> Result<Matrix<N>> {
    if let Some(l) = cholesky(a) {
        return Ok(l);
    }
    let (vals, vecs) = symmetric_eigen(a);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE || !min.is_finite() {
        return Err(Error::NotPositiveSemiDefinite(min));
    }
    let mut f = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            f[i][j] = vecs[i][j] * sqrt(vals[j].max(0.0));
        }
    }
    Ok(f)
}
