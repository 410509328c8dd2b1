//! Small complex linear-algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

/// Thin SVD with singular values sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

pub fn sorted_svd(m: &CMat) -> Result<SortedSvd> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("svd"));
    }
    let svd = m
        .clone()
        .try_svd(true, true, 1e-14, 10_000)
        .ok_or(Error::SvdFailed)?;
    let u = svd.u.ok_or(Error::SvdFailed)?;
    let v_t = svd.v_t.ok_or(Error::SvdFailed)?;
    let s = svd.singular_values;

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let u = CMat::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    // v_t rows are conjugated right singular vectors
    let v = CMat::from_fn(v_t.ncols(), order.len(), |i, j| v_t[(order[j], i)].conj());
    let singular_values = order.iter().map(|&i| s[i]).collect();
    Ok(SortedSvd {
        u,
        singular_values,
        v,
    })
}

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Least-squares / minimum-norm solution of `a x = b` through the pseudo-inverse.
pub fn pinv_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let svd = a
        .clone()
        .try_svd(true, true, 1e-14, 10_000)
        .ok_or(Error::SvdFailed)?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    svd.solve(b, tol).map_err(|_| Error::SvdFailed)
}

/// Solves `a x = b` for Hermitian positive definite `a`, falling back to the
/// pseudo-inverse when the Cholesky factorization breaks down. The flag is
/// `true` when the fallback was taken.
pub fn hermitian_solve(a: &CMat, b: &CMat) -> Result<(CMat, bool)> {
    match a.clone().cholesky() {
        Some(ch) => {
            let x = ch.solve(b);
            if is_finite(&x) {
                return Ok((x, false));
            }
            Ok((pinv_solve(a, b)?, true))
        }
        None => Ok((pinv_solve(a, b)?, true)),
    }
}

/// Natural log-determinant of a Hermitian positive definite matrix.
pub fn logdet_hpd(a: &CMat) -> Option<f64> {
    let ch = a.clone().cholesky()?;
    let l = ch.l_dirty();
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        let d = l[(i, i)].re;
        if !(d > 0.0) {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// Diagonal of `a a^H` as a real vector (squared row norms).
pub fn gram_diag(a: &CMat) -> Vec<f64> {
    a.row_iter()
        .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
        .collect()
}

/// Diagonal of `a b a^H` for Hermitian `b`.
pub fn sandwich_diag(a: &CMat, b: &CMat) -> Vec<f64> {
    let ab = a * b;
    (0..a.nrows())
        .map(|i| {
            ab.row(i)
                .iter()
                .zip(a.row(i).iter())
                .map(|(x, y)| (x * y.conj()).re)
                .sum()
        })
        .collect()
}

pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Principal-angle distance between the column spans of two matrices with
/// orthonormal columns: `‖A A^H − B B^H‖_F`.
pub fn subspace_distance(a: &CMat, b: &CMat) -> f64 {
    let pa = a * a.adjoint();
    let pb = b * b.adjoint();
    frobenius_sq(&(pa - pb)).sqrt()
}
