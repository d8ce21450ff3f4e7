//! Pseudoinverse, ridge closed form and dominant-eigenvalue estimation.

use nalgebra::{DMatrix, DVector};

use super::cholesky::{cholesky_lower, cholesky_solve};
use super::jacobi::jacobi_svd;
use super::DataMatrix;
use crate::error::{Error, Result};

/// Thin SVD `m = u * diag(s) * vt` with `s` sorted nonincreasing.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: DataMatrix,
    pub s: Vec<f64>,
    pub vt: DataMatrix,
}

/// Convergence tolerance of the bidiagonal QR sweeps. A tolerance of one
/// machine epsilon can end the iteration on a wrong decomposition.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

/// Matrices whose smaller side is at most this go straight to Jacobi
/// rotations; bidiagonalization loses accuracy in their small singular
/// directions.
const JACOBI_MAX_SIDE: usize = 128;

/// Relative Frobenius reconstruction error accepted from bidiagonalization,
/// in units of `eps * max(rows, cols)`.
const BIDIAG_BACKWARD_ERROR: f64 = 4.0;

fn svd_iteration_budget(rows: usize, cols: usize) -> usize {
    10_000 + 200 * rows.max(cols)
}

fn reconstruction_error(a: &DMatrix<f64>, u: &DMatrix<f64>, s: &[f64], vt: &DMatrix<f64>) -> f64 {
    let mut us = u.clone();
    for (j, v) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(*v);
    }
    (us * vt - a).norm() / a.norm().max(f64::MIN_POSITIVE)
}

type Factors = (DMatrix<f64>, Vec<f64>, DMatrix<f64>);

fn bidiagonal_svd(a: &DMatrix<f64>) -> Option<Factors> {
    let (rows, cols) = a.shape();
    let dec = a
        .clone()
        .try_svd(true, true, SVD_EPS, svd_iteration_budget(rows, cols))?;
    let u = dec.u?;
    let vt = dec.v_t?;
    let s: Vec<f64> = dec.singular_values.iter().copied().collect();
    let sorted = s.windows(2).all(|w| w[0] >= w[1]) && s.iter().all(|&v| v >= 0.0);
    let bound = BIDIAG_BACKWARD_ERROR * f64::EPSILON * rows.max(cols) as f64;
    (sorted && reconstruction_error(a, &u, &s, &vt) <= bound).then_some((u, s, vt))
}

/// Thin SVD. Thin matrices use one-sided Jacobi rotations; larger ones are
/// bidiagonalized, and the result is checked against the input and
/// recomputed by Jacobi rotations when its backward error is too large.
pub fn svd(m: &DataMatrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    let a = m.as_inner();
    let fast = if rows.min(cols) > JACOBI_MAX_SIDE {
        bidiagonal_svd(a)
    } else {
        None
    };
    let (u, s, vt) = match fast {
        Some(dec) => dec,
        None => jacobi_svd(a).ok_or(Error::NumericalFailure {
            operation: "svd",
            rows,
            cols,
        })?,
    };
    Ok(SvdResult {
        u: DataMatrix::checked(u, "svd")?,
        s,
        vt: DataMatrix::checked(vt, "svd")?,
    })
}

/// Default cutoff below which singular values are treated as zero:
/// `max(rows, cols) * eps * s_max`.
pub fn default_rcond(rows: usize, cols: usize, s_max: f64) -> f64 {
    rows.max(cols) as f64 * f64::EPSILON * s_max
}

/// Moore–Penrose pseudoinverse via SVD with rank truncation.
///
/// Singular values `<= rcond` are dropped; `rcond` defaults to
/// [`default_rcond`].
pub fn pinv(m: &DataMatrix, rcond: Option<f64>) -> Result<DataMatrix> {
    let (rows, cols) = m.shape();
    let dec = svd(m)?;
    let s_max = dec.s.first().copied().unwrap_or(0.0);
    let cutoff = rcond.unwrap_or_else(|| default_rcond(rows, cols, s_max));
    let rank = dec.s.iter().take_while(|&&s| s > cutoff).count();
    if rank == 0 {
        return Ok(DataMatrix::zeros(cols, rows));
    }
    // V_r * diag(1/s) * U_r^T
    let mut v_r = dec.vt.as_inner().rows(0, rank).transpose();
    for (j, s) in dec.s.iter().take(rank).enumerate() {
        v_r.column_mut(j).scale_mut(1.0 / s);
    }
    let u_r_t = dec.u.as_inner().columns(0, rank).transpose();
    DataMatrix::checked(v_r * u_r_t, "pinv")
}

/// Closed-form ridge solution together with a note on how it was obtained.
#[derive(Clone, Debug)]
pub struct RidgeSolution {
    pub weight: DataMatrix,
    /// Set when the regularized Gram matrix was numerically singular and the
    /// solution was computed through its pseudoinverse instead.
    pub pinv_fallback: bool,
}

/// Reciprocal-condition threshold (on the Cholesky factor's diagonal, squared)
/// under which an unregularized Gram matrix is treated as singular.
const SINGULAR_RCOND: f64 = 1e-12;

/// Solves `min_W 1/2 ||W h - x||_F^2 + lambda/2 ||W||_F^2`, i.e.
/// `W = x h^T (h h^T + lambda I)^{-1}`.
///
/// `h` is `p x N`, `x` is `m x N`; the result is `m x p`. When `lambda > 0`
/// and `p > N` the equivalent `N x N` system `x (h^T h + lambda I)^{-1} h^T`
/// is solved instead.
pub fn ridge_solve(h: &DataMatrix, x: &DataMatrix, lambda: f64) -> Result<RidgeSolution> {
    if h.cols() != x.cols() {
        return Err(Error::dim("ridge_solve sample count", h.cols(), x.cols()));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::config(
            "lambda",
            format!("must be finite and >= 0, got {lambda}"),
        ));
    }
    let hm = h.as_inner();
    let xm = x.as_inner();
    let (p, n) = hm.shape();

    if lambda > 0.0 && p > n {
        let ht = hm.transpose();
        let mut k = &ht * hm;
        add_diagonal(&mut k, lambda);
        let (a, fallback) = spd_solve(k, xm.transpose())?;
        let w = a.transpose() * ht;
        return Ok(RidgeSolution {
            weight: DataMatrix::checked(w, "ridge_solve")?,
            pinv_fallback: fallback,
        });
    }

    let ht = hm.transpose();
    let mut g = hm * &ht;
    add_diagonal(&mut g, lambda);
    let b = xm * &ht;
    let (wt, fallback) = spd_solve(g, b.transpose())?;
    if fallback && lambda == 0.0 {
        log::debug!(
            "ridge_solve: {p}x{p} Gram matrix is numerically singular, using pseudoinverse"
        );
    }
    Ok(RidgeSolution {
        weight: DataMatrix::checked(wt.transpose(), "ridge_solve")?,
        pinv_fallback: fallback,
    })
}

fn add_diagonal(m: &mut DMatrix<f64>, value: f64) {
    if value != 0.0 {
        for i in 0..m.nrows() {
            m[(i, i)] += value;
        }
    }
}

/// Solves `a * X = b` for symmetric positive semidefinite `a`. Uses Cholesky
/// when `a` is well conditioned, otherwise `pinv(a) * b`. The flag reports
/// the fallback.
fn spd_solve(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<(DMatrix<f64>, bool)> {
    if let Some(l) = cholesky_lower(a.clone()) {
        let diag = l.diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        if hi > 0.0 && (lo / hi).powi(2) > SINGULAR_RCOND {
            return Ok((cholesky_solve(&l, b), false));
        }
    }
    let a_pinv = pinv(&DataMatrix::checked(a, "spd_solve")?, None)?;
    Ok((a_pinv.as_inner() * b, true))
}

pub const POWER_ITER_TOL: f64 = 1e-10;
pub const POWER_ITER_MAX: usize = 1000;

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from the normalized all-ones vector.
pub fn max_eigenvalue(m: &DataMatrix) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows != cols {
        return Err(Error::dim(
            "max_eigenvalue",
            "square matrix",
            format!("{rows}x{cols}"),
        ));
    }
    let a = m.as_inner();
    let start = DVector::from_element(rows, 1.0 / (rows as f64).sqrt());
    let value = power_iteration(a, start);
    if value == 0.0 && a.iter().any(|&v| v != 0.0) {
        // all-ones happened to lie in the null space; retry from a ramp
        let ramp = DVector::from_fn(rows, |i, _| (i + 1) as f64);
        let ramp = &ramp / ramp.norm();
        return Ok(power_iteration(a, ramp));
    }
    Ok(value)
}

fn power_iteration(a: &DMatrix<f64>, mut v: DVector<f64>) -> f64 {
    let mut w = DVector::zeros(v.len());
    let mut estimate = 0.0;
    for _ in 0..POWER_ITER_MAX {
        w.gemv(1.0, a, &v, 0.0);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v.copy_from(&w);
        v /= norm;
        let converged = (next - estimate).abs() <= POWER_ITER_TOL * next.abs();
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

/// Eigenpairs of a symmetric matrix, sorted by decreasing eigenvalue.
pub(crate) fn symmetric_eigen_sorted(a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(a, f64::EPSILON, 10_000 + 200 * n).ok_or(
        Error::NumericalFailure {
            operation: "symmetric eigendecomposition",
            rows: n,
            cols: n,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .total_cmp(&eig.eigenvalues[i])
            .then(i.cmp(&j))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    Ok((values, vectors))
}
