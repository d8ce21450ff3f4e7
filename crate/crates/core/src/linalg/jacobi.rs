//! One-sided Jacobi SVD. Slower than bidiagonalization but robust on
//! rank-deficient and badly scaled input.

use nalgebra::{DMatrix, DVector};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `(u, s, vt)` with `s` sorted nonincreasing, or `None` if the
/// rotations have not settled after the sweep budget.
pub(crate) fn jacobi_svd(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, Vec<f64>, DMatrix<f64>)> {
    if a.nrows() < a.ncols() {
        let (u, s, vt) = jacobi_svd(&a.transpose())?;
        return Some((vt.transpose(), s, u.transpose()));
    }
    let (m, n) = a.shape();
    let mut b = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = m as f64 * f64::EPSILON;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = b.column(p).norm_squared();
                let beta = b.column(q).norm_squared();
                let gamma = b.column(p).dot(&b.column(q));
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut b, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        converged = !rotated;
    }
    if !converged {
        return None;
    }

    let norms: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let s_max = norms[order[0]];
    let floor = s_max * f64::EPSILON * m as f64;
    let mut u = DMatrix::zeros(m, n);
    let mut vt = DMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (k, &j) in order.iter().enumerate() {
        vt.row_mut(k).copy_from(&v.column(j).transpose());
        if norms[j] > floor {
            u.column_mut(k).copy_from(&(b.column(j) / norms[j]));
            s.push(norms[j]);
        } else {
            s.push(0.0);
        }
    }
    complete_columns(&mut u, s.iter().take_while(|&&x| x > 0.0).count());
    Some((u, s, vt))
}

/// Columns `(p, q) <- (c p - s q, s p + c q)`.
fn rotate(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let x = m[(i, p)];
        let y = m[(i, q)];
        m[(i, p)] = c * x - s * y;
        m[(i, q)] = s * x + c * y;
    }
}

/// Fills columns `filled..` of `u` with unit vectors orthogonal to all
/// earlier columns, taken from the standard basis by Gram-Schmidt.
fn complete_columns(u: &mut DMatrix<f64>, filled: usize) {
    let m = u.nrows();
    let mut next = filled;
    for e in 0..m {
        if next >= u.ncols() {
            break;
        }
        let mut cand = DVector::<f64>::zeros(m);
        cand[e] = 1.0;
        for _ in 0..2 {
            for k in 0..next {
                let proj = u.column(k).dot(&cand);
                cand -= u.column(k) * proj;
            }
        }
        let norm = cand.norm();
        if norm > 1e-8 {
            u.column_mut(next).copy_from(&(cand / norm));
            next += 1;
        }
    }
}
