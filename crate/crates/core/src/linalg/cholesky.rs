//! Blocked Cholesky factorization and triangular solves. The bulk of the
//! work happens in matrix products, which run far faster than the
//! column-at-a-time loops of an unblocked factorization.

use nalgebra::DMatrix;

const BLOCK: usize = 96;

/// Lower Cholesky factor `L` with `a = L L^T`, or `None` if a pivot is not
/// strictly positive. Only the lower triangle of `a` is read.
pub(crate) fn cholesky_lower(mut a: DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky of a non-square matrix");
    let mut k = 0;
    while k < n {
        let nb = BLOCK.min(n - k);
        for j in k..k + nb {
            let mut d = a[(j, j)];
            for p in k..j {
                d -= a[(j, p)] * a[(j, p)];
            }
            if !(d > 0.0 && d.is_finite()) {
                return None;
            }
            let d = d.sqrt();
            a[(j, j)] = d;
            for i in j + 1..k + nb {
                let mut s = a[(i, j)];
                for p in k..j {
                    s -= a[(i, p)] * a[(j, p)];
                }
                a[(i, j)] = s / d;
            }
        }
        let rest = n - k - nb;
        if rest > 0 {
            let l11 = a.view((k, k), (nb, nb)).into_owned();
            // L21 = A21 L11^-T, computed as the transpose of L11^-1 A21^T
            let mut y = a.view((k + nb, k), (rest, nb)).transpose();
            if !l11.solve_lower_triangular_mut(&mut y) {
                return None;
            }
            a.view_mut((k + nb, k), (rest, nb)).tr_copy_from(&y);
            let l21 = a.view((k + nb, k), (rest, nb)).into_owned();
            a.view_mut((k + nb, k + nb), (rest, rest))
                .gemm(-1.0, &l21, &y, 1.0);
        }
        k += nb;
    }
    a.fill_upper_triangle(0.0, 1);
    Some(a)
}

/// Solves `L X = B` for lower triangular `L`.
pub(crate) fn solve_lower(l: &DMatrix<f64>, mut b: DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let m = b.ncols();
    let mut k = 0;
    while k < n {
        let nb = BLOCK.min(n - k);
        if k > 0 {
            let done = b.rows(0, k).into_owned();
            b.view_mut((k, 0), (nb, m))
                .gemm(-1.0, &l.view((k, 0), (nb, k)), &done, 1.0);
        }
        let diag = l.view((k, k), (nb, nb)).into_owned();
        let mut block = b.rows(k, nb).into_owned();
        diag.solve_lower_triangular_mut(&mut block);
        b.rows_mut(k, nb).copy_from(&block);
        k += nb;
    }
    b
}

/// Solves `L^T X = B` for lower triangular `L`.
pub(crate) fn solve_lower_transposed(l: &DMatrix<f64>, mut b: DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let m = b.ncols();
    let mut end = n;
    while end > 0 {
        let nb = BLOCK.min(end);
        let k = end - nb;
        if end < n {
            let done = b.rows(end, n - end).into_owned();
            let below = l.view((end, k), (n - end, nb));
            b.view_mut((k, 0), (nb, m))
                .gemm_tr(-1.0, &below, &done, 1.0);
        }
        let diag = l.view((k, k), (nb, nb)).into_owned();
        let mut block = b.rows(k, nb).into_owned();
        diag.tr_solve_lower_triangular_mut(&mut block);
        b.rows_mut(k, nb).copy_from(&block);
        end = k;
    }
    b
}

/// Solves `(L L^T) X = B`.
pub(crate) fn cholesky_solve(l: &DMatrix<f64>, b: DMatrix<f64>) -> DMatrix<f64> {
    solve_lower_transposed(l, solve_lower(l, b))
}
