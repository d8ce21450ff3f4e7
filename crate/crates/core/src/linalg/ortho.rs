use nalgebra::DMatrix;

use crate::rng::{gaussian, Rng};

/// `rows x cols` matrix from a seeded standard normal draw with its rows
/// orthonormalized. When `rows > cols` the rows are orthonormal within
/// consecutive blocks of `cols` rows.
pub fn random_orthonormal_rows(rows: usize, cols: usize, rng: &mut Rng) -> DMatrix<f64> {
    complete_orthonormal_rows(&DMatrix::zeros(0, cols), rows, rng)
}

/// Extends `given` (orthonormal rows, at most `cols` of them) to `total`
/// rows. New rows in the first block are orthogonal to `given`; later blocks
/// are fresh random orthonormal sets.
pub fn complete_orthonormal_rows(
    given: &DMatrix<f64>,
    total: usize,
    rng: &mut Rng,
) -> DMatrix<f64> {
    let cols = given.ncols();
    assert!(given.nrows() <= cols && given.nrows() <= total);
    let mut out = DMatrix::zeros(total, cols);
    out.rows_mut(0, given.nrows()).copy_from(given);
    let mut filled = given.nrows();
    while filled < total {
        let block_start = (filled / cols) * cols;
        let block_end = (block_start + cols).min(total);
        let need = block_end - filled;
        let basis = out.rows(block_start, filled - block_start).into_owned();
        let mut draw = gaussian(need, cols, rng);
        if basis.nrows() > 0 {
            for _ in 0..2 {
                let coeff = &draw * basis.transpose();
                draw -= coeff * &basis;
            }
        }
        let q = draw.transpose().qr().q();
        let mut fresh = q.transpose();
        if basis.nrows() > 0 {
            let coeff = &fresh * basis.transpose();
            fresh -= coeff * &basis;
            for mut row in fresh.row_iter_mut() {
                let n = row.norm();
                row /= n;
            }
        }
        out.rows_mut(filled, need).copy_from(&fresh);
        filled = block_end;
    }
    out
}
