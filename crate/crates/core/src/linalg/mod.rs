//! Dense linear algebra kernel: the matrix type, pseudoinverse, ridge and
//! FISTA solvers, dominant eigenvalue and activations.
//!
//! Every function here is a pure function of its arguments. Reductions run in
//! a fixed sequential order, so repeated calls give bit-identical results.

mod activation;
mod cholesky;
mod fista;
mod jacobi;
mod matrix;
mod ortho;
mod solve;

pub use activation::{Activation, ActivationKind, DEFAULT_INVERSE_EPS};
pub use fista::{fista_lasso, lasso_objective, next_momentum, soft_threshold, FistaConfig};
pub use matrix::DataMatrix;
pub use ortho::{complete_orthonormal_rows, random_orthonormal_rows};
pub use solve::{
    default_rcond, max_eigenvalue, pinv, ridge_solve, svd, RidgeSolution, SvdResult,
    POWER_ITER_MAX, POWER_ITER_TOL,
};

pub(crate) use solve::symmetric_eigen_sorted;

#[cfg(test)]
pub(crate) mod test_support {
    use super::DataMatrix;
    use crate::rng::{gaussian, seeded};

    pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DataMatrix {
        DataMatrix::wrap(gaussian(rows, cols, &mut seeded(seed)))
    }

    /// Relative Frobenius residuals of the four Penrose conditions.
    pub fn penrose_residuals(m: &DataMatrix, p: &DataMatrix) -> [f64; 4] {
        let a = m.as_inner();
        let x = p.as_inner();
        let ax = a * x;
        let xa = x * a;
        let rel = |lhs: nalgebra::DMatrix<f64>, rhs: &nalgebra::DMatrix<f64>| {
            (lhs - rhs).norm() / rhs.norm().max(1.0)
        };
        [
            rel(&ax * a, a),
            rel(&xa * x, x),
            rel(ax.transpose(), &ax),
            rel(xa.transpose(), &xa),
        ]
    }
}
