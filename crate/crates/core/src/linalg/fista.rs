//! FISTA for the L1-regularized decoder fit
//! `min_W 1/2 ||W h - x||_F^2 + alpha ||W||_1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{max_eigenvalue, ridge_solve, DataMatrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FistaConfig {
    /// L1 weight. Under the unhalved least-squares objective this is half
    /// the usual lambda.
    pub alpha: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for FistaConfig {
    fn default() -> Self {
        FistaConfig {
            alpha: 0.0,
            max_iter: 200,
            rel_tol: 1e-6,
        }
    }
}

impl FistaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("fista.alpha", "must be finite and >= 0"));
        }
        if self.max_iter == 0 {
            return Err(Error::config("fista.max_iter", "must be >= 1"));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::config("fista.rel_tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Momentum update `t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`.
#[inline]
pub fn next_momentum(t: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0
}

#[inline]
pub fn soft_threshold(v: f64, threshold: f64) -> f64 {
    v.signum() * (v.abs() - threshold).max(0.0)
}

/// Value of `1/2 ||W h - x||_F^2 + alpha ||W||_1`, computed directly.
pub fn lasso_objective(w: &DataMatrix, h: &DataMatrix, x: &DataMatrix, alpha: f64) -> f64 {
    let residual = w.as_inner() * h.as_inner() - x.as_inner();
    0.5 * residual.norm_squared() + alpha * w.as_inner().iter().map(|v| v.abs()).sum::<f64>()
}

/// Objective from precomputed `G = h h^T`, `B = x h^T` and `||x||^2`.
struct GramObjective {
    gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    x_sq: f64,
    alpha: f64,
}

impl GramObjective {
    fn value(&self, w: &DMatrix<f64>) -> f64 {
        let wg = w * &self.gram;
        let quad = wg.dot(w);
        let lin = w.dot(&self.cross);
        let l1: f64 = w.iter().map(|v| v.abs()).sum();
        0.5 * (quad - 2.0 * lin + self.x_sq).max(0.0) + self.alpha * l1
    }
}

/// Accelerated proximal gradient on the L1-regularized least-squares decoder
/// problem.
///
/// Starts from the ridge solution with `lambda = alpha`, uses the step
/// `1/L` with `L` the largest eigenvalue of `h h^T` and soft-thresholds at
/// `alpha / L`. Stops when the relative objective change drops below
/// `cfg.rel_tol` or after `cfg.max_iter` steps, and returns the best iterate
/// seen (never worse than the warm start). Whenever a step increases the
/// objective the momentum is reset (`t = 1`, `V = W`).
pub fn fista_lasso(h: &DataMatrix, x: &DataMatrix, cfg: &FistaConfig) -> Result<DataMatrix> {
    cfg.validate()?;
    if h.cols() != x.cols() {
        return Err(Error::dim("fista_lasso sample count", h.cols(), x.cols()));
    }
    let hm = h.as_inner();
    let ht = hm.transpose();
    let gram = hm * &ht;
    let lipschitz = max_eigenvalue(&DataMatrix::wrap(gram.clone()))?;
    if lipschitz <= 0.0 {
        return Err(Error::DegenerateInput(
            "fista_lasso: h is all zeros (Lipschitz constant is 0)".into(),
        ));
    }
    let objective = GramObjective {
        cross: x.as_inner() * &ht,
        gram,
        x_sq: x.as_inner().norm_squared(),
        alpha: cfg.alpha,
    };
    let step = 1.0 / lipschitz;
    let threshold = cfg.alpha * step;

    let warm = ridge_solve(h, x, cfg.alpha)?.weight.into_inner();
    let mut best_value = objective.value(&warm);
    let mut best = warm.clone();
    let mut previous = warm.clone();
    let mut v = warm;
    let mut t = 1.0;
    let mut last_value = best_value;

    for _ in 0..cfg.max_iter {
        // gradient of the smooth part at V: V G - B
        let mut w = &v * &objective.gram;
        w -= &objective.cross;
        w *= -step;
        w += &v;
        w.apply(|e| *e = soft_threshold(*e, threshold));

        let value = objective.value(&w);
        if value < best_value {
            best_value = value;
            best.copy_from(&w);
        }
        if value > last_value {
            // objective went up: drop the momentum and restart from w
            t = 1.0;
            v = w.clone();
            previous = w;
            last_value = value;
            continue;
        }
        let t_next = next_momentum(t);
        let beta = (t - 1.0) / t_next;
        v = &w + (&w - &previous) * beta;
        let change = last_value - value;
        previous = w;
        t = t_next;
        if change <= cfg.rel_tol * last_value.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        last_value = value;
    }
    DataMatrix::checked(best, "fista_lasso")
}
