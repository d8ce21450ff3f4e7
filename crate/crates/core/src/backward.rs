//! Backward learning: push the labels back through a trained forward network
//! to get per-layer target representations, then refit a second network of
//! the same shape against those targets.

use crate::error::{Error, Result};
use crate::forward::{check_chain, propagate, ForwardModel};
use crate::linalg::{pinv, ridge_solve, Activation, DataMatrix};

/// Network refit from backward targets: hidden weights `W_b^1 .. W_b^l` and
/// an output weight, with the same shape chain as its forward model.
#[derive(Clone, Debug, PartialEq)]
pub struct BackwardModel {
    pub hidden_weights: Vec<DataMatrix>,
    pub output_weight: DataMatrix,
    pub activation: Activation,
}

impl BackwardModel {
    pub fn new(
        hidden_weights: Vec<DataMatrix>,
        activation: Activation,
        output_weight: DataMatrix,
    ) -> Result<Self> {
        check_chain("BackwardModel", &hidden_weights, &output_weight)?;
        Ok(BackwardModel {
            hidden_weights,
            output_weight,
            activation,
        })
    }

    pub fn depth(&self) -> usize {
        self.hidden_weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.hidden_weights[0].cols()
    }

    pub fn n_classes(&self) -> usize {
        self.output_weight.rows()
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        self.hidden_weights.iter().map(DataMatrix::rows).collect()
    }
}

/// Target representations `[H_b^1, ..., H_b^l]`.
///
/// `H_b^l = pinv(W_o) t` and `H_b^{k-1} = pinv(W_e^k) sigma^-1(H_b^k)`, where
/// the inverse activation clamps into its safe range.
pub fn backward_targets(fm: &ForwardModel, t: &DataMatrix) -> Result<Vec<DataMatrix>> {
    if t.rows() != fm.n_classes() {
        return Err(Error::dim(
            "backward_targets class count",
            fm.n_classes(),
            t.rows(),
        ));
    }
    let depth = fm.depth();
    let mut targets = Vec::with_capacity(depth);
    targets.push(pinv(&fm.output_weight, None)?.matmul(t)?);
    for k in (1..depth).rev() {
        let pre = fm
            .activation
            .activate_inverse(targets.last().expect("nonempty"));
        let h = pinv(&fm.encoder_weights[k], None)?.matmul(&pre)?;
        targets.push(h);
    }
    targets.reverse();
    Ok(targets)
}

/// Refits a network against the backward targets of `fm`.
///
/// Layer `k` is the ridge fit of `H_b^k` from `A^{k-1}`, where `A^0 = x` and
/// `A^k = sigma(W_b^k A^{k-1})` uses the weights just fitted. The output
/// weight is the ridge fit of `t` from `A^l`.
pub fn train_backward(
    x: &DataMatrix,
    t: &DataMatrix,
    fm: &ForwardModel,
    lambda: f64,
) -> Result<BackwardModel> {
    if x.rows() != fm.input_dim() {
        return Err(Error::dim("train_backward input", fm.input_dim(), x.rows()));
    }
    if t.cols() != x.cols() {
        return Err(Error::dim("train_backward targets", x.cols(), t.cols()));
    }
    let targets = backward_targets(fm, t)?;
    let mut weights = Vec::with_capacity(targets.len());
    let mut a = x.clone();
    for target in &targets {
        let fit = ridge_solve(&a, target, lambda)?;
        if fit.pinv_fallback {
            log::debug!(
                "backward layer {}: Gram matrix singular, used pseudoinverse",
                weights.len() + 1
            );
        }
        let mut next = fit.weight.as_inner() * a.as_inner();
        fm.activation.activate_in_place(&mut next);
        a = DataMatrix::checked(next, "backward refit")?;
        weights.push(fit.weight);
    }
    let output_weight = ridge_solve(&a, t, lambda)?.weight;
    BackwardModel::new(weights, fm.activation, output_weight)
}

/// Hidden activations of the backward network, one per layer.
pub fn backward_features(bm: &BackwardModel, x: &DataMatrix) -> Result<Vec<DataMatrix>> {
    propagate("backward_features", &bm.hidden_weights, &bm.activation, x)
}

/// Score matrix `W_b^{l+1} sigma(W_b^l ... sigma(W_b^1 x))`, `c x N`.
pub fn backward_predict(bm: &BackwardModel, x: &DataMatrix) -> Result<DataMatrix> {
    let feats = backward_features(bm, x)?;
    bm.output_weight.matmul(feats.last().expect("depth >= 1"))
}
