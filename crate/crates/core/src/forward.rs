//! Forward learning: greedily stacked pseudoinverse autoencoders with tied
//! weights, grown one layer at a time until a validation probe stops
//! improving.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    complete_orthonormal_rows, fista_lasso, random_orthonormal_rows, ridge_solve,
    symmetric_eigen_sorted, Activation, DataMatrix, FistaConfig,
};
use crate::metrics::accuracy;
use crate::rng::{derive_seed, seeded};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularizer {
    #[default]
    RidgeL2,
    LassoL1,
}

/// How the provisional encoder used to compute the first hidden
/// representation is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderInit {
    /// Top left singular vectors of the layer input.
    #[default]
    Pca,
    RandomOrthogonal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub width: usize,
    #[serde(default)]
    pub regularizer: Regularizer,
    #[serde(default = "default_layer_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub init: EncoderInit,
    #[serde(default = "default_fista_max_iter")]
    pub fista_max_iter: usize,
    #[serde(default = "default_fista_rel_tol")]
    pub fista_rel_tol: f64,
}

fn default_layer_lambda() -> f64 {
    1e-3
}
fn default_fista_max_iter() -> usize {
    FistaConfig::default().max_iter
}
fn default_fista_rel_tol() -> f64 {
    FistaConfig::default().rel_tol
}

impl LayerSpec {
    pub fn ridge(width: usize, lambda: f64) -> Self {
        LayerSpec {
            width,
            regularizer: Regularizer::RidgeL2,
            lambda,
            init: EncoderInit::Pca,
            fista_max_iter: default_fista_max_iter(),
            fista_rel_tol: default_fista_rel_tol(),
        }
    }

    pub fn lasso(width: usize, alpha: f64) -> Self {
        LayerSpec {
            regularizer: Regularizer::LassoL1,
            ..LayerSpec::ridge(width, alpha)
        }
    }

    pub fn with_init(mut self, init: EncoderInit) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self, key: &str) -> Result<()> {
        if self.width == 0 {
            return Err(Error::config(format!("{key}.width"), "must be >= 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(
                format!("{key}.lambda"),
                "must be finite and >= 0",
            ));
        }
        if self.regularizer == Regularizer::LassoL1 {
            self.fista_config().validate().map_err(|_| {
                Error::config(
                    format!("{key}.fista_max_iter"),
                    "fista_max_iter must be >= 1 and fista_rel_tol > 0",
                )
            })?;
        }
        Ok(())
    }

    fn fista_config(&self) -> FistaConfig {
        FistaConfig {
            alpha: self.lambda,
            max_iter: self.fista_max_iter,
            rel_tol: self.fista_rel_tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EarlyStopConfig {
    pub min_delta: f64,
    pub patience: usize,
    /// Share of the training data held out for validation when no explicit
    /// validation set is given.
    pub val_fraction: f64,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        EarlyStopConfig {
            min_delta: 0.001,
            patience: 1,
            val_fraction: 0.15,
        }
    }
}

impl EarlyStopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::config(
                "early_stop.val_fraction",
                "must lie in (0, 1)",
            ));
        }
        if self.patience == 0 {
            return Err(Error::config("early_stop.patience", "must be >= 1"));
        }
        if !self.min_delta.is_finite() {
            return Err(Error::config("early_stop.min_delta", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardConfig {
    /// One entry per candidate layer; its length is the maximum depth.
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default)]
    pub early_stop: EarlyStopConfig,
    /// Ridge weight of the probe / output layer.
    #[serde(default = "default_out_lambda")]
    pub out_lambda: f64,
}

fn default_out_lambda() -> f64 {
    1e-3
}

impl ForwardConfig {
    pub fn new(layers: Vec<LayerSpec>) -> Self {
        ForwardConfig {
            layers,
            activation: Activation::default(),
            early_stop: EarlyStopConfig::default(),
            out_lambda: default_out_lambda(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::config(
                "forward.layers",
                "at least one layer is required",
            ));
        }
        for (i, spec) in self.layers.iter().enumerate() {
            spec.validate(&format!("forward.layers[{i}]"))?;
        }
        self.activation.validate()?;
        self.early_stop.validate()?;
        if !(self.out_lambda >= 0.0 && self.out_lambda.is_finite()) {
            return Err(Error::config(
                "forward.out_lambda",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

/// Trained forward network: encoders `W_e^1 .. W_e^l` and output weight `W_o`.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardModel {
    pub encoder_weights: Vec<DataMatrix>,
    pub activation: Activation,
    pub output_weight: DataMatrix,
}

impl ForwardModel {
    /// Assembles a model, checking the shape chain.
    pub fn new(
        encoder_weights: Vec<DataMatrix>,
        activation: Activation,
        output_weight: DataMatrix,
    ) -> Result<Self> {
        check_chain("ForwardModel", &encoder_weights, &output_weight)?;
        Ok(ForwardModel {
            encoder_weights,
            activation,
            output_weight,
        })
    }

    pub fn depth(&self) -> usize {
        self.encoder_weights.len()
    }

    pub fn input_dim(&self) -> usize {
        self.encoder_weights[0].cols()
    }

    pub fn n_classes(&self) -> usize {
        self.output_weight.rows()
    }

    pub fn layer_widths(&self) -> Vec<usize> {
        self.encoder_weights.iter().map(DataMatrix::rows).collect()
    }
}

/// Checks `W^1.cols == d`, `W^k.rows == W^{k+1}.cols` and the output layer width.
pub(crate) fn check_chain(
    context: &'static str,
    layers: &[DataMatrix],
    output: &DataMatrix,
) -> Result<()> {
    if layers.is_empty() {
        return Err(Error::dim(context, "at least one layer", 0));
    }
    for pair in layers.windows(2) {
        if pair[0].rows() != pair[1].cols() {
            return Err(Error::dim(
                context,
                format!("layer with {} input columns", pair[0].rows()),
                pair[1].cols(),
            ));
        }
    }
    let last = layers.last().expect("nonempty");
    if output.cols() != last.rows() {
        return Err(Error::dim(
            context,
            format!("output weight with {} columns", last.rows()),
            output.cols(),
        ));
    }
    Ok(())
}

/// Hidden activations `[sigma(W^1 x), sigma(W^2 sigma(W^1 x)), ...]`.
pub(crate) fn propagate(
    context: &'static str,
    layers: &[DataMatrix],
    activation: &Activation,
    x: &DataMatrix,
) -> Result<Vec<DataMatrix>> {
    if x.rows() != layers[0].cols() {
        return Err(Error::dim(
            context,
            format!("input with {} rows", layers[0].cols()),
            x.rows(),
        ));
    }
    let mut out: Vec<DataMatrix> = Vec::with_capacity(layers.len());
    for w in layers {
        let input = out.last().unwrap_or(x);
        let mut z = w.as_inner() * input.as_inner();
        activation.activate_in_place(&mut z);
        out.push(DataMatrix::wrap(z));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PilaeLayer {
    /// `W_e = W_d^T`, `width x d`.
    pub encoder_weight: DataMatrix,
    /// `sigma(W_e h_prev)`.
    pub h_out: DataMatrix,
    pub warnings: Vec<String>,
}

/// Trains one tied-weight pseudoinverse autoencoder layer.
///
/// A provisional encoder (PCA or random orthogonal rows) gives the hidden
/// representation `H0 = sigma(W0 h_prev)`; the decoder is the ridge (or LASSO)
/// fit of `h_prev` from `H0`; the trained encoder is the decoder's transpose.
pub fn train_pilae_layer(
    h_prev: &DataMatrix,
    spec: &LayerSpec,
    activation: &Activation,
    seed: u64,
) -> Result<PilaeLayer> {
    spec.validate("layer")?;
    let (d, n) = h_prev.shape();
    let mut warnings = Vec::new();
    if spec.width > n {
        warnings.push(format!(
            "layer width {} exceeds the sample count {n}; the decoder is underdetermined and relies on regularization",
            spec.width
        ));
    }

    let mut rng = seeded(seed);
    let init = match spec.init {
        EncoderInit::Pca => {
            let top = top_left_singular_rows(h_prev.as_inner(), spec.width.min(d))?;
            complete_orthonormal_rows(&top, spec.width, &mut rng)
        }
        EncoderInit::RandomOrthogonal => random_orthonormal_rows(spec.width, d, &mut rng),
    };

    let mut hidden = &init * h_prev.as_inner();
    activation.activate_in_place(&mut hidden);
    let hidden = DataMatrix::wrap(hidden);

    let decoder = match spec.regularizer {
        Regularizer::RidgeL2 => {
            let sol = ridge_solve(&hidden, h_prev, spec.lambda)?;
            if sol.pinv_fallback && spec.lambda == 0.0 {
                warnings.push(
                    "hidden Gram matrix is singular; decoder computed with the pseudoinverse"
                        .into(),
                );
            }
            sol.weight
        }
        Regularizer::LassoL1 => fista_lasso(&hidden, h_prev, &spec.fista_config())?,
    };
    let encoder_weight = decoder.transpose();
    let mut h_out = encoder_weight.as_inner() * h_prev.as_inner();
    activation.activate_in_place(&mut h_out);
    let h_out = DataMatrix::checked(h_out, "train_pilae_layer")?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(PilaeLayer {
        encoder_weight,
        h_out,
        warnings,
    })
}

/// `|| W_e^T sigma(W_e h) - h ||_F`: how well the tied decoder reconstructs
/// the layer input.
pub fn reconstruction_error(
    encoder_weight: &DataMatrix,
    h_prev: &DataMatrix,
    activation: &Activation,
) -> f64 {
    let mut hidden = encoder_weight.as_inner() * h_prev.as_inner();
    activation.activate_in_place(&mut hidden);
    let recon = encoder_weight.as_inner().transpose() * hidden;
    (recon - h_prev.as_inner()).norm()
}

/// Up to `k` leading left singular vectors of `h` (`d x N`) as rows, keeping
/// only directions with nonzero singular value.
fn top_left_singular_rows(h: &DMatrix<f64>, k: usize) -> Result<DMatrix<f64>> {
    let (d, n) = h.shape();
    let tol_scale = d.max(n) as f64 * f64::EPSILON;
    let mut rows = if d <= n {
        let (values, vectors) = symmetric_eigen_sorted(h * h.transpose())?;
        let rank = numerical_rank(&values, tol_scale);
        vectors.columns(0, rank.min(k)).transpose()
    } else {
        // fewer samples than features: eigenvectors of h^T h, mapped back
        let (values, vectors) = symmetric_eigen_sorted(h.transpose() * h)?;
        let r = numerical_rank(&values, tol_scale).min(k);
        let mut u = h * vectors.columns(0, r);
        for j in 0..r {
            let norm = u.column(j).norm();
            u.column_mut(j).scale_mut(1.0 / norm);
        }
        // the mapped vectors lose some orthogonality; one QR pass restores it
        if r > 0 {
            let q = u.clone().qr().q();
            // keep orientation of the original vectors
            let mut q = q;
            for j in 0..r {
                if q.column(j).dot(&u.column(j)) < 0.0 {
                    q.column_mut(j).neg_mut();
                }
            }
            u = q;
        }
        u.transpose()
    };
    // fix the sign so that the largest-magnitude entry of each row is positive
    for mut row in rows.row_iter_mut() {
        let pivot = row
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            row.neg_mut();
        }
    }
    Ok(rows)
}

fn numerical_rank(eigenvalues: &[f64], tol_scale: f64) -> usize {
    let top = eigenvalues.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    eigenvalues
        .iter()
        .take_while(|&&v| v > tol_scale * top)
        .count()
}

/// Result of [`train_forward`]: the model plus the probe validation accuracy
/// recorded after each layer that was tried.
#[derive(Clone, Debug)]
pub struct ForwardFit {
    pub model: ForwardModel,
    pub probe_accuracy: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ForwardFit {
    pub fn layers_tried(&self) -> usize {
        self.probe_accuracy.len()
    }
}

/// Grows a stacked autoencoder layer by layer.
///
/// After layer `k` a probe output weight is fitted by ridge regression on the
/// training features and scored on the validation set. Growth stops once the
/// probe accuracy has failed to beat the best so far by `min_delta` for
/// `patience` consecutive layers, or when `cfg.layers` is exhausted. The
/// returned model is truncated to the depth with the highest probe accuracy
/// (smallest depth on ties) and uses that depth's probe as `W_o`.
pub fn train_forward(
    x: &DataMatrix,
    t: &DataMatrix,
    x_val: &DataMatrix,
    t_val: &DataMatrix,
    cfg: &ForwardConfig,
    seed: u64,
) -> Result<ForwardFit> {
    cfg.validate()?;
    if t.cols() != x.cols() {
        return Err(Error::dim("train_forward targets", x.cols(), t.cols()));
    }
    if t_val.cols() != x_val.cols() {
        return Err(Error::dim(
            "train_forward validation targets",
            x_val.cols(),
            t_val.cols(),
        ));
    }
    if x_val.rows() != x.rows() {
        return Err(Error::dim(
            "train_forward validation features",
            x.rows(),
            x_val.rows(),
        ));
    }
    if t_val.rows() != t.rows() {
        return Err(Error::dim(
            "train_forward class count",
            t.rows(),
            t_val.rows(),
        ));
    }

    let es = &cfg.early_stop;
    let mut h = x.clone();
    let mut h_val = x_val.clone();
    let mut encoders = Vec::new();
    let mut probe_accuracy = Vec::new();
    let mut warnings = Vec::new();
    let mut best: Option<(usize, f64, DataMatrix)> = None;
    let mut stalled = 0;

    for (k, spec) in cfg.layers.iter().enumerate() {
        let layer = train_pilae_layer(&h, spec, &cfg.activation, derive_seed(seed, k as u64))?;
        warnings.extend(
            layer
                .warnings
                .iter()
                .map(|w| format!("layer {}: {w}", k + 1)),
        );
        let mut next_val = layer.encoder_weight.as_inner() * h_val.as_inner();
        cfg.activation.activate_in_place(&mut next_val);
        h_val = DataMatrix::wrap(next_val);
        h = layer.h_out;
        encoders.push(layer.encoder_weight);

        let probe = ridge_solve(&h, t, cfg.out_lambda)?.weight;
        let acc = accuracy(&probe.matmul(&h_val)?, t_val);
        probe_accuracy.push(acc);
        log::debug!(
            "forward layer {} (width {}): probe validation accuracy {acc:.4}",
            k + 1,
            spec.width
        );

        let best_acc = best.as_ref().map(|b| b.1);
        match best_acc {
            Some(b) if acc - b < es.min_delta => stalled += 1,
            _ => stalled = 0,
        }
        if best_acc.is_none_or(|b| acc > b) {
            best = Some((k, acc, probe));
        }
        if stalled >= es.patience {
            break;
        }
    }

    let (best_k, _, output_weight) = best.expect("at least one layer is trained");
    encoders.truncate(best_k + 1);
    let model = ForwardModel::new(encoders, cfg.activation, output_weight)?;
    Ok(ForwardFit {
        model,
        probe_accuracy,
        warnings,
    })
}

/// `[H^1, ..., H^l]` with `H^k = sigma(W_e^k H^{k-1})` and `H^0 = x`.
pub fn forward_features(m: &ForwardModel, x: &DataMatrix) -> Result<Vec<DataMatrix>> {
    propagate("forward_features", &m.encoder_weights, &m.activation, x)
}

/// Raw score matrix `W_o F(x)`, `c x N`.
pub fn forward_predict(m: &ForwardModel, x: &DataMatrix) -> Result<DataMatrix> {
    let feats = forward_features(m, x)?;
    m.output_weight.matmul(feats.last().expect("depth >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::gaussian_blobs;
    use crate::linalg::test_support::gaussian_matrix;

    #[test]
    fn full_width_identity_layer_reconstructs_exactly() {
        for (rows, cols, seed) in [(4, 10, 1), (6, 6, 2), (5, 3, 3)] {
            let h = gaussian_matrix(rows, cols, seed);
            let spec = LayerSpec::ridge(rows, 0.0);
            let layer = train_pilae_layer(&h, &spec, &Activation::IDENTITY, 9).unwrap();
            let err = reconstruction_error(&layer.encoder_weight, &h, &Activation::IDENTITY);
            assert!(err <= 1e-8, "{rows}x{cols}: reconstruction error {err}");
        }
    }

    #[test]
    fn identity_input_width_two_hits_eckart_young_bound() {
        let h = DataMatrix::identity(4);
        let layer =
            train_pilae_layer(&h, &LayerSpec::ridge(2, 0.0), &Activation::IDENTITY, 0).unwrap();
        let err = reconstruction_error(&layer.encoder_weight, &h, &Activation::IDENTITY);
        // singular values of I_4 are all 1; the best rank-2 error is sqrt(2)
        assert!((err - 2f64.sqrt()).abs() < 1e-10, "error {err}");
        assert_eq!(layer.h_out.shape(), (2, 4));
    }

    #[test]
    fn pca_init_matches_truncated_svd_optimum() {
        let h = gaussian_matrix(6, 20, 4);
        let layer =
            train_pilae_layer(&h, &LayerSpec::ridge(3, 0.0), &Activation::IDENTITY, 0).unwrap();
        let err = reconstruction_error(&layer.encoder_weight, &h, &Activation::IDENTITY);
        let s = crate::linalg::svd(&h).unwrap().s;
        let optimum = s[3..].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((err - optimum).abs() < 1e-8, "{err} vs {optimum}");
    }

    #[test]
    fn layer_training_is_deterministic() {
        let h = gaussian_matrix(5, 30, 5);
        for init in [EncoderInit::Pca, EncoderInit::RandomOrthogonal] {
            let spec = LayerSpec::ridge(8, 1e-3).with_init(init);
            let a = train_pilae_layer(&h, &spec, &Activation::TANH, 42).unwrap();
            let b = train_pilae_layer(&h, &spec, &Activation::TANH, 42).unwrap();
            assert_eq!(a.encoder_weight, b.encoder_weight);
            assert_eq!(a.h_out, b.h_out);
        }
    }

    #[test]
    fn wide_layer_warns() {
        let h = gaussian_matrix(3, 4, 6);
        let layer =
            train_pilae_layer(&h, &LayerSpec::ridge(6, 1e-2), &Activation::TANH, 1).unwrap();
        assert!(layer
            .warnings
            .iter()
            .any(|w| w.contains("exceeds the sample count")));
        assert_eq!(layer.encoder_weight.shape(), (6, 3));
    }

    #[test]
    fn lasso_layer_trains() {
        let h = gaussian_matrix(4, 40, 7);
        let layer =
            train_pilae_layer(&h, &LayerSpec::lasso(3, 0.05), &Activation::TANH, 1).unwrap();
        assert_eq!(layer.encoder_weight.shape(), (3, 4));
    }

    #[test]
    fn hand_built_two_layer_features() {
        let w1 = DataMatrix::from_rows(&[vec![1.0, 0.0, -1.0], vec![0.5, 0.5, 0.5]]).unwrap();
        let w2 = DataMatrix::from_rows(&[vec![2.0, -1.0]]).unwrap();
        let wo = DataMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        let m = ForwardModel::new(vec![w1, w2], Activation::TANH, wo).unwrap();
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap();
        let feats = forward_features(&m, &x).unwrap();
        // column 0: z1 = (1, 1.5); column 1: z1 = (-3, 2)
        let h1 = [
            [1.0f64.tanh(), (-3.0f64).tanh()],
            [1.5f64.tanh(), 2.0f64.tanh()],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!((feats[0][(i, j)] - h1[i][j]).abs() < 1e-15);
            }
        }
        for j in 0..2 {
            let expected = (2.0 * h1[0][j] - h1[1][j]).tanh();
            assert!((feats[1][(0, j)] - expected).abs() < 1e-15);
        }
        let scores = forward_predict(&m, &x).unwrap();
        assert_eq!(scores.shape(), (2, 2));
        assert!((scores[(1, 0)] + feats[1][(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn identity_model_passes_input_through() {
        let x = gaussian_matrix(3, 5, 8);
        let m = ForwardModel::new(
            vec![DataMatrix::identity(3)],
            Activation::IDENTITY,
            DataMatrix::identity(3),
        )
        .unwrap();
        assert_eq!(forward_features(&m, &x).unwrap(), vec![x.clone()]);
        assert_eq!(forward_predict(&m, &x).unwrap(), x);
        assert!(forward_features(&m, &gaussian_matrix(2, 5, 8)).is_err());
    }

    #[test]
    fn shape_chain_is_checked() {
        let bad = ForwardModel::new(
            vec![DataMatrix::zeros(4, 3), DataMatrix::zeros(2, 5)],
            Activation::TANH,
            DataMatrix::zeros(2, 2),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn blobs_reach_full_validation_accuracy() {
        let train = gaussian_blobs(100, 2.5, 0.5, 11);
        let val = gaussian_blobs(50, 2.5, 0.5, 12);
        let cfg = ForwardConfig::new(vec![LayerSpec::ridge(8, 1e-3); 3]);
        let fit = train_forward(&train.x, &train.t, &val.x, &val.t, &cfg, 3).unwrap();
        assert!(fit.model.depth() <= 3);
        assert!(fit.probe_accuracy.contains(&1.0));
        let train_acc = accuracy(&forward_predict(&fit.model, &train.x).unwrap(), &train.t);
        assert_eq!(train_acc, 1.0);
    }

    #[test]
    fn single_spec_gives_depth_one() {
        let train = gaussian_blobs(30, 2.5, 0.5, 1);
        let mut cfg = ForwardConfig::new(vec![LayerSpec::ridge(4, 1e-3)]);
        cfg.early_stop.patience = 5;
        cfg.early_stop.min_delta = -1.0;
        let fit = train_forward(&train.x, &train.t, &train.x, &train.t, &cfg, 0).unwrap();
        assert_eq!(fit.model.depth(), 1);
    }

    #[test]
    fn returned_depth_has_best_probe_accuracy() {
        let train = gaussian_blobs(60, 1.0, 0.8, 21);
        let val = gaussian_blobs(40, 1.0, 0.8, 22);
        let mut cfg = ForwardConfig::new(vec![LayerSpec::ridge(6, 1e-3); 5]);
        cfg.early_stop.patience = 5;
        let fit = train_forward(&train.x, &train.t, &val.x, &val.t, &cfg, 4).unwrap();
        assert_eq!(fit.layers_tried(), 5);
        let best = fit.probe_accuracy.iter().copied().fold(f64::MIN, f64::max);
        let first_best = fit.probe_accuracy.iter().position(|&a| a == best).unwrap();
        assert_eq!(fit.model.depth(), first_best + 1);
    }

    #[test]
    fn class_count_mismatch_is_rejected() {
        let train = gaussian_blobs(10, 2.5, 0.5, 1);
        let t_bad = DataMatrix::zeros(3, train.x.cols());
        let cfg = ForwardConfig::new(vec![LayerSpec::ridge(4, 1e-3)]);
        let err = train_forward(&train.x, &train.t, &train.x, &t_bad, &cfg, 0).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }
}
