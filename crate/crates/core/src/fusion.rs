//! Feature fusion: stack chosen hidden layers of the forward and backward
//! networks and train a random-expansion classifier with a ridge output on
//! the stacked features.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{random_orthonormal_rows, ridge_solve, Activation, DataMatrix};
use crate::rng::seeded;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePath {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LastKeyword {
    Last,
}

/// Zero-based hidden layer index, or the deepest layer of the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "LayerRefRepr", into = "LayerRefRepr")]
pub enum LayerRef {
    Index(usize),
    Last,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LayerRefRepr {
    Index(usize),
    Keyword(LastKeyword),
}

impl From<LayerRefRepr> for LayerRef {
    fn from(r: LayerRefRepr) -> Self {
        match r {
            LayerRefRepr::Index(i) => LayerRef::Index(i),
            LayerRefRepr::Keyword(LastKeyword::Last) => LayerRef::Last,
        }
    }
}

impl From<LayerRef> for LayerRefRepr {
    fn from(r: LayerRef) -> Self {
        match r {
            LayerRef::Index(i) => LayerRefRepr::Index(i),
            LayerRef::Last => LayerRefRepr::Keyword(LastKeyword::Last),
        }
    }
}

impl LayerRef {
    pub fn resolve(self, depth: usize) -> usize {
        match self {
            LayerRef::Index(i) => i,
            LayerRef::Last => depth.saturating_sub(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pick {
    pub path: FeaturePath,
    pub layer: LayerRef,
}

impl Pick {
    pub const fn new(path: FeaturePath, layer: LayerRef) -> Self {
        Pick { path, layer }
    }
}

impl fmt::Display for Pick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = match self.path {
            FeaturePath::Forward => "forward",
            FeaturePath::Backward => "backward",
        };
        match self.layer {
            LayerRef::Index(i) => write!(f, "{path}[{i}]"),
            LayerRef::Last => write!(f, "{path}[last]"),
        }
    }
}

/// Which hidden layers are stacked, top block first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FusionSelection {
    pub picks: Vec<Pick>,
}

impl Default for FusionSelection {
    fn default() -> Self {
        FusionSelection {
            picks: vec![
                Pick::new(FeaturePath::Forward, LayerRef::Last),
                Pick::new(FeaturePath::Backward, LayerRef::Last),
            ],
        }
    }
}

impl FusionSelection {
    /// Picks with `Last` replaced by concrete indices; checks range and
    /// duplicates against the given depths.
    pub fn resolve(
        &self,
        forward_depth: usize,
        backward_depth: usize,
    ) -> Result<Vec<(FeaturePath, usize)>> {
        if self.picks.is_empty() {
            return Err(Error::config(
                "fusion.picks",
                "at least one pick is required",
            ));
        }
        let mut out: Vec<(FeaturePath, usize)> = Vec::with_capacity(self.picks.len());
        for pick in &self.picks {
            let depth = match pick.path {
                FeaturePath::Forward => forward_depth,
                FeaturePath::Backward => backward_depth,
            };
            let idx = pick.layer.resolve(depth);
            if idx >= depth {
                return Err(Error::config(
                    "fusion.picks",
                    format!("{pick} is out of range for depth {depth}"),
                ));
            }
            if out.contains(&(pick.path, idx)) {
                return Err(Error::config(
                    "fusion.picks",
                    format!("{pick} selects a layer twice"),
                ));
            }
            out.push((pick.path, idx));
        }
        Ok(out)
    }
}

/// Row-wise concatenation of the picked feature matrices, in pick order.
pub fn fuse(
    forward_feats: &[DataMatrix],
    backward_feats: &[DataMatrix],
    sel: &FusionSelection,
) -> Result<DataMatrix> {
    let resolved = sel.resolve(forward_feats.len(), backward_feats.len())?;
    let blocks: Vec<&DataMatrix> = resolved
        .iter()
        .map(|&(path, i)| match path {
            FeaturePath::Forward => &forward_feats[i],
            FeaturePath::Backward => &backward_feats[i],
        })
        .collect();
    DataMatrix::vstack(&blocks)
}

pub const DEFAULT_N_NEURONS: usize = 5000;
pub const DEFAULT_MEMORY_LIMIT: u64 = 2 << 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    #[serde(default)]
    pub picks: FusionSelection,
    #[serde(default = "default_n_neurons")]
    pub n_neurons: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub activation: Activation,
    #[serde(default = "default_memory_limit")]
    pub memory_limit_bytes: u64,
}

fn default_n_neurons() -> usize {
    DEFAULT_N_NEURONS
}

fn default_lambda() -> f64 {
    1e-3
}

fn default_memory_limit() -> u64 {
    DEFAULT_MEMORY_LIMIT
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            picks: FusionSelection::default(),
            n_neurons: DEFAULT_N_NEURONS,
            lambda: default_lambda(),
            activation: Activation::default(),
            memory_limit_bytes: DEFAULT_MEMORY_LIMIT,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_neurons == 0 {
            return Err(Error::config("fusion.n_neurons", "must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("fusion.lambda", "must be finite and >= 0"));
        }
        if self.picks.picks.is_empty() {
            return Err(Error::config(
                "fusion.picks",
                "at least one pick is required",
            ));
        }
        self.activation.validate()
    }
}

/// Random orthonormal expansion, activation, ridge output.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionClassifier {
    /// `n_neurons x fused_dim`
    pub expansion_weight: DataMatrix,
    pub activation: Activation,
    /// `c x n_neurons`
    pub output_weight: DataMatrix,
}

impl FusionClassifier {
    pub fn new(
        expansion_weight: DataMatrix,
        activation: Activation,
        output_weight: DataMatrix,
    ) -> Result<Self> {
        if output_weight.cols() != expansion_weight.rows() {
            return Err(Error::dim(
                "FusionClassifier output weight columns",
                expansion_weight.rows(),
                output_weight.cols(),
            ));
        }
        Ok(FusionClassifier {
            expansion_weight,
            activation,
            output_weight,
        })
    }

    pub fn n_neurons(&self) -> usize {
        self.expansion_weight.rows()
    }

    pub fn fused_dim(&self) -> usize {
        self.expansion_weight.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.output_weight.rows()
    }

    fn hidden(&self, z: &DataMatrix) -> Result<DataMatrix> {
        if z.rows() != self.fused_dim() {
            return Err(Error::dim(
                "fusion input features",
                self.fused_dim(),
                z.rows(),
            ));
        }
        let mut h = self.expansion_weight.as_inner() * z.as_inner();
        self.activation.activate_in_place(&mut h);
        Ok(DataMatrix::wrap(h))
    }
}

/// Bytes held by the dominant buffers of [`train_fusion`]: the expansion
/// weight, the hidden matrix and the regularized Gram matrix with its factor.
pub fn fusion_working_set(n_neurons: usize, fused_dim: usize, n_samples: usize) -> u64 {
    let (n_c, d, n) = (n_neurons as u64, fused_dim as u64, n_samples as u64);
    let g = n_c.min(n);
    8 * (n_c * d + n_c * n + 2 * g * g)
}

pub fn train_fusion(
    z: &DataMatrix,
    t: &DataMatrix,
    cfg: &FusionConfig,
    seed: u64,
) -> Result<FusionClassifier> {
    cfg.validate()?;
    if z.cols() != t.cols() {
        return Err(Error::dim("train_fusion targets", z.cols(), t.cols()));
    }
    let need = fusion_working_set(cfg.n_neurons, z.rows(), z.cols());
    if need > cfg.memory_limit_bytes {
        return Err(Error::Resource {
            what: format!(
                "fused classifier with {} neurons on {} x {} features",
                cfg.n_neurons,
                z.rows(),
                z.cols()
            ),
            required: need,
            limit: cfg.memory_limit_bytes,
        });
    }
    let mut rng = seeded(seed);
    let expansion = DataMatrix::wrap(random_orthonormal_rows(cfg.n_neurons, z.rows(), &mut rng));
    let mut fc = FusionClassifier {
        expansion_weight: expansion,
        activation: cfg.activation,
        output_weight: DataMatrix::zeros(t.rows(), cfg.n_neurons),
    };
    let hidden = fc.hidden(z)?;
    let fit = ridge_solve(&hidden, t, cfg.lambda)?;
    if fit.pinv_fallback {
        log::debug!("fusion output: Gram matrix singular, used pseudoinverse");
    }
    fc.output_weight = fit.weight;
    Ok(fc)
}

/// Scores `W_out sigma(E z)`, `c x N`.
pub fn fusion_predict(fc: &FusionClassifier, z: &DataMatrix) -> Result<DataMatrix> {
    fc.output_weight.matmul(&fc.hidden(z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_support::gaussian_matrix;
    use crate::metrics::accuracy;

    fn pick(path: FeaturePath, layer: LayerRef) -> Pick {
        Pick::new(path, layer)
    }

    #[test]
    fn single_pick_is_identity() {
        let f = vec![gaussian_matrix(3, 5, 1), gaussian_matrix(4, 5, 2)];
        let sel = FusionSelection {
            picks: vec![pick(FeaturePath::Forward, LayerRef::Last)],
        };
        assert_eq!(fuse(&f, &[], &sel).unwrap(), f[1]);
    }

    #[test]
    fn default_selection_stacks_top_layers() {
        let f = vec![gaussian_matrix(3, 5, 1), gaussian_matrix(4, 5, 2)];
        let b = vec![gaussian_matrix(3, 5, 3), gaussian_matrix(6, 5, 4)];
        let z = fuse(&f, &b, &FusionSelection::default()).unwrap();
        assert_eq!(z.shape(), (10, 5));
        assert_eq!(z[(0, 0)], f[1][(0, 0)]);
        assert_eq!(z[(4, 2)], b[1][(0, 2)]);
    }

    #[test]
    fn pick_errors() {
        let f = vec![gaussian_matrix(3, 5, 1)];
        let b = vec![gaussian_matrix(3, 4, 3)];
        let out_of_range = FusionSelection {
            picks: vec![pick(FeaturePath::Forward, LayerRef::Index(1))],
        };
        assert!(fuse(&f, &b, &out_of_range).is_err());
        let dup = FusionSelection {
            picks: vec![
                pick(FeaturePath::Forward, LayerRef::Index(0)),
                pick(FeaturePath::Forward, LayerRef::Last),
            ],
        };
        assert!(fuse(&f, &b, &dup).is_err());
        assert!(fuse(&f, &b, &FusionSelection::default()).is_err());
        assert!(fuse(&f, &b, &FusionSelection { picks: vec![] }).is_err());
    }

    #[test]
    fn selection_config_syntax() {
        let sel: FusionSelection = serde_json::from_str(
            r#"[{"path":"forward","layer":"last"},{"path":"backward","layer":0}]"#,
        )
        .unwrap();
        assert_eq!(sel.picks[0], pick(FeaturePath::Forward, LayerRef::Last));
        assert_eq!(
            sel.picks[1],
            pick(FeaturePath::Backward, LayerRef::Index(0))
        );
        assert_eq!(
            serde_json::to_string(&sel).unwrap(),
            r#"[{"path":"forward","layer":"last"},{"path":"backward","layer":0}]"#
        );
        assert!(
            serde_json::from_str::<FusionSelection>(r#"[{"path":"forward","layer":"first"}]"#)
                .is_err()
        );
    }

    #[test]
    fn square_identity_expansion_matches_plain_ridge() {
        let z = gaussian_matrix(6, 20, 7);
        let labels: Vec<usize> = (0..20).map(|j| (j * 7) % 3).collect();
        let t = crate::data::one_hot(&labels, 3).unwrap();
        let cfg = FusionConfig {
            n_neurons: 6,
            activation: Activation::IDENTITY,
            lambda: 1e-2,
            ..Default::default()
        };
        let fc = train_fusion(&z, &t, &cfg, 5).unwrap();

        let e = fc.expansion_weight.as_inner();
        let gram = e * e.transpose();
        assert!((gram - nalgebra::DMatrix::identity(6, 6)).abs().max() <= 1e-8);

        let direct = ridge_solve(&z, &t, 1e-2).unwrap().weight;
        let direct_scores = direct.matmul(&z).unwrap();
        let fused_scores = fusion_predict(&fc, &z).unwrap();
        assert_eq!(accuracy(&fused_scores, &t), accuracy(&direct_scores, &t));
        assert!(fused_scores.distance(&direct_scores) <= 1e-9);
    }

    #[test]
    fn expansion_is_seeded() {
        let z = gaussian_matrix(4, 10, 1);
        let t = crate::data::one_hot(&[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 2).unwrap();
        let cfg = FusionConfig {
            n_neurons: 9,
            ..Default::default()
        };
        let a = train_fusion(&z, &t, &cfg, 3).unwrap();
        let b = train_fusion(&z, &t, &cfg, 3).unwrap();
        assert_eq!(
            a.expansion_weight.to_row_major(),
            b.expansion_weight.to_row_major()
        );
        assert_ne!(
            a.expansion_weight,
            train_fusion(&z, &t, &cfg, 4).unwrap().expansion_weight
        );
        assert_eq!(fusion_predict(&a, &z).unwrap().shape(), (2, 10));
    }

    #[test]
    fn identity_classifier_returns_input() {
        let z = gaussian_matrix(3, 4, 9);
        let fc = FusionClassifier::new(
            DataMatrix::identity(3),
            Activation::IDENTITY,
            DataMatrix::identity(3),
        )
        .unwrap();
        assert_eq!(fusion_predict(&fc, &z).unwrap(), z);
        assert!(fusion_predict(&fc, &gaussian_matrix(2, 4, 9)).is_err());
    }

    #[test]
    fn memory_ceiling_names_the_bound() {
        let z = gaussian_matrix(4, 10, 1);
        let t = crate::data::one_hot(&[0; 10], 1).unwrap();
        let cfg = FusionConfig {
            n_neurons: 1000,
            memory_limit_bytes: 1 << 16,
            ..Default::default()
        };
        match train_fusion(&z, &t, &cfg, 0) {
            Err(Error::Resource {
                required, limit, ..
            }) => {
                assert_eq!(limit, 1 << 16);
                assert_eq!(required, fusion_working_set(1000, 4, 10));
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn blobs_fused_features_fit_training_set() {
        use crate::backward::{backward_features, train_backward};
        use crate::forward::{forward_features, train_forward, ForwardConfig, LayerSpec};

        let ds = crate::data::synthetic::gaussian_blobs(100, 2.0, 0.5, 8);
        let (train, val) = crate::data::split(&ds, 0.15, 8).unwrap();
        let cfg = ForwardConfig::new(vec![LayerSpec::ridge(8, 1e-3); 2]);
        let fm = train_forward(&train.x, &train.t, &val.x, &val.t, &cfg, 8)
            .unwrap()
            .model;
        let bm = train_backward(&train.x, &train.t, &fm, 1e-3).unwrap();
        let z = fuse(
            &forward_features(&fm, &train.x).unwrap(),
            &backward_features(&bm, &train.x).unwrap(),
            &FusionSelection::default(),
        )
        .unwrap();
        let fc = train_fusion(
            &z,
            &train.t,
            &FusionConfig {
                n_neurons: 200,
                ..Default::default()
            },
            8,
        )
        .unwrap();
        assert_eq!(accuracy(&fusion_predict(&fc, &z).unwrap(), &train.t), 1.0);
    }
}
