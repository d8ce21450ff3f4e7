//! The ensemble: several elementary models, each trained on its own random
//! subset of the training data, whose scores are averaged at prediction time.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backward::{backward_features, train_backward, BackwardModel};
use crate::data::{ceil_count, subset, LabeledDataset, NormStats, SourceFormat};
use crate::error::{Error, Result};
use crate::forward::{forward_features, train_forward, ForwardConfig, ForwardModel};
use crate::fusion::{
    fuse, fusion_predict, train_fusion, FusionClassifier, FusionConfig, FusionSelection,
};
use crate::linalg::DataMatrix;
use crate::metrics::accuracy;
use crate::rng::{derive_seed, seeded};

/// Stream id under which a member's fusion expansion seed is derived; layer
/// seeds use the small stream ids `0, 1, ...`.
const FUSION_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackwardConfig {
    #[serde(default = "default_backward_lambda")]
    pub lambda: f64,
}

fn default_backward_lambda() -> f64 {
    1e-3
}

impl Default for BackwardConfig {
    fn default() -> Self {
        BackwardConfig {
            lambda: default_backward_lambda(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynergyConfig {
    #[serde(default = "default_n_subsystems")]
    pub n_subsystems: usize,
    #[serde(default = "default_sampling_ratio")]
    pub sampling_ratio: f64,
    #[serde(default)]
    pub base_seed: u64,
    pub forward: ForwardConfig,
    #[serde(default)]
    pub backward: BackwardConfig,
    #[serde(default)]
    pub fusion: FusionConfig,
}

fn default_n_subsystems() -> usize {
    3
}

fn default_sampling_ratio() -> f64 {
    0.8
}

impl SynergyConfig {
    pub fn new(forward: ForwardConfig) -> Self {
        SynergyConfig {
            n_subsystems: default_n_subsystems(),
            sampling_ratio: default_sampling_ratio(),
            base_seed: 0,
            forward,
            backward: BackwardConfig::default(),
            fusion: FusionConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subsystems == 0 {
            return Err(Error::config("n_subsystems", "must be at least 1"));
        }
        if !(self.sampling_ratio > 0.0 && self.sampling_ratio <= 1.0) {
            return Err(Error::config(
                "sampling_ratio",
                format!("must lie in (0, 1], got {}", self.sampling_ratio),
            ));
        }
        if !(self.backward.lambda >= 0.0 && self.backward.lambda.is_finite()) {
            return Err(Error::config("backward.lambda", "must be finite and >= 0"));
        }
        self.forward.validate()?;
        self.fusion.validate()
    }

    pub fn member_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

/// One subsystem: forward network, backward network and the fused classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryModel {
    pub forward: ForwardModel,
    pub backward: BackwardModel,
    pub fusion_sel: FusionSelection,
    pub classifier: FusionClassifier,
    pub subsystem_seed: u64,
}

impl ElementaryModel {
    pub fn input_dim(&self) -> usize {
        self.forward.input_dim()
    }

    pub fn n_classes(&self) -> usize {
        self.classifier.n_classes()
    }

    /// Scores on already normalized features.
    pub fn scores(&self, x: &DataMatrix) -> Result<DataMatrix> {
        let z = fuse(
            &forward_features(&self.forward, x)?,
            &backward_features(&self.backward, x)?,
            &self.fusion_sel,
        )?;
        fusion_predict(&self.classifier, &z)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    MeanScore,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynergeticModel {
    pub members: Vec<ElementaryModel>,
    pub aggregation: Aggregation,
    pub norm: NormStats,
    pub class_names: Vec<String>,
    /// How evaluation and prediction files are read, when known.
    pub source: Option<SourceFormat>,
    /// The configuration the model was trained with.
    pub config: SynergyConfig,
}

impl SynergeticModel {
    pub fn input_dim(&self) -> usize {
        self.norm.dim()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Checks that all members agree with each other and with the stored
    /// normalization statistics and vocabulary.
    pub fn check(&self) -> Result<()> {
        if self.members.is_empty() {
            return Err(Error::dim("SynergeticModel members", "at least one", 0));
        }
        for m in &self.members {
            if m.input_dim() != self.input_dim() || m.backward.input_dim() != self.input_dim() {
                return Err(Error::dim(
                    "SynergeticModel member input dimension",
                    self.input_dim(),
                    m.input_dim(),
                ));
            }
            if m.n_classes() != self.n_classes() {
                return Err(Error::dim(
                    "SynergeticModel member class count",
                    self.n_classes(),
                    m.n_classes(),
                ));
            }
            m.fusion_sel
                .resolve(m.forward.depth(), m.backward.depth())?;
        }
        Ok(())
    }
}

/// `ceil(ratio * n)` distinct indices drawn without replacement: the prefix
/// of a seeded Fisher-Yates shuffle of `0..n`, returned in ascending order.
pub fn sample_subset(n_samples: usize, ratio: f64, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n_samples).collect();
    idx.shuffle(&mut seeded(seed));
    idx.truncate(ceil_count(ratio, n_samples).min(n_samples));
    idx.sort_unstable();
    idx
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseTimings {
    pub forward_secs: f64,
    pub backward_secs: f64,
    pub fusion_secs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberReport {
    pub index: usize,
    pub seed: u64,
    pub subset_size: usize,
    pub depth: usize,
    /// Probe validation accuracy after each layer tried.
    pub probe_accuracy: Vec<f64>,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub warnings: Vec<String>,
    pub timings: PhaseTimings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub members: Vec<MemberReport>,
    pub val_accuracy: f64,
    pub train_secs: f64,
}

/// Trains forward, backward and fusion stages in sequence on one data set.
pub fn train_elementary(
    x: &DataMatrix,
    t: &DataMatrix,
    x_val: &DataMatrix,
    t_val: &DataMatrix,
    cfg: &SynergyConfig,
    seed: u64,
) -> Result<(ElementaryModel, MemberReport)> {
    let start = Instant::now();
    let fit = train_forward(x, t, x_val, t_val, &cfg.forward, seed)?;
    let forward_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let backward = train_backward(x, t, &fit.model, cfg.backward.lambda)?;
    let backward_secs = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let z = fuse(
        &forward_features(&fit.model, x)?,
        &backward_features(&backward, x)?,
        &cfg.fusion.picks,
    )?;
    let classifier = train_fusion(&z, t, &cfg.fusion, derive_seed(seed, FUSION_STREAM))?;
    let train_accuracy = accuracy(&fusion_predict(&classifier, &z)?, t);
    let fusion_secs = start.elapsed().as_secs_f64();

    let model = ElementaryModel {
        forward: fit.model,
        backward,
        fusion_sel: cfg.fusion.picks.clone(),
        classifier,
        subsystem_seed: seed,
    };
    let val_accuracy = accuracy(&model.scores(x_val)?, t_val);
    let report = MemberReport {
        index: 0,
        seed,
        subset_size: x.cols(),
        depth: model.forward.depth(),
        probe_accuracy: fit.probe_accuracy,
        train_accuracy,
        val_accuracy,
        warnings: fit.warnings,
        timings: PhaseTimings {
            forward_secs,
            backward_secs,
            fusion_secs,
        },
    };
    Ok((model, report))
}

/// Trains `cfg.n_subsystems` members on up to `workers` threads.
///
/// Member `i` trains on `sample_subset(N, rho, base_seed + i)` with seed
/// `base_seed + i` and all members share `val` for early stopping. The
/// result does not depend on `workers`. `train` and `val` must already be
/// normalized with the same statistics; the model keeps `train.norm`.
pub fn train_system(
    train: &LabeledDataset,
    val: &LabeledDataset,
    cfg: &SynergyConfig,
    workers: usize,
) -> Result<(SynergeticModel, TrainReport)> {
    cfg.validate()?;
    if workers == 0 {
        return Err(Error::config("workers", "must be at least 1"));
    }
    if val.dim() != train.dim() {
        return Err(Error::dim(
            "train_system validation features",
            train.dim(),
            val.dim(),
        ));
    }
    if val.n_classes() != train.n_classes() {
        return Err(Error::dim(
            "train_system validation classes",
            train.n_classes(),
            val.n_classes(),
        ));
    }
    let start = Instant::now();
    let job = |i: usize| -> Result<(ElementaryModel, MemberReport)> {
        let seed = cfg.member_seed(i);
        let idx = sample_subset(train.n_samples(), cfg.sampling_ratio, seed);
        let part = subset(train, &idx)?;
        let (model, mut report) = train_elementary(&part.x, &part.t, &val.x, &val.t, cfg, seed)
            .map_err(|e| Error::Member {
                index: i,
                source: Box::new(e),
            })?;
        report.index = i;
        log::info!(
            "member {i}: {} samples, depth {}, validation accuracy {:.4}",
            report.subset_size,
            report.depth,
            report.val_accuracy
        );
        Ok((model, report))
    };

    let results: Vec<Result<(ElementaryModel, MemberReport)>> = if workers == 1 {
        (0..cfg.n_subsystems).map(job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.min(cfg.n_subsystems))
            .build()
            .map_err(|e| Error::config("workers", e.to_string()))?;
        pool.install(|| (0..cfg.n_subsystems).into_par_iter().map(job).collect())
    };

    let mut members = Vec::with_capacity(cfg.n_subsystems);
    let mut reports = Vec::with_capacity(cfg.n_subsystems);
    for r in results {
        let (m, rep) = r?;
        members.push(m);
        reports.push(rep);
    }
    let model = SynergeticModel {
        members,
        aggregation: Aggregation::MeanScore,
        norm: train.norm.clone(),
        class_names: train.class_names.clone(),
        source: None,
        config: cfg.clone(),
    };
    let val_accuracy = accuracy(&predict_normalized(&model, &val.x)?.scores, &val.t);
    let report = TrainReport {
        members: reports,
        val_accuracy,
        train_secs: start.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

/// Elementwise mean of equally shaped score matrices, summed in member order.
pub fn aggregate_scores(scores: &[DataMatrix]) -> Result<DataMatrix> {
    let first = scores
        .first()
        .ok_or_else(|| Error::dim("aggregate_scores", "at least one member", 0))?;
    let mut sum = first.as_inner().clone();
    for s in &scores[1..] {
        if s.shape() != first.shape() {
            return Err(Error::dim(
                "aggregate_scores",
                format!("{:?}", first.shape()),
                format!("{:?}", s.shape()),
            ));
        }
        sum += s.as_inner();
    }
    sum /= scores.len() as f64;
    Ok(DataMatrix::wrap(sum))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Class index per column; ties go to the smallest index.
    pub labels: Vec<usize>,
    pub scores: DataMatrix,
}

/// Predicts from raw features, applying the stored normalization first.
pub fn predict(sm: &SynergeticModel, x: &DataMatrix) -> Result<Prediction> {
    if x.rows() != sm.input_dim() {
        return Err(Error::dim(
            "predict input features",
            sm.input_dim(),
            x.rows(),
        ));
    }
    predict_normalized(sm, &sm.norm.apply(x)?)
}

/// Predicts from features that are already normalized.
pub fn predict_normalized(sm: &SynergeticModel, x: &DataMatrix) -> Result<Prediction> {
    if x.rows() != sm.input_dim() {
        return Err(Error::dim(
            "predict input features",
            sm.input_dim(),
            x.rows(),
        ));
    }
    let scores = sm
        .members
        .iter()
        .map(|m| m.scores(x))
        .collect::<Result<Vec<_>>>()?;
    let scores = match sm.aggregation {
        Aggregation::MeanScore => aggregate_scores(&scores)?,
    };
    Ok(Prediction {
        labels: scores.column_argmax(),
        scores,
    })
}
