//! Data sets: loading, label encoding, normalization and splitting.

mod csv;
mod idx;
mod split;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use self::csv::{column_count, load_csv, load_features, to_dataset, LabelColumn, RawTable};
pub use self::idx::{load_idx, load_idx_images, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use self::split::{split, subset};

use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Per-feature z-score statistics computed on training data.
///
/// A feature with zero spread is only centred, never divided.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Statistics that leave data unchanged.
    pub fn identity(dim: usize) -> Self {
        NormStats {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Mean and population standard deviation of each row of `x`.
    pub fn fit(x: &DataMatrix) -> Self {
        let (d, n) = x.shape();
        let m = x.as_inner();
        let mut mean = vec![0.0; d];
        let mut std = vec![0.0; d];
        for i in 0..d {
            let row = m.row(i);
            let mu = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / n as f64;
            mean[i] = mu;
            std[i] = var.sqrt();
        }
        NormStats { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &DataMatrix) -> Result<DataMatrix> {
        if x.rows() != self.dim() {
            return Err(Error::dim(
                "normalization",
                format!("{} features", self.dim()),
                x.rows(),
            ));
        }
        let mut m = x.as_inner().clone();
        for i in 0..self.dim() {
            let mu = self.mean[i];
            let sd = self.std[i];
            let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
            m.row_mut(i).apply(|v| *v = (*v - mu) * scale);
        }
        DataMatrix::new(m)
    }
}

/// Where a model's input data comes from; stored with the model so that
/// evaluation and prediction read files the same way training did.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceFormat {
    Csv {
        label_column: LabelColumn,
        #[serde(default)]
        has_header: bool,
    },
    Idx,
}

/// Normalized features, one-hot targets and the label vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    /// `d x N`
    pub x: DataMatrix,
    /// `c x N`, one 1 per column.
    pub t: DataMatrix,
    pub class_names: Vec<String>,
    pub norm: NormStats,
}

impl LabeledDataset {
    pub fn from_labels(
        x: DataMatrix,
        labels: &[usize],
        class_names: Vec<String>,
        norm: NormStats,
    ) -> Result<Self> {
        if labels.len() != x.cols() {
            return Err(Error::dim("LabeledDataset labels", x.cols(), labels.len()));
        }
        if norm.dim() != x.rows() {
            return Err(Error::dim(
                "LabeledDataset norm stats",
                x.rows(),
                norm.dim(),
            ));
        }
        let t = one_hot(labels, class_names.len())?;
        Ok(LabeledDataset {
            x,
            t,
            class_names,
            norm,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.cols()
    }

    pub fn dim(&self) -> usize {
        self.x.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.t.rows()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.t.column_argmax()
    }
}

/// `ceil(fraction * n)`, ignoring rounding noise in the product so that
/// e.g. `0.7 * 10` counts as 7.
pub fn ceil_count(fraction: f64, n: usize) -> usize {
    let exact = fraction * n as f64;
    let nearest = exact.round();
    if (exact - nearest).abs() <= 1e-9 * (n.max(1) as f64) {
        nearest as usize
    } else {
        exact.ceil() as usize
    }
}

/// `c x N` indicator matrix. Fails if any label is `>= n_classes`.
pub fn one_hot(labels: &[usize], n_classes: usize) -> Result<DataMatrix> {
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(Error::dim("one_hot", format!("label < {n_classes}"), bad));
    }
    if labels.is_empty() || n_classes == 0 {
        return Err(Error::dim(
            "one_hot",
            "at least one sample and class",
            format!("{} x {}", n_classes, labels.len()),
        ));
    }
    Ok(DataMatrix::from_fn(n_classes, labels.len(), |i, j| {
        if labels[j] == i {
            1.0
        } else {
            0.0
        }
    }))
}
