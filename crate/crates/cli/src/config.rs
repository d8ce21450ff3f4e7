use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stpl_core::data::{LabelColumn, SourceFormat};
use stpl_core::synergy::SynergyConfig;

/// Where training (and optionally test) data lives. Relative paths are
/// resolved against the directory of the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Csv {
        train: PathBuf,
        #[serde(default)]
        test: Option<PathBuf>,
        label_column: LabelColumn,
        #[serde(default)]
        has_header: bool,
        #[serde(default)]
        holdout: Holdout,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        #[serde(default)]
        test_images: Option<PathBuf>,
        #[serde(default)]
        test_labels: Option<PathBuf>,
        #[serde(default)]
        holdout: Holdout,
    },
}

/// Optional carving of the training file: keep only the first
/// `max_train_samples` rows, and/or hold out a stratified test share when no
/// separate test file is given.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Holdout {
    #[serde(default)]
    pub max_train_samples: Option<usize>,
    #[serde(default)]
    pub test_fraction: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl DataSpec {
    pub fn source_format(&self) -> SourceFormat {
        match self {
            DataSpec::Csv {
                label_column,
                has_header,
                ..
            } => SourceFormat::Csv {
                label_column: label_column.clone(),
                has_header: *has_header,
            },
            DataSpec::Idx { .. } => SourceFormat::Idx,
        }
    }

    pub fn holdout(&self) -> &Holdout {
        match self {
            DataSpec::Csv { holdout, .. } | DataSpec::Idx { holdout, .. } => holdout,
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            DataSpec::Csv { train, test, .. } => {
                fix(train);
                test.iter_mut().for_each(fix);
            }
            DataSpec::Idx {
                train_images,
                train_labels,
                test_images,
                test_labels,
                ..
            } => {
                fix(train_images);
                fix(train_labels);
                test_images.iter_mut().for_each(fix);
                test_labels.iter_mut().for_each(fix);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.holdout();
        if let Some(f) = h.test_fraction {
            if !(f > 0.0 && f < 1.0) {
                bail!("invalid configuration at `data.holdout.test_fraction`: must lie in (0, 1), got {f}");
            }
        }
        if h.max_train_samples == Some(0) {
            bail!("invalid configuration at `data.holdout.max_train_samples`: must be at least 1");
        }
        match self {
            DataSpec::Csv {
                test: Some(_),
                holdout:
                    Holdout {
                        test_fraction: Some(_),
                        ..
                    },
                ..
            }
            | DataSpec::Idx {
                test_images: Some(_),
                holdout:
                    Holdout {
                        test_fraction: Some(_),
                        ..
                    },
                ..
            } => {
                bail!("invalid configuration at `data.holdout.test_fraction`: a separate test file is already given")
            }
            DataSpec::Idx {
                test_images,
                test_labels,
                ..
            } if test_images.is_some() != test_labels.is_some() => {
                bail!("invalid configuration at `data.test_labels`: test_images and test_labels go together")
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub metrics: Option<PathBuf>,
}

/// A complete training run as written in a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSpec,
    pub model: SynergyConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("parsing run configuration")?;
        Ok(cfg)
    }

    /// Reads and validates a configuration file.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg =
            Self::from_toml_str(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data.resolve(base);
        if let Some(p) = cfg.output.model.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        if let Some(p) = cfg.output.metrics.as_mut().filter(|p| p.is_relative()) {
            *p = base.join(&*p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.model.validate().map_err(anyhow::Error::from)
    }
}
