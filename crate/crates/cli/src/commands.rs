use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use stpl_core::data::{
    column_count, load_csv, load_features, load_idx, load_idx_images, split, subset, to_dataset,
    LabeledDataset, NormStats, SourceFormat,
};
use stpl_core::metrics::{label_accuracy, ConfusionMatrix};
use stpl_core::persist;
use stpl_core::synergy::{predict, train_system, SynergeticModel, TrainReport};
use stpl_core::DataMatrix;

use crate::config::{DataSpec, RunConfig};

/// Command-line overrides applied on top of a [`RunConfig`].
#[derive(Clone, Debug, Default)]
pub struct TrainOverrides {
    pub workers: Option<usize>,
    pub base_seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

pub struct TrainOutcome {
    pub model: SynergeticModel,
    pub report: TrainReport,
    pub model_path: PathBuf,
    pub metrics: Vec<(String, String)>,
    pub test_accuracy: Option<f64>,
}

/// Training set (normalized), plus the test set when the configuration
/// provides one.
pub struct PreparedData {
    pub train: LabeledDataset,
    pub test: Option<LabeledDataset>,
}

fn truncate(ds: LabeledDataset, max: Option<usize>) -> Result<LabeledDataset> {
    match max {
        Some(n) if n < ds.n_samples() => Ok(subset(&ds, &(0..n).collect::<Vec<_>>())?),
        _ => Ok(ds),
    }
}

fn renormalize(ds: &LabeledDataset, norm: &NormStats) -> Result<LabeledDataset> {
    Ok(LabeledDataset {
        x: norm.apply(&ds.x)?,
        norm: norm.clone(),
        ..ds.clone()
    })
}

/// Loads the configured data. Normalization statistics are fitted on the
/// training portion only and applied to the test portion.
pub fn prepare_data(spec: &DataSpec) -> Result<PreparedData> {
    let holdout = spec.holdout();
    let (full, separate_test, fit_norm) = match spec {
        DataSpec::Csv {
            train,
            test,
            label_column,
            has_header,
            ..
        } => {
            let raw = load_csv(train, Some(label_column), *has_header)
                .with_context(|| format!("reading {}", train.display()))?;
            let d = raw.features[0].len();
            let ds = to_dataset(&raw, Some(&NormStats::identity(d)), None)?;
            let test = match test {
                Some(p) => {
                    let raw = load_csv(p, Some(label_column), *has_header)
                        .with_context(|| format!("reading {}", p.display()))?;
                    let td = raw.features[0].len();
                    if td != d {
                        bail!(
                            "test file {} has d = {td} features, training file has d = {d}",
                            p.display()
                        );
                    }
                    Some(to_dataset(
                        &raw,
                        Some(&NormStats::identity(d)),
                        Some(&ds.class_names),
                    )?)
                }
                None => None,
            };
            (ds, test, true)
        }
        DataSpec::Idx {
            train_images,
            train_labels,
            test_images,
            test_labels,
            ..
        } => {
            let ds = load_idx(train_images, train_labels).with_context(|| {
                format!(
                    "reading {} and {}",
                    train_images.display(),
                    train_labels.display()
                )
            })?;
            let test = match (test_images, test_labels) {
                (Some(i), Some(l)) => Some(
                    load_idx(i, l)
                        .with_context(|| format!("reading {} and {}", i.display(), l.display()))?,
                ),
                _ => None,
            };
            (ds, test, false)
        }
    };
    let full = truncate(full, holdout.max_train_samples)?;
    let (train, test) = match holdout.test_fraction {
        Some(f) => {
            let (train, test) = split(&full, f, holdout.seed)?;
            (train, Some(test))
        }
        None => (full, separate_test),
    };
    if !fit_norm {
        return Ok(PreparedData { train, test });
    }
    let norm = NormStats::fit(&train.x);
    let test = test.map(|t| renormalize(&t, &norm)).transpose()?;
    Ok(PreparedData {
        train: renormalize(&train, &norm)?,
        test,
    })
}

pub fn run_train(mut cfg: RunConfig, overrides: &TrainOverrides) -> Result<TrainOutcome> {
    if let Some(seed) = overrides.base_seed {
        cfg.model.base_seed = seed;
    }
    cfg.validate()?;
    let model_path = overrides
        .out
        .clone()
        .or_else(|| cfg.output.model.clone())
        .ok_or_else(|| anyhow!("no model output path: pass --out or set `output.model`"))?;
    let metrics_path = overrides
        .metrics
        .clone()
        .or_else(|| cfg.output.metrics.clone());
    let workers = overrides.workers.unwrap_or(cfg.model.n_subsystems);
    if workers == 0 {
        bail!("--workers must be at least 1");
    }

    let data = prepare_data(&cfg.data)?;
    let (train, val) = split(
        &data.train,
        cfg.model.forward.early_stop.val_fraction,
        cfg.model.base_seed,
    )
    .context("splitting off the validation set")?;
    log::info!(
        "training {} member(s) on {} samples ({} validation), d = {}, {} classes",
        cfg.model.n_subsystems,
        train.n_samples(),
        val.n_samples(),
        train.dim(),
        train.n_classes()
    );
    let (mut model, report) = train_system(&train, &val, &cfg.model, workers)?;
    model.source = Some(cfg.data.source_format());

    let test_accuracy = match &data.test {
        Some(test) => {
            let labels = stpl_core::synergy::predict_normalized(&model, &test.x)?.labels;
            Some(label_accuracy(&labels, &test.labels()))
        }
        None => None,
    };

    persist::save(&model, &model_path)
        .with_context(|| format!("writing model to {}", model_path.display()))?;
    let metrics = metrics_report(&report, train.n_samples(), val.n_samples(), test_accuracy);
    if let Some(p) = &metrics_path {
        write_metrics(p, &metrics)?;
    }
    Ok(TrainOutcome {
        model,
        report,
        model_path,
        metrics,
        test_accuracy,
    })
}

/// `name, value` pairs. Entries whose name starts with `time.` hold wall-clock
/// seconds; all other entries are reproducible for a fixed configuration.
pub fn metrics_report(
    report: &TrainReport,
    n_train: usize,
    n_val: usize,
    test_accuracy: Option<f64>,
) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    let mut put = |k: String, v: String| out.push((k, v));
    put("n_train".into(), n_train.to_string());
    put("n_val".into(), n_val.to_string());
    put("n_subsystems".into(), report.members.len().to_string());
    for m in &report.members {
        let p = format!("member{}", m.index);
        put(format!("{p}.seed"), m.seed.to_string());
        put(format!("{p}.subset_size"), m.subset_size.to_string());
        put(
            format!("{p}.layers_tried"),
            m.probe_accuracy.len().to_string(),
        );
        for (k, acc) in m.probe_accuracy.iter().enumerate() {
            put(
                format!("{p}.probe_val_accuracy.depth{}", k + 1),
                acc.to_string(),
            );
        }
        put(format!("{p}.depth"), m.depth.to_string());
        put(format!("{p}.train_accuracy"), m.train_accuracy.to_string());
        put(format!("{p}.val_accuracy"), m.val_accuracy.to_string());
    }
    put("val_accuracy".into(), report.val_accuracy.to_string());
    if let Some(acc) = test_accuracy {
        put("test_accuracy".into(), acc.to_string());
    }
    for m in &report.members {
        let p = format!("time.member{}", m.index);
        put(
            format!("{p}.forward_secs"),
            format!("{:.3}", m.timings.forward_secs),
        );
        put(
            format!("{p}.backward_secs"),
            format!("{:.3}", m.timings.backward_secs),
        );
        put(
            format!("{p}.fusion_secs"),
            format!("{:.3}", m.timings.fusion_secs),
        );
    }
    put(
        "time.total_secs".into(),
        format!("{:.3}", report.train_secs),
    );
    out
}

pub fn write_metrics(path: &Path, metrics: &[(String, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in metrics {
        writeln!(text, "{k}\t{v}").expect("writing to a String");
    }
    std::fs::write(path, text).with_context(|| format!("writing metrics to {}", path.display()))
}

pub fn parse_metrics(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

pub struct EvalOutcome {
    /// Fraction in `[0, 1]`.
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub class_names: Vec<String>,
    pub n_samples: usize,
}

impl EvalOutcome {
    pub fn render(&self) -> String {
        format!(
            "accuracy\t{:.2}\n{}",
            100.0 * self.accuracy,
            self.confusion.render(&self.class_names)
        )
    }
}

fn source(model: &SynergeticModel) -> Result<&SourceFormat> {
    model
        .source
        .as_ref()
        .ok_or_else(|| anyhow!("the model does not record the format of its input data"))
}

fn check_dim(model: &SynergeticModel, found: usize) -> Result<()> {
    if found != model.input_dim() {
        bail!(
            "dimension mismatch: the model expects d = {} features, the data has d = {found}",
            model.input_dim()
        );
    }
    Ok(())
}

/// Scores a model on labelled data. For IDX models `labels` names the label
/// file; CSV files carry their labels in the column recorded in the model.
pub fn run_eval(model_path: &Path, test: &Path, labels: Option<&Path>) -> Result<EvalOutcome> {
    let model = persist::load(model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let (x, truth) = match source(&model)? {
        SourceFormat::Csv {
            label_column,
            has_header,
        } => {
            let width = column_count(test, *has_header)
                .with_context(|| format!("reading {}", test.display()))?;
            check_dim(&model, width.saturating_sub(1))?;
            let raw = load_csv(test, Some(label_column), *has_header)?;
            let ds = to_dataset(
                &raw,
                Some(&NormStats::identity(model.input_dim())),
                Some(&model.class_names),
            )?;
            (ds.x.clone(), ds.labels())
        }
        SourceFormat::Idx => {
            let labels = labels.ok_or_else(|| anyhow!("IDX evaluation needs --labels"))?;
            let ds = load_idx(test, labels)
                .with_context(|| format!("reading {} and {}", test.display(), labels.display()))?;
            check_dim(&model, ds.dim())?;
            (ds.x.clone(), ds.labels())
        }
    };
    let pred = predict(&model, &x)?;
    let n = model.n_classes();
    Ok(EvalOutcome {
        accuracy: label_accuracy(&pred.labels, &truth),
        confusion: ConfusionMatrix::new(n, &pred.labels, &truth),
        class_names: model.class_names.clone(),
        n_samples: truth.len(),
    })
}

fn load_inputs(model: &SynergeticModel, input: &Path) -> Result<DataMatrix> {
    let x = match source(model)? {
        SourceFormat::Csv {
            label_column,
            has_header,
        } => load_features(input, model.input_dim(), Some(label_column), *has_header)?,
        SourceFormat::Idx => load_idx_images(input)?,
    };
    check_dim(model, x.rows())?;
    Ok(x)
}

/// Writes one predicted class name per input sample; returns the count.
pub fn run_predict(model_path: &Path, input: &Path, output: &Path) -> Result<usize> {
    let model = persist::load(model_path)
        .with_context(|| format!("loading model {}", model_path.display()))?;
    let x = load_inputs(&model, input).with_context(|| format!("reading {}", input.display()))?;
    let pred = predict(&model, &x)?;
    let mut text = String::new();
    for &l in &pred.labels {
        text.push_str(&model.class_names[l]);
        text.push('\n');
    }
    std::fs::write(output, text)
        .with_context(|| format!("writing predictions to {}", output.display()))?;
    Ok(pred.labels.len())
}
