use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabeledDataset, NormStats};
use crate::error::{Error, Result};
use crate::linalg::DataMatrix;

/// Label column given either by zero-based position or by header name.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

/// A parsed comma-separated file: numeric feature rows plus the raw label
/// strings when a label column was requested.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub feature_names: Option<Vec<String>>,
    /// One entry per data row.
    pub features: Vec<Vec<f64>>,
    pub labels: Option<Vec<String>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    /// Features as a `d x N` matrix (one column per row of the file).
    pub fn feature_matrix(&self) -> Result<DataMatrix> {
        DataMatrix::from_rows(&self.features).map(|m| m.transpose())
    }
}

/// Reads a comma-delimited UTF-8 file.
///
/// With `label_column = None` every column must be numeric. Row and column
/// numbers in parse errors are 1-based and count the header line.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: Option<&LabelColumn>,
    has_header: bool,
) -> Result<RawTable> {
    let path = path.as_ref();
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(::csv::Trim::All)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let header: Option<Vec<String>> = if has_header {
        Some(
            reader
                .headers()
                .map_err(|e| csv_error(path, e))?
                .iter()
                .map(str::to_owned)
                .collect(),
        )
    } else {
        None
    };

    let mut label_idx: Option<usize> = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let first_data_line = if has_header { 2 } else { 1 };

    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = i + first_data_line;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if label_idx.is_none() {
            label_idx = match label_column {
                None => None,
                Some(col) => Some(resolve_label_column(
                    path,
                    col,
                    header.as_deref(),
                    record.len(),
                )?),
            };
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_idx {
                labels.push(cell.to_owned());
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_owned(),
                row: line,
                col: j + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    row: line,
                    col: j + 1,
                    message: "value is not finite".into(),
                });
            }
            row.push(value);
        }
        features.push(row);
    }
    if features.is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            row: first_data_line,
            col: 1,
            message: "no data rows".into(),
        });
    }
    if features[0].is_empty() {
        return Err(Error::Parse {
            path: path.to_owned(),
            row: first_data_line,
            col: 1,
            message: "no feature columns".into(),
        });
    }
    let feature_names = header.map(|h| {
        h.into_iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != label_idx)
            .map(|(_, name)| name)
            .collect()
    });
    Ok(RawTable {
        feature_names,
        features,
        labels: label_column.map(|_| labels),
    })
}

/// Number of fields in the first data row.
pub fn column_count(path: impl AsRef<Path>, has_header: bool) -> Result<usize> {
    let path = path.as_ref();
    let mut reader = ::csv::ReaderBuilder::new()
        .has_headers(has_header)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut first = ::csv::StringRecord::new();
    reader
        .read_record(&mut first)
        .map_err(|e| csv_error(path, e))?;
    Ok(first.len())
}

/// Reads a feature matrix (`dim x N`) for prediction. Files with exactly one
/// extra column are assumed to carry labels in `label_column`, which is
/// dropped.
pub fn load_features(
    path: impl AsRef<Path>,
    dim: usize,
    label_column: Option<&LabelColumn>,
    has_header: bool,
) -> Result<DataMatrix> {
    let path = path.as_ref();
    let width = column_count(path, has_header)?;
    let label = if width == dim + 1 { label_column } else { None };
    let raw = load_csv(path, label, has_header)?;
    let found = raw.features[0].len();
    if found != dim {
        return Err(Error::dim(
            "input features",
            format!("d = {dim}"),
            format!("d = {found}"),
        ));
    }
    raw.feature_matrix()
}

fn resolve_label_column(
    path: &Path,
    col: &LabelColumn,
    header: Option<&[String]>,
    width: usize,
) -> Result<usize> {
    let idx = match col {
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => header
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| Error::Parse {
                path: path.to_owned(),
                row: 1,
                col: 1,
                message: format!("label column `{name}` not found in header"),
            })?,
    };
    if idx >= width {
        return Err(Error::Parse {
            path: path.to_owned(),
            row: 1,
            col: idx + 1,
            message: format!("label column {idx} is out of range for {width} columns"),
        });
    }
    Ok(idx)
}

fn csv_error(path: &Path, e: ::csv::Error) -> Error {
    let (row, col) = match e.position() {
        Some(pos) => (pos.line() as usize, 1),
        None => (0, 0),
    };
    match e.into_kind() {
        ::csv::ErrorKind::Io(io) => Error::Io(io),
        ::csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => Error::Parse {
            path: path.to_owned(),
            row,
            col: len as usize + 1,
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => Error::Parse {
            path: path.to_owned(),
            row,
            col,
            message: format!("{other:?}"),
        },
    }
}

/// Turns a raw table into a normalized, one-hot labelled data set.
///
/// Without `norm` the z-score statistics are computed from this table;
/// without `classes` class indices follow first appearance. Supplying both
/// (evaluation time) applies the training statistics and vocabulary, and an
/// unseen label is an error.
pub fn to_dataset(
    raw: &RawTable,
    norm: Option<&NormStats>,
    classes: Option<&[String]>,
) -> Result<LabeledDataset> {
    let labels = raw.labels.as_ref().ok_or_else(|| {
        Error::config(
            "label_column",
            "the table was loaded without a label column",
        )
    })?;
    let x_raw = raw.feature_matrix()?;
    let norm = match norm {
        Some(n) => n.clone(),
        None => NormStats::fit(&x_raw),
    };
    let x = norm.apply(&x_raw)?;

    let mut class_names: Vec<String> = classes.map(<[String]>::to_vec).unwrap_or_default();
    let fixed = classes.is_some();
    let mut indices = Vec::with_capacity(labels.len());
    for label in labels {
        let idx = match class_names.iter().position(|c| c == label) {
            Some(i) => i,
            None if fixed => {
                return Err(Error::UnknownClass {
                    label: label.clone(),
                    known: class_names,
                })
            }
            None => {
                class_names.push(label.clone());
                class_names.len() - 1
            }
        };
        indices.push(idx);
    }
    LabeledDataset::from_labels(x, &indices, class_names, norm)
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_row_file() {
        let f = write("1,0,a\n0,1,b\n");
        let raw = load_csv(f.path(), Some(&LabelColumn::Index(2)), false).unwrap();
        let ds = to_dataset(&raw, Some(&NormStats::identity(2)), None).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.n_samples(), 2);
        assert_eq!(ds.n_classes(), 2);
        assert_eq!(ds.t.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(ds.x.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(ds.class_names, vec!["a", "b"]);
    }

    #[test]
    fn header_and_named_label() {
        let f = write("cls,f1,f2\nx,1.5,2\ny,3,4\nx,0,0\n");
        let raw = load_csv(f.path(), Some(&LabelColumn::Name("cls".into())), true).unwrap();
        assert_eq!(
            raw.feature_names.as_deref(),
            Some(&["f1".to_string(), "f2".to_string()][..])
        );
        assert_eq!(raw.features[0], vec![1.5, 2.0]);
        assert_eq!(raw.labels.as_deref().unwrap(), ["x", "y", "x"]);
    }

    #[test]
    fn constant_feature_is_centred_only() {
        let f = write("3,1,a\n3,2,b\n3,4,a\n");
        let raw = load_csv(f.path(), Some(&LabelColumn::Index(2)), false).unwrap();
        let ds = to_dataset(&raw, None, None).unwrap();
        assert_eq!(ds.x.to_rows()[0], vec![0.0, 0.0, 0.0]);
        assert_eq!(ds.norm.std[0], 0.0);
    }

    #[test]
    fn bad_cell_reports_position() {
        let f = write("1,2,a\n1,oops,b\n");
        let err = load_csv(f.path(), Some(&LabelColumn::Index(2)), false).unwrap_err();
        match err {
            Error::Parse { row, col, .. } => assert_eq!((row, col), (2, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_class_at_apply_time() {
        let f = write("1,a\n2,c\n");
        let raw = load_csv(f.path(), Some(&LabelColumn::Index(1)), false).unwrap();
        let known = vec!["a".to_string(), "b".to_string()];
        let err = to_dataset(&raw, Some(&NormStats::identity(1)), Some(&known)).unwrap_err();
        assert!(matches!(err, Error::UnknownClass { ref label, .. } if label == "c"));
    }

    #[test]
    fn applying_train_stats_reproduces_train_features() {
        let f = write("1,5,a\n2,7,b\n4,1,a\n8,0,b\n");
        let raw = load_csv(f.path(), Some(&LabelColumn::Index(2)), false).unwrap();
        let train = to_dataset(&raw, None, None).unwrap();
        let again = to_dataset(&raw, Some(&train.norm), Some(&train.class_names)).unwrap();
        assert!(train.x.distance(&again.x) <= 1e-12);
        assert_eq!(train.t, again.t);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let f = write("1,2,a\n1,b\n");
        assert!(load_csv(f.path(), Some(&LabelColumn::Index(2)), false).is_err());
    }

    #[test]
    fn features_with_or_without_labels() {
        let labelled = write("1,2,a\n3,4,b\n5,6,a\n");
        let m = load_features(labelled.path(), 2, Some(&LabelColumn::Index(2)), false).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m[(1, 2)], 6.0);
        let bare = write("1,2\n3,4\n");
        assert_eq!(
            load_features(bare.path(), 2, Some(&LabelColumn::Index(2)), false)
                .unwrap()
                .shape(),
            (2, 2)
        );
        assert!(matches!(
            load_features(bare.path(), 3, None, false),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn label_column_out_of_range() {
        let f = write("1,2\n");
        assert!(load_csv(f.path(), Some(&LabelColumn::Index(5)), false).is_err());
    }
}
