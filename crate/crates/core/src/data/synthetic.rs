//! Generated data sets used by tests, examples and the CLI fixtures.

use rand_distr::{Distribution, StandardNormal};

use super::{LabeledDataset, NormStats};
use crate::error::Result;
use crate::linalg::DataMatrix;
use crate::rng::seeded;

/// Two isotropic Gaussian clouds in the plane centred at `(-half_gap, 0)`
/// (class `"0"`) and `(half_gap, 0)` (class `"1"`). Columns alternate
/// between the classes. With `half_gap >= 2 * sigma` the centres are at
/// least `4 sigma` apart.
pub fn gaussian_blobs(n_per_class: usize, half_gap: f64, sigma: f64, seed: u64) -> LabeledDataset {
    let mut rng = seeded(seed);
    let n = 2 * n_per_class;
    let mut values = vec![0.0; 2 * n];
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let class = j % 2;
        let centre = if class == 0 { -half_gap } else { half_gap };
        let dx: f64 = StandardNormal.sample(&mut rng);
        let dy: f64 = StandardNormal.sample(&mut rng);
        values[j] = centre + sigma * dx;
        values[n + j] = sigma * dy;
        labels.push(class);
    }
    let x = DataMatrix::from_row_major(2, n, values)
        .expect("blob parameters must be finite and n_per_class > 0");
    build(x, &labels)
}

fn build(x: DataMatrix, labels: &[usize]) -> LabeledDataset {
    let norm = NormStats::identity(x.rows());
    LabeledDataset::from_labels(x, labels, vec!["0".into(), "1".into()], norm)
        .expect("labels are 0 or 1")
}

/// Writes a labelled data set as CSV rows `f1,...,fd,label`.
pub fn write_csv(ds: &LabeledDataset, path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = ::csv::Writer::from_path(path).map_err(|e| std::io::Error::other(e.to_string()))?;
    let labels = ds.labels();
    for (j, &label) in labels.iter().enumerate() {
        let mut rec: Vec<String> = (0..ds.dim())
            .map(|i| format!("{:?}", ds.x[(i, j)]))
            .collect();
        rec.push(ds.class_names[label].clone());
        w.write_record(&rec)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_are_interleaved_and_seeded() {
        let a = gaussian_blobs(50, 2.0, 0.5, 9);
        assert_eq!(a.x.shape(), (2, 100));
        assert_eq!(a.labels()[..4], [0, 1, 0, 1]);
        assert_eq!(a, gaussian_blobs(50, 2.0, 0.5, 9));
        assert_ne!(a.x, gaussian_blobs(50, 2.0, 0.5, 10).x);
    }

    #[test]
    fn csv_round_trip_keeps_values() {
        let ds = gaussian_blobs(5, 2.0, 0.5, 1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.csv");
        write_csv(&ds, &p).unwrap();
        let raw =
            crate::data::load_csv(&p, Some(&crate::data::LabelColumn::Index(2)), false).unwrap();
        let back =
            crate::data::to_dataset(&raw, Some(&NormStats::identity(2)), Some(&ds.class_names))
                .unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.t, ds.t);
    }
}
