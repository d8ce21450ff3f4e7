use rand::seq::SliceRandom;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Columns `indices` of `ds`, in the given order, with the parent's
/// vocabulary and normalization statistics.
pub fn subset(ds: &LabeledDataset, indices: &[usize]) -> Result<LabeledDataset> {
    Ok(LabeledDataset {
        x: ds.x.select_columns(indices)?,
        t: ds.t.select_columns(indices)?,
        class_names: ds.class_names.clone(),
        norm: ds.norm.clone(),
    })
}

/// Seeded stratified split into `(train, val)`.
///
/// Each class sends `ceil(fraction * n_class)` of its columns to `val`,
/// capped at `n_class - 1` so every class keeps a training sample. A class
/// with fewer than two samples stays entirely in `train` and a warning is
/// logged. Both halves keep the original column order.
pub fn split(
    ds: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::config(
            "val_fraction",
            format!("must lie in (0, 1), got {fraction}"),
        ));
    }
    let labels = ds.labels();
    let mut rng = seeded(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in 0..ds.n_classes() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&j| labels[j] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            log::warn!(
                "class `{}` has {} sample(s); keeping it out of the validation split",
                ds.class_names[class],
                members.len()
            );
            train.extend(members);
            continue;
        }
        members.shuffle(&mut rng);
        let n_val = super::ceil_count(fraction, members.len()).min(members.len() - 1);
        val.extend_from_slice(&members[..n_val]);
        train.extend_from_slice(&members[n_val..]);
    }
    if val.is_empty() {
        return Err(Error::DegenerateInput(
            "no class has enough samples for a validation split".into(),
        ));
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((subset(ds, &train)?, subset(ds, &val)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabeledDataset, NormStats};
    use crate::linalg::DataMatrix;

    fn numbered(labels: &[usize], n_classes: usize) -> LabeledDataset {
        let n = labels.len();
        let x = DataMatrix::from_fn(1, n, |_, j| j as f64);
        let names = (0..n_classes).map(|c| format!("c{c}")).collect();
        LabeledDataset::from_labels(x, labels, names, NormStats::identity(1)).unwrap()
    }

    fn ids(ds: &LabeledDataset) -> Vec<usize> {
        (0..ds.n_samples()).map(|j| ds.x[(0, j)] as usize).collect()
    }

    #[test]
    fn balanced_fifth() {
        let labels: Vec<usize> = (0..100).map(|j| j % 2).collect();
        let ds = numbered(&labels, 2);
        let (train, val) = split(&ds, 0.2, 4).unwrap();
        assert_eq!(val.n_samples(), 20);
        assert_eq!(val.labels().iter().filter(|&&l| l == 0).count(), 10);
        let mut all = ids(&train);
        all.extend(ids(&val));
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split(&ds, 0.2, 4).unwrap().1, val);
        assert_ne!(ids(&split(&ds, 0.2, 5).unwrap().1), ids(&val));
    }

    #[test]
    fn singleton_class_stays_in_train() {
        let ds = numbered(&[0, 0, 0, 0, 1], 2);
        let (train, val) = split(&ds, 0.5, 0).unwrap();
        assert!(ids(&train).contains(&4));
        assert_eq!(val.n_samples(), 2);
    }

    #[test]
    fn every_class_keeps_a_training_sample() {
        let ds = numbered(&[0, 0, 1, 1], 2);
        let (train, val) = split(&ds, 0.9, 0).unwrap();
        assert_eq!(train.n_samples(), 2);
        assert_eq!(val.n_samples(), 2);
    }

    #[test]
    fn bad_fraction() {
        let ds = numbered(&[0, 1], 2);
        assert!(split(&ds, 0.0, 0).is_err());
        assert!(split(&ds, 1.0, 0).is_err());
    }
}
