use proptest::prelude::*;
use stpl_core::backward::BackwardModel;
use stpl_core::data::{split, LabeledDataset, NormStats};
use stpl_core::forward::{ForwardConfig, ForwardModel, LayerSpec};
use stpl_core::fusion::{FusionClassifier, FusionSelection};
use stpl_core::persist::{from_bytes, to_bytes};
use stpl_core::rng::{gaussian, seeded, Rng};
use stpl_core::synergy::{
    aggregate_scores, sample_subset, Aggregation, ElementaryModel, SynergeticModel, SynergyConfig,
};
use stpl_core::{Activation, DataMatrix};

fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> DataMatrix {
    DataMatrix::new(gaussian(rows, cols, rng)).unwrap()
}

fn chain(d: usize, widths: &[usize], c: usize, rng: &mut Rng) -> (Vec<DataMatrix>, DataMatrix) {
    let mut prev = d;
    let layers = widths
        .iter()
        .map(|&w| {
            let m = random_matrix(w, prev, rng);
            prev = w;
            m
        })
        .collect();
    (layers, random_matrix(c, prev, rng))
}

/// A structurally valid model with random shapes and weights.
fn random_model(seed: u64, d: usize, c: usize, members: usize) -> SynergeticModel {
    let mut rng = seeded(seed);
    let acts = [Activation::TANH, Activation::SIGMOID, Activation::IDENTITY];
    let members = (0..members)
        .map(|i| {
            let fw: Vec<usize> = (0..1 + (seed as usize + i) % 3)
                .map(|k| 1 + (k * 7 + i) % 5)
                .collect();
            let bw: Vec<usize> = (0..1 + (seed as usize + 2 * i) % 2)
                .map(|k| 2 + k)
                .collect();
            let (fl, fo) = chain(d, &fw, c, &mut rng);
            let (bl, bo) = chain(d, &bw, c, &mut rng);
            let fused = fw.last().unwrap() + bw.last().unwrap();
            let n_neurons = 1 + (seed as usize + i) % 6;
            ElementaryModel {
                forward: ForwardModel::new(fl, acts[i % 3], fo).unwrap(),
                backward: BackwardModel::new(bl, acts[(i + 1) % 3], bo).unwrap(),
                fusion_sel: FusionSelection::default(),
                classifier: FusionClassifier::new(
                    random_matrix(n_neurons, fused, &mut rng),
                    acts[(i + 2) % 3],
                    random_matrix(c, n_neurons, &mut rng),
                )
                .unwrap(),
                subsystem_seed: seed.wrapping_add(i as u64),
            }
        })
        .collect();
    let mut config = SynergyConfig::new(ForwardConfig::new(vec![LayerSpec::ridge(4, 1e-3)]));
    config.base_seed = seed;
    SynergeticModel {
        members,
        aggregation: Aggregation::MeanScore,
        norm: NormStats {
            mean: gaussian(d, 1, &mut rng).iter().copied().collect(),
            std: gaussian(d, 1, &mut rng).iter().map(|v| v.abs()).collect(),
        },
        class_names: (0..c).map(|k| format!("class {k}")).collect(),
        source: None,
        config,
    }
}

fn labelled(labels: &[usize], n_classes: usize) -> LabeledDataset {
    let x = DataMatrix::from_fn(1, labels.len(), |_, j| j as f64);
    let names = (0..n_classes).map(|c| c.to_string()).collect();
    LabeledDataset::from_labels(x, labels, names, NormStats::identity(1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_proportions_per_class(
        labels in prop::collection::vec(0..4usize, 8..80),
        fraction in 0.05..0.95f64,
        seed in any::<u64>(),
    ) {
        let ds = labelled(&labels, 4);
        let counts: Vec<usize> = (0..4).map(|c| labels.iter().filter(|&&l| l == c).count()).collect();
        prop_assume!(counts.iter().any(|&n| n >= 2));
        let (train, val) = split(&ds, fraction, seed).unwrap();
        prop_assert_eq!(train.n_samples() + val.n_samples(), labels.len());

        // the feature value is the original column index
        let mut seen: Vec<usize> = train.x.to_row_major().iter().chain(val.x.to_row_major().iter())
            .map(|&v| v as usize).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..labels.len()).collect::<Vec<_>>());

        let val_labels = val.labels();
        for (c, &n) in counts.iter().enumerate() {
            let expected = if n < 2 { 0 } else { ((fraction * n as f64).ceil() as usize).min(n - 1) };
            let got = val_labels.iter().filter(|&&l| l == c).count();
            // ceil on a product that lands within rounding of an integer may go either way
            let exact = fraction * n as f64;
            if (exact - exact.round()).abs() > 1e-9 {
                prop_assert_eq!(got, expected, "class {} with {} samples", c, n);
            } else {
                prop_assert!(got == expected || got + 1 == expected);
            }
        }
        prop_assert_eq!(split(&ds, fraction, seed).unwrap().1, val);
    }

    #[test]
    fn subset_sampling(n in 1..500usize, ratio in 0.01..=1.0f64, seed in any::<u64>()) {
        let idx = sample_subset(n, ratio, seed);
        let expected = ((ratio * n as f64).ceil() as usize).clamp(1, n);
        prop_assert!(idx.len() == expected || idx.len() + 1 == expected);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(idx.iter().all(|&i| i < n));
        prop_assert_eq!(sample_subset(n, ratio, seed), idx);
    }

    #[test]
    fn aggregation_ignores_member_order(
        k in 1..6usize,
        seed in any::<u64>(),
        rotation in 0..6usize,
    ) {
        let mut rng = seeded(seed);
        let scores: Vec<DataMatrix> = (0..k).map(|_| random_matrix(3, 7, &mut rng)).collect();
        let mut shuffled = scores.clone();
        shuffled.rotate_left(rotation % k);
        shuffled.reverse();
        let a = aggregate_scores(&scores).unwrap();
        let b = aggregate_scores(&shuffled).unwrap();
        prop_assert!(a.distance(&b) <= 1e-12 * a.frobenius_norm().max(1.0));
        let same = aggregate_scores(&vec![scores[0].clone(); k]).unwrap();
        prop_assert!(same.distance(&scores[0]) <= 1e-12 * scores[0].frobenius_norm().max(1.0));
    }

    #[test]
    fn model_bytes_round_trip(seed in any::<u64>(), d in 1..5usize, c in 2..4usize, k in 1..4usize) {
        let model = random_model(seed, d, c, k);
        let bytes = to_bytes(&model).unwrap();
        let back = from_bytes(&bytes).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(to_bytes(&back).unwrap(), bytes);
    }

    #[test]
    fn any_single_bit_flip_is_rejected(seed in any::<u64>(), position in any::<prop::sample::Index>(), bit in 0..8u8) {
        let bytes = to_bytes(&random_model(seed, 3, 2, 2)).unwrap();
        let mut corrupt = bytes.clone();
        corrupt[position.index(bytes.len())] ^= 1 << bit;
        prop_assert!(from_bytes(&corrupt).is_err());
    }

    #[test]
    fn truncation_is_rejected(seed in any::<u64>(), cut in any::<prop::sample::Index>()) {
        let bytes = to_bytes(&random_model(seed, 2, 3, 1)).unwrap();
        prop_assert!(from_bytes(&bytes[..cut.index(bytes.len())]).is_err());
    }
}
