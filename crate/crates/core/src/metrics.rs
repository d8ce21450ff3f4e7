use crate::linalg::DataMatrix;

/// Fraction of columns whose score argmax matches the one-hot target argmax.
pub fn accuracy(scores: &DataMatrix, targets: &DataMatrix) -> f64 {
    assert_eq!(
        scores.cols(),
        targets.cols(),
        "accuracy: column counts differ"
    );
    label_accuracy(&scores.column_argmax(), &targets.column_argmax())
}

pub fn label_accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// `counts[true][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize, predicted: &[usize], truth: &[usize]) -> Self {
        let mut counts = vec![vec![0; n_classes]; n_classes];
        for (&p, &t) in predicted.iter().zip(truth) {
            counts[t][p] += 1;
        }
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Tab-separated table with a header row of predicted classes.
    pub fn render(&self, class_names: &[String]) -> String {
        let mut out = String::from("true\\pred");
        for name in class_names {
            out.push('\t');
            out.push_str(name);
        }
        out.push('\n');
        for (name, row) in class_names.iter().zip(&self.counts) {
            out.push_str(name);
            for c in row {
                out.push('\t');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}
