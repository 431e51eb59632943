use serde::{Deserialize, Serialize};

use super::model::argmax;

/// Granularity of the validation accuracy estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    /// One estimate per (position, file).
    #[default]
    PerFile,
    /// Per position, pooled over files and broadcast to every file.
    PerPosition,
}

/// Per-user accuracy table `a[s][f]`.
///
/// `predictions[k][s]` is the predicted distribution for position `s` of
/// validation slot `k`, `truth[k][s]` the file actually requested. Cell
/// `(s, f)` is the fraction of slots whose true request at `s` was `f` that
/// the predictor's argmax also named `f`. Cells with no true request are 0.
pub fn estimate_accuracy(
    predictions: &[Vec<Vec<f64>>],
    truth: &[Vec<usize>],
    horizon: usize,
    num_files: usize,
    mode: AccuracyMode,
) -> Vec<Vec<f64>> {
    assert_eq!(predictions.len(), truth.len());
    let mut hits = vec![vec![0usize; num_files]; horizon];
    let mut seen = vec![vec![0usize; num_files]; horizon];
    for (pred, actual) in predictions.iter().zip(truth) {
        for s in 0..horizon {
            let f = actual[s];
            seen[s][f] += 1;
            if argmax(&pred[s]) == f {
                hits[s][f] += 1;
            }
        }
    }
    match mode {
        AccuracyMode::PerFile => hits
            .iter()
            .zip(&seen)
            .map(|(h, n)| {
                h.iter()
                    .zip(n)
                    .map(|(&h, &n)| if n == 0 { 0.0 } else { h as f64 / n as f64 })
                    .collect()
            })
            .collect(),
        AccuracyMode::PerPosition => hits
            .iter()
            .zip(&seen)
            .map(|(h, n)| {
                let (h, n): (usize, usize) = (h.iter().sum(), n.iter().sum());
                let a = if n == 0 { 0.0 } else { h as f64 / n as f64 };
                vec![a; num_files]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn peaked(num_files: usize, f: usize) -> Vec<f64> {
        let mut r = vec![0.0; num_files];
        r[f] = 1.0;
        r
    }

    #[test]
    fn perfect_predictor() {
        let truth = vec![vec![0, 1], vec![2, 2], vec![1, 0]];
        let preds: Vec<Vec<Vec<f64>>> = truth
            .iter()
            .map(|t| t.iter().map(|&f| peaked(4, f)).collect())
            .collect();
        let a = estimate_accuracy(&preds, &truth, 2, 4, AccuracyMode::PerFile);
        for s in 0..2 {
            for f in 0..4 {
                let present = truth.iter().any(|t| t[s] == f);
                assert_eq!(a[s][f], if present { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn never_predicted_file_scores_zero() {
        let truth = vec![vec![1], vec![1]];
        let preds = vec![vec![peaked(3, 0)], vec![peaked(3, 2)]];
        let a = estimate_accuracy(&preds, &truth, 1, 3, AccuracyMode::PerFile);
        assert_eq!(a[0][1], 0.0);
    }

    #[test]
    fn two_of_three_fixture() {
        // f = 3 at s = 0: correct, correct, wrong, absent.
        let truth = vec![vec![3], vec![3], vec![3], vec![1]];
        let preds = vec![
            vec![peaked(5, 3)],
            vec![peaked(5, 3)],
            vec![peaked(5, 0)],
            vec![peaked(5, 3)],
        ];
        let a = estimate_accuracy(&preds, &truth, 1, 5, AccuracyMode::PerFile);
        assert!((a[0][3] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(a[0][1], 0.0);
        let pooled = estimate_accuracy(&preds, &truth, 1, 5, AccuracyMode::PerPosition);
        assert!(pooled[0].iter().all(|&x| (x - 0.5).abs() < 1e-15));
    }
}
