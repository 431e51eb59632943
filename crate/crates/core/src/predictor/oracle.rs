//! Controlled-accuracy surrogate predictor. Each predicted row is a
//! near-one-hot vector on either the true file or a popularity-drawn
//! distractor.

use rand::Rng;

use crate::request_model::sample_index;
use crate::rng::SimRng;

/// Probability mass placed on the chosen file.
pub const PEAK_MASS: f64 = 0.95;

fn near_one_hot(num_files: usize, peak: usize) -> Vec<f64> {
    let rest = (1.0 - PEAK_MASS) / (num_files - 1) as f64;
    let mut row = vec![rest; num_files];
    row[peak] = PEAK_MASS;
    row
}

/// `accuracy[s]` is the probability that row `s` peaks on `true_future[s]`.
/// Distractors follow `popularity` with the true file removed, falling back
/// to uniform when that leaves no mass.
pub fn noisy_oracle_predict(
    true_future: &[usize],
    accuracy: &[f64],
    popularity: &[f64],
    rng: &mut SimRng,
) -> Vec<Vec<f64>> {
    let num_files = popularity.len();
    assert!(num_files >= 2, "need at least two files");
    assert!(accuracy.len() >= true_future.len());
    true_future
        .iter()
        .zip(accuracy)
        .map(|(&truth, &acc)| {
            let draw: f64 = rng.random();
            let peak = if draw < acc {
                truth
            } else {
                let mut weights = popularity.to_vec();
                weights[truth] = 0.0;
                if weights.iter().sum::<f64>() <= 0.0 {
                    weights = vec![1.0; num_files];
                    weights[truth] = 0.0;
                }
                sample_index(&weights, rng)
            };
            near_one_hot(num_files, peak)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::model::argmax;
    use rand::SeedableRng;

    fn pop() -> Vec<f64> {
        vec![0.4, 0.3, 0.2, 0.1]
    }

    #[test]
    fn perfect_accuracy() {
        let mut rng = SimRng::seed_from_u64(1);
        for _ in 0..200 {
            let rows = noisy_oracle_predict(&[2, 3], &[1.0, 1.0], &pop(), &mut rng);
            assert_eq!(argmax(&rows[0]), 2);
            assert_eq!(argmax(&rows[1]), 3);
            for row in rows {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_accuracy_never_hits() {
        let mut rng = SimRng::seed_from_u64(2);
        for _ in 0..200 {
            let rows = noisy_oracle_predict(&[0, 1], &[0.0, 0.0], &pop(), &mut rng);
            assert_ne!(argmax(&rows[0]), 0);
            assert_ne!(argmax(&rows[1]), 1);
        }
        // All popularity on the true file: distractor falls back to uniform.
        let rows = noisy_oracle_predict(&[0], &[0.0], &[1.0, 0.0, 0.0], &mut rng);
        assert_ne!(argmax(&rows[0]), 0);
    }

    #[test]
    fn calibrated_per_position_accuracy() {
        let target = [0.8531, 0.8167, 0.7968, 0.7771, 0.7414];
        let mut rng = SimRng::seed_from_u64(3);
        let trials = 10_000;
        let mut hits = [0usize; 5];
        let truth = [0, 1, 2, 3, 0];
        for _ in 0..trials {
            let rows = noisy_oracle_predict(&truth, &target, &pop(), &mut rng);
            for s in 0..5 {
                hits[s] += (argmax(&rows[s]) == truth[s]) as usize;
            }
        }
        for s in 0..5 {
            let acc = hits[s] as f64 / trials as f64;
            assert!((acc - target[s]).abs() < 0.01, "position {s}: {acc}");
        }
    }
}
