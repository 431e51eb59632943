//! Per-user multi-slot demand prediction: a FedAvg-trained classifier, a
//! calibrated noisy oracle, and the validation accuracy estimator.

mod accuracy;
pub mod checkpoint;
mod dataset;
mod model;
mod oracle;
mod training;

use std::ops::Range;

pub use accuracy::{estimate_accuracy, AccuracyMode};
pub use dataset::{build_dataset, sample_count, TrainingSample};
pub use model::{argmax, softmax, Architecture, ModelParams};
pub use oracle::{noisy_oracle_predict, PEAK_MASS};
pub use training::{
    average, fedavg_round, local_seed, local_update, train_centralized, train_federated, FlConfig,
    LocalUpdate, RoundOutcome,
};

use crate::error::{Error, Result};
use crate::request_model::RequestTrace;

/// Predictions for one upcoming placement slot, as held by the users.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBundle {
    /// `probs[u][s][f]`
    pub probs: Vec<Vec<Vec<f64>>>,
    /// `accuracy[u][s][f]`
    pub accuracy: Vec<Vec<Vec<f64>>>,
    /// `popularity[u][f]`
    pub popularity: Vec<Vec<f64>>,
}

impl PredictionBundle {
    pub fn validate(&self) -> Result<()> {
        let users = self.probs.len();
        if self.accuracy.len() != users || self.popularity.len() != users {
            return Err(Error::ShapeMismatch {
                expected: format!("{users} users in every table"),
                actual: format!(
                    "{} accuracy tables, {} popularity vectors",
                    self.accuracy.len(),
                    self.popularity.len()
                ),
            });
        }
        for u in 0..users {
            let shape_ok = self.probs[u].len() == self.accuracy[u].len()
                && self.probs[u]
                    .iter()
                    .zip(&self.accuracy[u])
                    .all(|(p, a)| p.len() == a.len() && p.len() == self.popularity[u].len());
            if !shape_ok {
                return Err(Error::ShapeMismatch {
                    expected: "matching (position, file) shapes".into(),
                    actual: format!("user {u} differs"),
                });
            }
            for row in &self.probs[u] {
                if (row.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidDimension(format!(
                        "user {u} has a prediction row that does not sum to 1"
                    )));
                }
            }
            if self.accuracy[u].iter().flatten().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::InvalidDimension(format!(
                    "user {u} has an accuracy outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// The user's own last `history` requests before mini-slot `start`.
pub fn history_before(trace: &RequestTrace, user: usize, start: usize, history: usize) -> &[usize] {
    &trace.user(user)[start - history..start]
}

/// Top-1 accuracy at each position, pooled over users and the placement
/// slots in `slots`.
pub fn top1_accuracy_by_position(
    params: &ModelParams,
    trace: &RequestTrace,
    slots: Range<usize>,
    slot_len: usize,
) -> Result<Vec<f64>> {
    let horizon = params.arch.horizon;
    if slot_len > horizon {
        return Err(Error::ShapeMismatch {
            expected: format!("slot length at most the model horizon {horizon}"),
            actual: slot_len.to_string(),
        });
    }
    let mut hits = vec![0usize; slot_len];
    let mut total = 0usize;
    for slot in slots {
        let start = slot * slot_len;
        if start < params.arch.history {
            continue;
        }
        for u in 0..trace.num_users() {
            let rows = params.predict(history_before(trace, u, start, params.arch.history))?;
            for s in 0..slot_len {
                hits[s] += (argmax(&rows[s]) == trace.user(u)[start + s]) as usize;
            }
            total += 1;
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| if total == 0 { 0.0 } else { h as f64 / total as f64 })
        .collect())
}
