//! Mini-batch SGD and FedAvg.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::TrainingSample;
use super::model::ModelParams;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, SimRng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlConfig {
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for FlConfig {
    /// Desk-scale schedule, sized to train in well under a minute on one core.
    fn default() -> Self {
        Self {
            rounds: 20,
            local_epochs: 1,
            batch_size: 32,
            learning_rate: 0.5,
        }
    }
}

impl FlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.local_epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "rounds, local epochs and batch size must all be at least 1".into(),
            ));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }

    /// SGD steps one client takes per round on `samples` local samples.
    pub fn local_steps(&self, samples: usize) -> usize {
        self.local_epochs * samples.div_ceil(self.batch_size)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    pub params: ModelParams,
    /// Mean of the mini-batch losses seen during the update.
    pub mean_loss: f64,
}

/// Runs `epochs` passes of shuffled mini-batch SGD from `start`.
pub fn local_update(
    start: &ModelParams,
    data: &[TrainingSample],
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
) -> Result<LocalUpdate> {
    if data.is_empty() {
        return Err(Error::Config("local update on an empty dataset".into()));
    }
    let mut params = start.clone();
    let mut grad = vec![0.0; params.values.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = SimRng::seed_from_u64(seed);
    let (mut loss_sum, mut steps) = (0.0, 0usize);
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size.max(1)) {
            let loss = params.batch_loss_and_grad(chunk.iter().map(|&i| &data[i]), &mut grad);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { user: None });
            }
            for (w, g) in params.values.iter_mut().zip(&grad) {
                *w -= learning_rate * g;
            }
            loss_sum += loss;
            steps += 1;
        }
    }
    if !params.is_finite() {
        return Err(Error::NonFiniteLoss { user: None });
    }
    Ok(LocalUpdate {
        params,
        mean_loss: loss_sum / steps.max(1) as f64,
    })
}

/// Uniform average, summed in slice order. A single model is returned
/// unchanged.
pub fn average(models: &[ModelParams]) -> ModelParams {
    let mut out = models[0].clone();
    if models.len() == 1 {
        return out;
    }
    for m in &models[1..] {
        for (a, b) in out.values.iter_mut().zip(&m.values) {
            *a += b;
        }
    }
    let n = models.len() as f64;
    out.values.iter_mut().for_each(|v| *v /= n);
    out
}

pub fn local_seed(seed: u64, round: usize, user: usize) -> u64 {
    derive_seed(seed, Stream::LocalUpdate, &[round as u64, user as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub params: ModelParams,
    pub mean_loss: f64,
}

/// One FedAvg round: every user starts from a copy of `global`, trains
/// locally, and the server averages the returned models with equal weights.
pub fn fedavg_round(
    global: &ModelParams,
    users: &[Vec<TrainingSample>],
    cfg: &FlConfig,
    round: usize,
    seed: u64,
) -> Result<RoundOutcome> {
    if users.is_empty() {
        return Err(Error::Config("FedAvg round with no users".into()));
    }
    let updates: Vec<LocalUpdate> = users
        .par_iter()
        .enumerate()
        .map(|(u, data)| {
            local_update(
                global,
                data,
                cfg.local_epochs,
                cfg.batch_size,
                cfg.learning_rate,
                local_seed(seed, round, u),
            )
            .map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { user: Some(u) },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let mean_loss = updates.iter().map(|u| u.mean_loss).sum::<f64>() / updates.len() as f64;
    let models: Vec<ModelParams> = updates.into_iter().map(|u| u.params).collect();
    Ok(RoundOutcome {
        params: average(&models),
        mean_loss,
    })
}

/// Runs `cfg.rounds` FedAvg rounds, calling `on_round(round, &outcome)` after
/// each aggregation.
pub fn train_federated(
    init: ModelParams,
    users: &[Vec<TrainingSample>],
    cfg: &FlConfig,
    seed: u64,
    mut on_round: impl FnMut(usize, &RoundOutcome),
) -> Result<ModelParams> {
    cfg.validate()?;
    let mut global = init;
    for round in 0..cfg.rounds {
        let outcome = fedavg_round(&global, users, cfg, round, seed)?;
        on_round(round, &outcome);
        global = outcome.params;
    }
    Ok(global)
}

/// Pooled-data SGD with the same round/epoch schedule as
/// [`train_federated`]. Round `r` uses the stream FedAvg assigns to user 0,
/// so a single-user federation reproduces it exactly.
pub fn train_centralized(
    init: ModelParams,
    pooled: &[TrainingSample],
    cfg: &FlConfig,
    seed: u64,
    mut on_round: impl FnMut(usize, &RoundOutcome),
) -> Result<ModelParams> {
    cfg.validate()?;
    let mut params = init;
    for round in 0..cfg.rounds {
        let update = local_update(
            &params,
            pooled,
            cfg.local_epochs,
            cfg.batch_size,
            cfg.learning_rate,
            local_seed(seed, round, 0),
        )?;
        let outcome = RoundOutcome {
            params: update.params,
            mean_loss: update.mean_loss,
        };
        on_round(round, &outcome);
        params = outcome.params;
    }
    Ok(params)
}
