use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, SimRng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: usize,
    pub genre_preference: Vec<f64>,
    /// Empirical request frequency over the user's training history. Empty
    /// until filled from the train split.
    pub popularity: Vec<f64>,
}

/// Symmetric Dirichlet draw. Works in log space, using
/// `Gamma(a) = Gamma(a + 1) * U^(1/a)`, so small concentrations do not
/// underflow every component to zero.
pub fn sample_dirichlet(rng: &mut SimRng, dim: usize, alpha: f64) -> Vec<f64> {
    if dim == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(alpha + 1.0, 1.0).expect("alpha > 0");
    let logs: Vec<f64> = (0..dim)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            g.ln() + u.ln() / alpha
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

pub fn sample_user_profiles(
    num_users: usize,
    num_genres: usize,
    alpha: f64,
    seed: u64,
) -> Result<Vec<UserProfile>> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("dirichlet alpha must be positive, got {alpha}")));
    }
    if num_genres == 0 {
        return Err(Error::InvalidDimension("zero genres".into()));
    }
    Ok((0..num_users)
        .map(|user| {
            let mut rng = stream_rng(seed, Stream::Profiles, &[user as u64]);
            UserProfile {
                user,
                genre_preference: sample_dirichlet(&mut rng, num_genres, alpha),
                popularity: Vec::new(),
            }
        })
        .collect())
}
