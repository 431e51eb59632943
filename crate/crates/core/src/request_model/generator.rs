use std::collections::HashSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::catalog::ContentCatalog;
use super::profile::UserProfile;
use super::trace::{Partition, RequestTrace};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, SimRng, Stream};

/// How the follow-up batch is drawn from the Top-M distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FollowUp {
    /// i.i.d. draws; a batch may repeat a file.
    #[default]
    Independent,
    /// Draws without replacement inside a batch.
    Distinct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceParams {
    pub days: usize,
    pub requests_per_day: usize,
    /// Number of seed requests per day, also the recency window length.
    pub seed_len: usize,
    pub top_m: usize,
    pub similarity_decay: f64,
    /// Weight of the similarity term against the popularity term.
    pub mix_weight: f64,
    #[serde(default)]
    pub follow_up: FollowUp,
}

impl Default for TraceParams {
    fn default() -> Self {
        Self {
            days: 48,
            requests_per_day: 107,
            seed_len: 7,
            top_m: 5,
            similarity_decay: 0.5,
            mix_weight: 0.7,
            follow_up: FollowUp::Independent,
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Recency-weighted cosine similarity of `candidate` to the `recent` files
/// (oldest first). The newest entry has weight 1, the entry `k` steps older
/// has weight `exp(-k / decay)`.
pub fn similarity_score(
    catalog: &ContentCatalog,
    recent: &[usize],
    candidate: usize,
    decay: f64,
) -> f64 {
    debug_assert!(!recent.contains(&candidate));
    let len = recent.len();
    let target = catalog.features(candidate);
    recent
        .iter()
        .enumerate()
        .map(|(idx, &f)| {
            let age = (len - 1 - idx) as f64;
            (-age / decay).exp() * cosine(catalog.features(f), target)
        })
        .sum()
}

fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    v.iter_mut().for_each(|x| *x = (*x - max).exp());
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
}

/// Mixes the softmax of similarity scores with the softmax of genre
/// popularity over the candidate set, keeps the `m` largest (ties to the
/// lower file id) and renormalizes. Output is sorted by descending mass.
pub fn topm_distribution(
    catalog: &ContentCatalog,
    scores: &[(usize, f64)],
    genre: usize,
    mix_weight: f64,
    m: usize,
) -> Result<Vec<(usize, f64)>> {
    if scores.len() < m || m == 0 {
        return Err(Error::InsufficientCandidates {
            needed: m.max(1),
            available: scores.len(),
        });
    }
    let mut sim: Vec<f64> = scores.iter().map(|&(_, s)| s).collect();
    let mut pop: Vec<f64> = scores
        .iter()
        .map(|&(f, _)| catalog.genre_popularity(genre, f))
        .collect();
    softmax_in_place(&mut sim);
    softmax_in_place(&mut pop);
    let mut mixed: Vec<(usize, f64)> = scores
        .iter()
        .enumerate()
        .map(|(i, &(f, _))| (f, mix_weight * sim[i] + (1.0 - mix_weight) * pop[i]))
        .collect();
    mixed.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    mixed.truncate(m);
    let total: f64 = mixed.iter().map(|&(_, p)| p).sum();
    mixed.iter_mut().for_each(|(_, p)| *p /= total);
    Ok(mixed)
}

pub(crate) fn sample_index(weights: &[f64], rng: &mut SimRng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding can leave a sliver past the last bucket.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Weighted draw of `k` distinct items.
fn sample_distinct(items: &[(usize, f64)], k: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut pool = items.to_vec();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let weights: Vec<f64> = pool.iter().map(|&(_, w)| w).collect();
        let idx = sample_index(&weights, rng);
        out.push(pool.remove(idx).0);
    }
    out
}

fn generate_day(
    catalog: &ContentCatalog,
    genre: usize,
    params: &TraceParams,
    rng: &mut SimRng,
) -> Result<Vec<usize>> {
    let files = catalog.genre_files(genre);
    if files.len() < params.seed_len {
        return Err(Error::InsufficientCandidates {
            needed: params.seed_len,
            available: files.len(),
        });
    }
    let weighted: Vec<(usize, f64)> = files
        .iter()
        .map(|&f| (f, catalog.genre_popularity(genre, f)))
        .collect();
    let mut day = sample_distinct(&weighted, params.seed_len, rng);

    while day.len() < params.requests_per_day {
        let recent = &day[day.len() - params.seed_len..];
        let excluded: HashSet<usize> = recent.iter().copied().collect();
        let scores: Vec<(usize, f64)> = files
            .iter()
            .filter(|f| !excluded.contains(f))
            .map(|&f| (f, similarity_score(catalog, recent, f, params.similarity_decay)))
            .collect();
        let dist = topm_distribution(catalog, &scores, genre, params.mix_weight, params.top_m)?;
        let batch = params.top_m.min(params.requests_per_day - day.len());
        match params.follow_up {
            FollowUp::Independent => {
                let weights: Vec<f64> = dist.iter().map(|&(_, p)| p).collect();
                for _ in 0..batch {
                    day.push(dist[sample_index(&weights, rng)].0);
                }
            }
            FollowUp::Distinct => day.extend(sample_distinct(&dist, batch, rng)),
        }
    }
    Ok(day)
}

/// Generates every user's request sequence. Each user draws from its own
/// RNG stream, so users are generated in parallel.
pub fn generate_trace(
    catalog: &ContentCatalog,
    users: &[UserProfile],
    params: &TraceParams,
    seed: u64,
) -> Result<RequestTrace> {
    if params.seed_len == 0 || params.requests_per_day < params.seed_len {
        return Err(Error::InvalidDimension(format!(
            "requests per day ({}) must be at least the seed length ({}), which must be positive",
            params.requests_per_day, params.seed_len
        )));
    }
    if !(params.similarity_decay > 0.0) || !(params.mix_weight > 0.0 && params.mix_weight < 1.0) {
        return Err(Error::Config(
            "similarity decay must be positive and the mix weight must lie in (0, 1)".into(),
        ));
    }
    for p in users {
        if p.genre_preference.len() != catalog.num_genres() {
            return Err(Error::InvalidDimension(format!(
                "user {} has {} genre weights for {} genres",
                p.user,
                p.genre_preference.len(),
                catalog.num_genres()
            )));
        }
    }

    let per_user: Vec<(Vec<usize>, Vec<usize>)> = users
        .par_iter()
        .map(|profile| {
            let mut rng = stream_rng(seed, Stream::Trace, &[profile.user as u64]);
            let mut requests = Vec::with_capacity(params.days * params.requests_per_day);
            let mut genres = Vec::with_capacity(params.days);
            for _ in 0..params.days {
                let genre = sample_index(&profile.genre_preference, &mut rng);
                genres.push(genre);
                requests.extend(generate_day(catalog, genre, params, &mut rng)?);
            }
            Ok((requests, genres))
        })
        .collect::<Result<_>>()?;

    let (requests, day_genre) = per_user.into_iter().unzip();
    let len = params.days * params.requests_per_day;
    Ok(RequestTrace {
        seed,
        num_files: catalog.num_files(),
        requests_per_day: params.requests_per_day,
        days: params.days,
        requests,
        day_genre,
        partition: Partition::whole(len),
    })
}
