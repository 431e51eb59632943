use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogParams {
    pub num_files: usize,
    pub num_genres: usize,
    pub zipf_exponent: f64,
    pub feature_dim: usize,
    /// Scale of the per-file noise added to the genre anchor direction.
    pub feature_noise: f64,
}

impl Default for CatalogParams {
    fn default() -> Self {
        Self {
            num_files: 60,
            num_genres: 3,
            zipf_exponent: 1.5,
            feature_dim: 16,
            feature_noise: 0.5,
        }
    }
}

/// Files grouped into equally sized genres. Genre `g` owns the contiguous id
/// block `g*k .. (g+1)*k`; a file's popularity rank inside its genre is its
/// position in that block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentCatalog {
    pub seed: u64,
    pub params: CatalogParams,
    genre_of: Vec<usize>,
    genre_files: Vec<Vec<usize>>,
    /// Zipf popularity of each file within its own genre.
    popularity: Vec<f64>,
    features: Vec<Vec<f64>>,
}

pub fn zipf_weights(count: usize, exponent: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=count).map(|r| (r as f64).powf(-exponent)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

pub fn build_catalog(params: CatalogParams, seed: u64) -> Result<ContentCatalog> {
    let CatalogParams {
        num_files,
        num_genres,
        zipf_exponent,
        feature_dim,
        feature_noise,
    } = params;
    if num_genres == 0 || num_files == 0 || num_files % num_genres != 0 {
        return Err(Error::InvalidDimension(format!(
            "{num_files} files cannot be split evenly across {num_genres} genres"
        )));
    }
    if feature_dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "feature dimension must be at least 2, got {feature_dim}"
        )));
    }
    if !(zipf_exponent > 0.0) {
        return Err(Error::InvalidDimension(format!(
            "zipf exponent must be positive, got {zipf_exponent}"
        )));
    }

    let per_genre = num_files / num_genres;
    let weights = zipf_weights(per_genre, zipf_exponent);
    let genre_of: Vec<usize> = (0..num_files).map(|f| f / per_genre).collect();
    let genre_files: Vec<Vec<usize>> = (0..num_genres)
        .map(|g| (g * per_genre..(g + 1) * per_genre).collect())
        .collect();
    let popularity: Vec<f64> = (0..num_files).map(|f| weights[f % per_genre]).collect();

    let mut rng = stream_rng(seed, Stream::Catalog, &[]);
    let mut gaussian = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.sample(StandardNormal)).collect() };
    let anchors: Vec<Vec<f64>> = (0..num_genres)
        .map(|_| {
            let mut a = gaussian(feature_dim);
            normalize(&mut a);
            a
        })
        .collect();
    let features = (0..num_files)
        .map(|f| {
            let noise = gaussian(feature_dim);
            let mut phi: Vec<f64> = anchors[genre_of[f]]
                .iter()
                .zip(&noise)
                .map(|(a, z)| a + feature_noise * z)
                .collect();
            normalize(&mut phi);
            phi
        })
        .collect();

    Ok(ContentCatalog {
        seed,
        params,
        genre_of,
        genre_files,
        popularity,
        features,
    })
}

impl ContentCatalog {
    pub fn num_files(&self) -> usize {
        self.genre_of.len()
    }

    pub fn num_genres(&self) -> usize {
        self.genre_files.len()
    }

    pub fn genre_of(&self, file: usize) -> usize {
        self.genre_of[file]
    }

    /// Files of genre `g`, ordered by popularity rank.
    pub fn genre_files(&self, genre: usize) -> &[usize] {
        &self.genre_files[genre]
    }

    /// `P[g][f]`: zero for files outside the genre.
    pub fn genre_popularity(&self, genre: usize, file: usize) -> f64 {
        if self.genre_of[file] == genre {
            self.popularity[file]
        } else {
            0.0
        }
    }

    pub fn features(&self, file: usize) -> &[f64] {
        &self.features[file]
    }

    /// Catalog with caller-supplied features and popularities, for fixtures.
    pub fn from_parts(
        genre_of: Vec<usize>,
        popularity: Vec<f64>,
        features: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let num_files = genre_of.len();
        if popularity.len() != num_files || features.len() != num_files {
            return Err(Error::InvalidDimension(
                "genre, popularity and feature tables differ in length".into(),
            ));
        }
        let num_genres = genre_of.iter().max().map_or(0, |g| g + 1);
        let mut genre_files = vec![Vec::new(); num_genres];
        for (f, &g) in genre_of.iter().enumerate() {
            genre_files[g].push(f);
        }
        let feature_dim = features.first().map_or(0, Vec::len);
        Ok(Self {
            seed: 0,
            params: CatalogParams {
                num_files,
                num_genres,
                zipf_exponent: f64::NAN,
                feature_dim,
                feature_noise: 0.0,
            },
            genre_of,
            genre_files,
            popularity,
            features,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(num_files: usize, num_genres: usize, zipf_exponent: f64) -> CatalogParams {
        CatalogParams {
            num_files,
            num_genres,
            zipf_exponent,
            feature_dim: 8,
            feature_noise: 0.5,
        }
    }

    #[test]
    fn paper_scale_genres_are_normalized() {
        let c = build_catalog(params(240, 3, 1.5), 1).unwrap();
        for g in 0..3 {
            assert_eq!(c.genre_files(g).len(), 80);
            let total: f64 = c.genre_files(g).iter().map(|&f| c.genre_popularity(g, f)).sum();
            assert!((total - 1.0).abs() < 1e-9);
            for w in c.genre_files(g).windows(2) {
                assert!(c.genre_popularity(g, w[0]) >= c.genre_popularity(g, w[1]));
            }
        }
    }

    #[test]
    fn two_file_zipf() {
        let c = build_catalog(params(2, 1, 1.0), 1).unwrap();
        assert!((c.genre_popularity(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.genre_popularity(0, 1) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn squared_zipf_two_genres() {
        let c = build_catalog(params(4, 2, 2.0), 1).unwrap();
        for g in 0..2 {
            let files = c.genre_files(g);
            assert!((c.genre_popularity(g, files[0]) - 0.8).abs() < 1e-12);
            assert!((c.genre_popularity(g, files[1]) - 0.2).abs() < 1e-12);
        }
        assert_eq!(c.genre_popularity(0, 2), 0.0);
    }

    #[test]
    fn zipf_is_a_power_law_in_rank() {
        let w = zipf_weights(10, 1.5);
        for r in 1..10 {
            let ratio = w[r] / w[0];
            assert!((ratio - ((r + 1) as f64).powf(-1.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn features_are_unit_vectors() {
        let c = build_catalog(params(60, 3, 1.5), 9).unwrap();
        for f in 0..60 {
            let n: f64 = c.features(f).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(
            build_catalog(params(10, 3, 1.5), 0),
            Err(Error::InvalidDimension(_))
        ));
        let mut p = params(6, 3, 1.5);
        p.feature_dim = 1;
        assert!(matches!(build_catalog(p, 0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = build_catalog(params(12, 3, 1.2), 5).unwrap();
        let b = build_catalog(params(12, 3, 1.2), 5).unwrap();
        let c = build_catalog(params(12, 3, 1.2), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.features, c.features);
    }
}
