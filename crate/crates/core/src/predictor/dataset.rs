use std::ops::Range;

use crate::error::{Error, Result};
use crate::request_model::RequestTrace;

/// `x` holds the `N` past requests, `y` the `n` requests that follow, both
/// as file ids (row-wise one-hot).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSample {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

impl TrainingSample {
    pub fn x_one_hot(&self, num_files: usize) -> Vec<Vec<f64>> {
        rows(&self.x, num_files)
    }

    pub fn y_one_hot(&self, num_files: usize) -> Vec<Vec<f64>> {
        rows(&self.y, num_files)
    }
}

fn rows(ids: &[usize], num_files: usize) -> Vec<Vec<f64>> {
    ids.iter()
        .map(|&f| {
            let mut r = vec![0.0; num_files];
            r[f] = 1.0;
            r
        })
        .collect()
}

pub fn sample_count(window_len: usize, history: usize, horizon: usize) -> usize {
    (window_len + 1).saturating_sub(history + horizon)
}

/// Stride-1 sliding windows fully inside `window`.
pub fn build_dataset(
    trace: &RequestTrace,
    user: usize,
    window: Range<usize>,
    history: usize,
    horizon: usize,
) -> Result<Vec<TrainingSample>> {
    let needed = history + horizon;
    if window.len() < needed {
        return Err(Error::WindowTooShort {
            len: window.len(),
            needed,
        });
    }
    if window.end > trace.len() {
        return Err(Error::InvalidDimension(format!(
            "window {window:?} exceeds trace length {}",
            trace.len()
        )));
    }
    let requests = &trace.user(user)[window];
    Ok(requests
        .windows(needed)
        .map(|w| TrainingSample {
            x: w[..history].to_vec(),
            y: w[history..].to_vec(),
        })
        .collect())
}
