use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Train / validation / test split over mini-slot indices. Every boundary is
/// a multiple of `slot_len`, so each split holds whole placement slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub slot_len: usize,
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

impl Partition {
    /// Everything is training data; slot length 1.
    pub fn whole(len: usize) -> Self {
        Self {
            slot_len: 1,
            train: 0..len,
            validation: len..len,
            test: len..len,
        }
    }

    /// History is the first `history_days`; the last `val_fraction` of it is
    /// validation. The remainder of the trace is the test window. Boundaries
    /// are rounded down to whole slots.
    pub fn aligned(
        trace_len: usize,
        requests_per_day: usize,
        history_days: usize,
        val_fraction: f64,
        slot_len: usize,
    ) -> Result<Self> {
        if slot_len == 0 {
            return Err(Error::Config("slot length must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&val_fraction) {
            return Err(Error::Config(format!(
                "validation fraction {val_fraction} outside [0, 1)"
            )));
        }
        let floor = |t: usize| t / slot_len * slot_len;
        let history = history_days * requests_per_day;
        if history > trace_len {
            return Err(Error::Config(format!(
                "history of {history} mini-slots exceeds trace length {trace_len}"
            )));
        }
        let test_start = floor(history);
        let val_start = floor((history as f64 * (1.0 - val_fraction)).round() as usize);
        let end = floor(trace_len);
        Ok(Self {
            slot_len,
            train: 0..val_start,
            validation: val_start..test_start,
            test: test_start..end,
        })
    }

    pub fn validation_slots(&self) -> Range<usize> {
        self.validation.start / self.slot_len..self.validation.end / self.slot_len
    }

    pub fn test_slots(&self) -> Range<usize> {
        self.test.start / self.slot_len..self.test.end / self.slot_len
    }

    pub fn slot_range(&self, slot: usize) -> Range<usize> {
        slot * self.slot_len..(slot + 1) * self.slot_len
    }
}

/// One requested file per (user, mini-slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestTrace {
    pub seed: u64,
    pub num_files: usize,
    pub requests_per_day: usize,
    pub days: usize,
    /// `requests[u][t]` is the file user `u` requests in mini-slot `t`.
    pub requests: Vec<Vec<usize>>,
    /// Genre drawn for each (user, day).
    pub day_genre: Vec<Vec<usize>>,
    pub partition: Partition,
}

impl RequestTrace {
    pub fn num_users(&self) -> usize {
        self.requests.len()
    }

    pub fn len(&self) -> usize {
        self.days * self.requests_per_day
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn user(&self, u: usize) -> &[usize] {
        &self.requests[u]
    }

    pub fn with_partition(mut self, partition: Partition) -> Self {
        self.partition = partition;
        self
    }

    /// Requests of every user in `window`, as `[user][offset]`.
    pub fn window(&self, window: Range<usize>) -> Vec<&[usize]> {
        self.requests.iter().map(|r| &r[window.clone()]).collect()
    }

    /// One-hot view of a single request.
    pub fn one_hot(&self, u: usize, t: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.num_files];
        v[self.requests[u][t]] = 1.0;
        v
    }
}

fn histogram(requests: &[usize], num_files: usize) -> Vec<f64> {
    let mut counts = vec![0.0; num_files];
    for &f in requests {
        counts[f] += 1.0;
    }
    let total = requests.len() as f64;
    counts.iter_mut().for_each(|c| *c /= total);
    counts
}

fn check_window(trace: &RequestTrace, window: &Range<usize>) -> Result<()> {
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if window.end > trace.len() {
        return Err(Error::InvalidDimension(format!(
            "window {window:?} exceeds trace length {}",
            trace.len()
        )));
    }
    Ok(())
}

/// Request frequency of user `u` over `window`.
pub fn empirical_user_popularity(
    trace: &RequestTrace,
    user: usize,
    window: Range<usize>,
) -> Result<Vec<f64>> {
    check_window(trace, &window)?;
    Ok(histogram(&trace.requests[user][window], trace.num_files))
}

/// Request frequency over `window`, pooled across all users.
pub fn global_popularity(trace: &RequestTrace, window: Range<usize>) -> Result<Vec<f64>> {
    check_window(trace, &window)?;
    let pooled: Vec<usize> = trace
        .requests
        .iter()
        .flat_map(|r| r[window.clone()].iter().copied())
        .collect();
    Ok(histogram(&pooled, trace.num_files))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(requests: Vec<Vec<usize>>, num_files: usize) -> RequestTrace {
        let len = requests[0].len();
        RequestTrace {
            seed: 0,
            num_files,
            requests_per_day: len,
            days: 1,
            day_genre: vec![vec![0]; requests.len()],
            requests,
            partition: Partition::whole(len),
        }
    }

    #[test]
    fn single_file_window() {
        let t = trace_of(vec![vec![7, 7, 7, 7]], 10);
        let g = empirical_user_popularity(&t, 0, 0..4).unwrap();
        assert_eq!(g[7], 1.0);
        assert_eq!(g.iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn mixed_counts() {
        let t = trace_of(vec![vec![1, 1, 2, 3]], 5);
        let g = empirical_user_popularity(&t, 0, 0..4).unwrap();
        assert_eq!(g, vec![0.0, 0.5, 0.25, 0.25, 0.0]);
    }

    #[test]
    fn empty_window_is_an_error() {
        let t = trace_of(vec![vec![1, 2]], 3);
        assert!(matches!(empirical_user_popularity(&t, 0, 1..1), Err(Error::EmptyWindow)));
        assert!(empirical_user_popularity(&t, 0, 0..5).is_err());
    }

    #[test]
    fn global_pools_users() {
        let t = trace_of(vec![vec![0, 1], vec![1, 1]], 2);
        assert_eq!(global_popularity(&t, 0..2).unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn partition_is_slot_aligned() {
        let p = Partition::aligned(48 * 107, 107, 40, 0.1, 5).unwrap();
        for b in [p.train.end, p.validation.end, p.test.end] {
            assert_eq!(b % 5, 0);
        }
        assert_eq!(p.train.end, p.validation.start);
        assert_eq!(p.validation.end, p.test.start);
        assert_eq!(p.test.start, 4280);
        assert_eq!(p.validation.start, 3850);
        assert_eq!(p.test.end, 5135);
        assert_eq!(p.test_slots(), 856..1027);
        assert_eq!(p.slot_range(856), 4280..4285);
    }
}
