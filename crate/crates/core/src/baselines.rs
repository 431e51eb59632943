//! Comparison placement policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::planner::{future_placement_by_popularity, top_k, CacheState, CostModel, DemandEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    Proposed,
    #[serde(rename = "CHROpt")]
    ChrOpt,
    #[serde(rename = "StaBC")]
    StaBc,
    #[serde(rename = "LRU")]
    Lru,
    #[serde(rename = "MRU")]
    Mru,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Proposed,
        PolicyKind::ChrOpt,
        PolicyKind::StaBc,
        PolicyKind::Lru,
        PolicyKind::Mru,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Proposed => "Proposed",
            PolicyKind::ChrOpt => "CHROpt",
            PolicyKind::StaBc => "StaBC",
            PolicyKind::Lru => "LRU",
            PolicyKind::Mru => "MRU",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown policy {s:?}")))
    }
}

/// Caches the files with the largest estimated request mass.
pub fn chropt_placement(demand: &DemandEstimate, cost: &CostModel) -> CacheState {
    CacheState::from_placement(top_k(&demand.demand, cost.slots()))
}

/// Caches the historically most popular files; never changes.
pub fn stabc_placement(global_pop: &[f64], cost: &CostModel) -> CacheState {
    CacheState::from_placement(future_placement_by_popularity(global_pop, cost))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eviction {
    LeastRecent,
    MostRecent,
}

/// Recency bookkeeping shared by LRU and MRU. Timestamps are request
/// sequence numbers: mini-slot major, user id minor.
#[derive(Debug, Clone, PartialEq)]
pub struct RecencyTracker {
    pub eviction: Eviction,
    capacity: usize,
    last_use: Vec<Option<u64>>,
    cached: Vec<bool>,
}

impl RecencyTracker {
    pub fn new(num_files: usize, cost: &CostModel, eviction: Eviction) -> Self {
        Self {
            eviction,
            capacity: cost.slots(),
            last_use: vec![None; num_files],
            cached: vec![false; num_files],
        }
    }

    /// Tracker whose cache starts from `initial`, with no use history.
    pub fn with_initial(initial: &CacheState, cost: &CostModel, eviction: Eviction) -> Self {
        let mut t = Self::new(initial.placement.len(), cost, eviction);
        for f in initial.files().take(t.capacity) {
            t.cached[f] = true;
        }
        t
    }

    pub fn state(&self) -> CacheState {
        CacheState::from_placement(self.cached.clone())
    }

    pub fn last_use(&self, file: usize) -> Option<u64> {
        self.last_use[file]
    }

    pub fn len(&self) -> usize {
        self.cached.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn victim(&self) -> Option<usize> {
        // Files never used rank oldest; ties go to the lower id.
        let cached = (0..self.cached.len()).filter(|&f| self.cached[f]);
        match self.eviction {
            Eviction::LeastRecent => cached.min_by_key(|&f| (self.last_use[f], f)),
            Eviction::MostRecent => {
                cached.max_by_key(|&f| (self.last_use[f], std::cmp::Reverse(f)))
            }
        }
    }

    /// Records one request; a missing file is inserted, evicting if full.
    pub fn touch(&mut self, file: usize, stamp: u64) {
        if !self.cached[file] && self.capacity > 0 {
            if self.len() >= self.capacity {
                if let Some(v) = self.victim() {
                    self.cached[v] = false;
                }
            }
            self.cached[file] = true;
        }
        self.last_use[file] = Some(stamp);
    }
}

/// Replays the requests of mini-slots `first_slot..` (`requests[u][k]` is
/// user `u`'s request in mini-slot `first_slot + k`) in timestamp order and
/// returns the resulting cache.
pub fn recency_update(
    tracker: &mut RecencyTracker,
    requests: &[&[usize]],
    first_mini_slot: usize,
) -> CacheState {
    let users = requests.len() as u64;
    let len = requests.iter().map(|r| r.len()).max().unwrap_or(0);
    for k in 0..len {
        for (u, r) in requests.iter().enumerate() {
            if let Some(&f) = r.get(k) {
                tracker.touch(f, (first_mini_slot + k) as u64 * users + u as u64);
            }
        }
    }
    tracker.state()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::CostParams;

    fn cost(capacity: usize, num_files: usize) -> CostModel {
        CostParams::default().with_capacity(capacity, num_files).unwrap()
    }

    fn demand(values: Vec<f64>) -> DemandEstimate {
        DemandEstimate::from_user_estimates(vec![vec![values]]).unwrap()
    }

    #[test]
    fn chropt_cases() {
        let one_hot = demand(vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(chropt_placement(&one_hot, &cost(1, 4)).placement, vec![false, false, true, false]);
        let uniform = demand(vec![0.25; 4]);
        assert_eq!(chropt_placement(&uniform, &cost(2, 4)).placement, vec![true, true, false, false]);
    }

    #[test]
    fn stabc_takes_popular_head() {
        let pop = crate::request_model::zipf_weights(5, 1.2);
        assert_eq!(stabc_placement(&pop, &cost(2, 5)).placement, vec![true, true, false, false, false]);
    }

    #[test]
    fn insertion_without_eviction() {
        let mut t = RecencyTracker::new(4, &cost(3, 4), Eviction::LeastRecent);
        let s = recency_update(&mut t, &[&[0, 1]], 0);
        assert_eq!(s.placement, vec![true, true, false, false]);
    }

    #[test]
    fn lru_and_mru_victims() {
        for (eviction, expected) in [
            (Eviction::LeastRecent, vec![false, true, true]),
            (Eviction::MostRecent, vec![true, false, true]),
        ] {
            let mut t = RecencyTracker::new(3, &cost(2, 3), eviction);
            recency_update(&mut t, &[&[0, 1]], 0);
            let s = recency_update(&mut t, &[&[2]], 2);
            assert_eq!(s.placement, expected, "{eviction:?}");
            assert_eq!(t.len(), 2);
        }
    }

    #[test]
    fn rerequest_refreshes_timestamp() {
        let mut t = RecencyTracker::new(3, &cost(2, 3), Eviction::LeastRecent);
        recency_update(&mut t, &[&[0, 1]], 0);
        let before = t.state();
        recency_update(&mut t, &[&[0]], 2);
        assert_eq!(t.state(), before);
        assert_eq!(t.last_use(0), Some(2));
        // 1 is now the older entry.
        let s = recency_update(&mut t, &[&[2]], 3);
        assert_eq!(s.placement, vec![true, false, true]);
    }

    #[test]
    fn user_order_breaks_ties_within_a_mini_slot() {
        let mut t = RecencyTracker::new(3, &cost(1, 3), Eviction::LeastRecent);
        let s = recency_update(&mut t, &[&[0], &[1]], 0);
        assert_eq!(s.placement, vec![false, true, false]);
        assert_eq!(t.last_use(0), Some(0));
        assert_eq!(t.last_use(1), Some(1));
    }

    #[test]
    fn initial_files_are_oldest() {
        let init = CacheState::from_placement(vec![false, true, true]);
        let mut t = RecencyTracker::with_initial(&init, &cost(2, 3), Eviction::LeastRecent);
        recency_update(&mut t, &[&[2]], 0);
        let s = recency_update(&mut t, &[&[0]], 1);
        assert_eq!(s.placement, vec![true, false, true]);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in PolicyKind::ALL {
            assert_eq!(p.name().parse::<PolicyKind>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
        assert!("ARC".parse::<PolicyKind>().is_err());
    }
}
