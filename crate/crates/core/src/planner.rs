//! Revenue-driven placement for one cache-placement slot.
//!
//! Users turn predictions into request estimates, the edge server sums them
//! into per-file demand and solves the equal-size knapsack
//! `max sum_f d_f W_f + Z` subject to the capacity limit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictor::PredictionBundle;

/// Benefit and cost constants without the cache size, as stored in configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    /// Revenue per delivered request.
    pub benefit: f64,
    /// Edge-to-user delivery cost per request.
    pub delivery_cost: f64,
    /// Cloud-to-edge extraction cost per missed request.
    pub backhaul_cost: f64,
    /// Cost of placing one file in the cache.
    pub placement_cost: f64,
    /// Discount on next slot's retention bonus, in (0, 1).
    pub discount: f64,
    pub file_size: usize,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            benefit: 3.0,
            delivery_cost: 0.5,
            backhaul_cost: 2.0,
            placement_cost: 1.0,
            discount: 0.8,
            file_size: 1,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        let costs = [
            self.benefit,
            self.delivery_cost,
            self.backhaul_cost,
            self.placement_cost,
        ];
        if costs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Config("benefit and costs must be finite and non-negative".into()));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(Error::Config(format!("discount {} outside (0, 1)", self.discount)));
        }
        if self.file_size == 0 {
            return Err(Error::Config("file size must be positive".into()));
        }
        Ok(())
    }

    pub fn with_capacity(self, capacity: usize, num_files: usize) -> Result<CostModel> {
        self.validate()?;
        if capacity % self.file_size != 0 {
            return Err(Error::Config(format!(
                "cache size {capacity} is not a multiple of the file size {}",
                self.file_size
            )));
        }
        if capacity > num_files * self.file_size {
            return Err(Error::Config(format!(
                "cache size {capacity} exceeds the catalog size {}",
                num_files * self.file_size
            )));
        }
        Ok(CostModel {
            params: self,
            capacity,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub params: CostParams,
    /// Cache size S in storage units.
    pub capacity: usize,
}

impl CostModel {
    /// Number of files the cache holds.
    pub fn slots(&self) -> usize {
        self.capacity / self.params.file_size
    }

    /// Net revenue of a request served from the cache.
    pub fn hit_margin(&self) -> f64 {
        self.params.benefit - self.params.delivery_cost
    }

    /// Net revenue of a request fetched from the cloud.
    pub fn miss_margin(&self) -> f64 {
        self.params.benefit - self.params.delivery_cost - self.params.backhaul_cost
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheState {
    pub slot: usize,
    pub placement: Vec<bool>,
}

impl CacheState {
    pub fn empty(num_files: usize) -> Self {
        Self {
            slot: 0,
            placement: vec![false; num_files],
        }
    }

    pub fn from_placement(placement: Vec<bool>) -> Self {
        Self { slot: 0, placement }
    }

    pub fn at_slot(mut self, slot: usize) -> Self {
        self.slot = slot;
        self
    }

    pub fn contains(&self, file: usize) -> bool {
        self.placement[file]
    }

    pub fn len(&self) -> usize {
        self.placement.iter().filter(|&&d| d).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn files(&self) -> impl Iterator<Item = usize> + '_ {
        self.placement.iter().enumerate().filter(|(_, &d)| d).map(|(f, _)| f)
    }

    pub fn is_feasible(&self, cost: &CostModel) -> bool {
        self.len() * cost.params.file_size <= cost.capacity
    }

    /// Files cached now that were not cached in `prev`.
    pub fn insertions_since(&self, prev: &CacheState) -> usize {
        self.placement
            .iter()
            .zip(&prev.placement)
            .filter(|(&now, &before)| now && !before)
            .count()
    }
}

/// Request estimates for one placement slot, as shipped by the users.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandEstimate {
    /// `est[u][s][f]`
    pub est: Vec<Vec<Vec<f64>>>,
    /// `demand[f]`: `est` summed over users and positions.
    pub demand: Vec<f64>,
}

impl DemandEstimate {
    pub fn from_user_estimates(est: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let num_files = est
            .iter()
            .flatten()
            .map(Vec::len)
            .next()
            .ok_or_else(|| Error::InvalidDimension("no user estimates".into()))?;
        let mut demand = vec![0.0; num_files];
        for row in est.iter().flatten() {
            if row.len() != num_files {
                return Err(Error::ShapeMismatch {
                    expected: format!("{num_files} files per row"),
                    actual: format!("{} files", row.len()),
                });
            }
            for (d, e) in demand.iter_mut().zip(row) {
                *d += e;
            }
        }
        Ok(Self { est, demand })
    }

    pub fn num_files(&self) -> usize {
        self.demand.len()
    }

    /// Total estimated request mass.
    pub fn total(&self) -> f64 {
        self.est.iter().flatten().flatten().sum()
    }
}

/// One user's estimate: `est = probs * acc + pop * (1 - acc)` elementwise.
pub fn estimate_user_requests(
    probs: &[Vec<f64>],
    accuracy: &[Vec<f64>],
    popularity: &[f64],
) -> Vec<Vec<f64>> {
    probs
        .iter()
        .zip(accuracy)
        .map(|(p_row, a_row)| {
            p_row
                .iter()
                .zip(a_row)
                .zip(popularity)
                .map(|((&p, &a), &g)| p * a + g * (1.0 - a))
                .collect()
        })
        .collect()
}

pub fn estimate_requests(bundle: &PredictionBundle) -> Result<DemandEstimate> {
    bundle.validate()?;
    let est = bundle
        .probs
        .iter()
        .zip(&bundle.accuracy)
        .zip(&bundle.popularity)
        .map(|((p, a), g)| estimate_user_requests(p, a, g))
        .collect();
    DemandEstimate::from_user_estimates(est)
}

/// Marks the `k` files with the largest `score`; ties go to the lower id.
pub fn top_k(score: &[f64], k: usize) -> Vec<bool> {
    let mut order: Vec<usize> = (0..score.len()).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let mut placement = vec![false; score.len()];
    for &f in order.iter().take(k) {
        placement[f] = true;
    }
    placement
}

/// Next slot's placement, approximated by the most popular files overall.
pub fn future_placement_by_popularity(global_pop: &[f64], cost: &CostModel) -> Vec<bool> {
    top_k(global_pop, cost.slots())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    /// Marginal value `W_f` of caching each file.
    pub per_file: Vec<f64>,
    /// Placement-independent revenue `Z`.
    pub constant: f64,
}

pub fn compute_weights(
    demand: &DemandEstimate,
    d_prev: &CacheState,
    d_next: &[bool],
    cost: &CostModel,
) -> Weights {
    let p = &cost.params;
    let per_file = demand
        .demand
        .iter()
        .zip(&d_prev.placement)
        .zip(d_next)
        .map(|((&dem, &prev), &next)| {
            dem * p.backhaul_cost - p.placement_cost
                + p.placement_cost * f64::from(u8::from(prev))
                + p.discount * p.placement_cost * f64::from(u8::from(next))
        })
        .collect();
    Weights {
        per_file,
        constant: demand.total() * cost.miss_margin(),
    }
}

/// What to do with capacity left after every positive-value file is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpareCapacity {
    /// Leave it empty; this is the exact optimum of the slot objective.
    #[default]
    Leave,
    /// Keep filling in descending weight order.
    Fill,
}

/// Exact maximizer of `sum d_f W_f` over placements of at most `S/B` files:
/// take files in descending weight (ties to the lower id) while the weight
/// is positive and room remains.
pub fn greedy_placement(weights: &[f64], cost: &CostModel) -> CacheState {
    place_by_weight(weights, cost, SpareCapacity::Leave)
}

pub fn place_by_weight(weights: &[f64], cost: &CostModel, spare: SpareCapacity) -> CacheState {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut placement = vec![false; weights.len()];
    for &f in order.iter().take(cost.slots()) {
        if weights[f] <= 0.0 && spare == SpareCapacity::Leave {
            break;
        }
        placement[f] = true;
    }
    CacheState::from_placement(placement)
}

/// `sum_f d_f W_f`, accumulated in file order.
pub fn placement_value(weights: &[f64], d: &CacheState) -> f64 {
    weights
        .iter()
        .zip(&d.placement)
        .filter(|(_, &on)| on)
        .map(|(w, _)| w)
        .sum()
}

/// Approximate slot revenue through the weight form `sum d W + Z`.
pub fn planned_revenue(
    demand: &DemandEstimate,
    d: &CacheState,
    d_prev: &CacheState,
    d_next: &[bool],
    cost: &CostModel,
) -> f64 {
    let w = compute_weights(demand, d_prev, d_next, cost);
    placement_value(&w.per_file, d) + w.constant
}

/// Approximate slot revenue evaluated term by term from the estimates.
pub fn approximate_revenue(
    demand: &DemandEstimate,
    d: &CacheState,
    d_prev: &CacheState,
    d_next: &[bool],
    cost: &CostModel,
) -> f64 {
    let p = &cost.params;
    let ind = |b: bool| f64::from(u8::from(b));
    let mut delivery = 0.0;
    let mut saved_backhaul = 0.0;
    for row in demand.est.iter().flatten() {
        for (f, &e) in row.iter().enumerate() {
            delivery += e * (p.benefit - p.delivery_cost - p.backhaul_cost);
            saved_backhaul += e * ind(d.placement[f]) * p.backhaul_cost;
        }
    }
    let mut placement = 0.0;
    let mut retained = 0.0;
    let mut carried = 0.0;
    for f in 0..d.placement.len() {
        placement += ind(d.placement[f]);
        retained += ind(d.placement[f]) * ind(d_prev.placement[f]);
        carried += ind(d_next[f]) * ind(d.placement[f]);
    }
    delivery + saved_backhaul - p.placement_cost * placement
        + p.placement_cost * retained
        + p.discount * p.placement_cost * carried
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SlotRevenue {
    /// Delivery revenue net of delivery and backhaul costs.
    pub requests: f64,
    /// Negative cost of files newly placed this slot.
    pub placement: f64,
}

impl SlotRevenue {
    pub fn total(&self) -> f64 {
        self.requests + self.placement
    }
}

/// Revenue actually earned in a slot. `requests[u]` lists user `u`'s requests
/// in the slot's mini-slots. The discounted next-slot retention bonus is a
/// planning device and is not counted here.
pub fn realized_revenue(
    requests: &[&[usize]],
    d: &CacheState,
    d_prev: &CacheState,
    cost: &CostModel,
) -> SlotRevenue {
    let p = &cost.params;
    let mut earned = 0.0;
    for &f in requests.iter().flat_map(|r| r.iter()) {
        earned += if d.contains(f) {
            cost.hit_margin()
        } else {
            cost.miss_margin()
        };
    }
    SlotRevenue {
        requests: earned,
        placement: -p.placement_cost * d.insertions_since(d_prev) as f64,
    }
}

/// Fraction of the slot's requests served from the cache.
pub fn chr(requests: &[&[usize]], d: &CacheState) -> f64 {
    let (hits, total) = requests
        .iter()
        .flat_map(|r| r.iter())
        .fold((0usize, 0usize), |(h, t), &f| (h + d.contains(f) as usize, t + 1));
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cost(capacity: usize, num_files: usize) -> CostModel {
        CostParams::default().with_capacity(capacity, num_files).unwrap()
    }

    fn demand_of(rows: Vec<Vec<f64>>) -> DemandEstimate {
        DemandEstimate::from_user_estimates(vec![rows]).unwrap()
    }

    #[test]
    fn full_trust_and_full_fallback() {
        let probs = vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.1, 0.8]];
        let pop = vec![0.5, 0.25, 0.25];
        let ones = vec![vec![1.0; 3]; 2];
        let zeros = vec![vec![0.0; 3]; 2];
        assert_eq!(estimate_user_requests(&probs, &ones, &pop), probs);
        assert_eq!(estimate_user_requests(&probs, &zeros, &pop), vec![pop.clone(), pop]);
    }

    #[test]
    fn blended_estimate() {
        let est = estimate_user_requests(&[vec![0.9, 0.1]], &[vec![0.8, 0.8]], &[0.1, 0.9]);
        assert!((est[0][0] - 0.74).abs() < 1e-12);
    }

    #[test]
    fn bundle_estimates() {
        let bundle = PredictionBundle {
            probs: vec![vec![vec![0.5, 0.5]], vec![vec![1.0, 0.0]]],
            accuracy: vec![vec![vec![1.0, 1.0]], vec![vec![0.5, 0.5]]],
            popularity: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        };
        let d = estimate_requests(&bundle).unwrap();
        assert_eq!(d.demand, vec![1.0, 1.0]);
        assert_eq!(d.total(), 2.0);
        let mut bad = bundle;
        bad.accuracy[0][0][0] = 1.5;
        assert!(estimate_requests(&bad).is_err());
    }

    #[test]
    fn popularity_placement() {
        let pop = vec![0.1, 0.3, 0.2, 0.15, 0.05, 0.2];
        assert_eq!(future_placement_by_popularity(&pop, &cost(6, 6)), vec![true; 6]);
        assert_eq!(
            future_placement_by_popularity(&pop, &cost(1, 6)),
            vec![false, true, false, false, false, false]
        );
        // Files 2 and 5 tie; the lower id wins.
        assert_eq!(
            future_placement_by_popularity(&pop, &cost(2, 6)),
            vec![false, true, true, false, false, false]
        );
    }

    #[test]
    fn zipf_top_three() {
        let pop = crate::request_model::zipf_weights(6, 1.0);
        let mut shuffled = vec![0.0; 6];
        let perm = [4, 1, 5, 0, 3, 2];
        for (rank, &f) in perm.iter().enumerate() {
            shuffled[f] = pop[rank];
        }
        let chosen = future_placement_by_popularity(&shuffled, &cost(3, 6));
        let expected: Vec<bool> = (0..6).map(|f| perm[..3].contains(&f)).collect();
        assert_eq!(chosen, expected);
    }

    #[test]
    fn weight_cases() {
        let c = cost(1, 2);
        let d = demand_of(vec![vec![0.0, 1.0]]);
        let prev = CacheState::from_placement(vec![false, true]);
        let w = compute_weights(&d, &prev, &[false, true], &c);
        assert_eq!(w.per_file[0], -1.0);
        assert!((w.per_file[1] - 2.8).abs() < 1e-12);
        assert!((w.constant - 0.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_picks_by_weight() {
        let c = cost(2, 3);
        let d = greedy_placement(&[5.0, 1.0, 3.0], &c);
        assert_eq!(d.placement, vec![true, false, true]);
        assert!(greedy_placement(&[-1.0, 0.0, -3.0], &c).is_empty());
        let filled = place_by_weight(&[-1.0, 0.0, -3.0], &c, SpareCapacity::Fill);
        assert_eq!(filled.placement, vec![true, true, false]);
    }

    #[test]
    fn empty_cache_earns_constant() {
        let c = cost(2, 3);
        let d = demand_of(vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.2, 0.2]]);
        let empty = CacheState::empty(3);
        let r = planned_revenue(&d, &empty, &empty, &[true, true, false], &c);
        assert!((r - 2.0 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn full_cache_uniform_demand_by_hand() {
        let c = cost(4, 4);
        let d = demand_of(vec![vec![0.25; 4]; 2]);
        let full = CacheState::from_placement(vec![true; 4]);
        let prev = CacheState::from_placement(vec![true, true, false, false]);
        let next = vec![true, false, true, false];
        // 2 requests * 0.5 + 2 * 2 saved - 4 placed + 2 retained + 0.8 * 2 carried
        let by_hand = 1.0 + 4.0 - 4.0 + 2.0 + 1.6;
        assert!((approximate_revenue(&d, &full, &prev, &next, &c) - by_hand).abs() < 1e-12);
        assert!((planned_revenue(&d, &full, &prev, &next, &c) - by_hand).abs() < 1e-12);
    }

    #[test]
    fn realized_extremes() {
        let c = cost(2, 3);
        let reqs: Vec<&[usize]> = vec![&[0, 1], &[1, 0]];
        let all = CacheState::from_placement(vec![true, true, false]);
        let r = realized_revenue(&reqs, &all, &all, &c);
        assert_eq!(r.total(), 4.0 * 2.5);
        let none = CacheState::empty(3);
        assert_eq!(realized_revenue(&reqs, &none, &none, &c).total(), 4.0 * 0.5);
        let fresh = realized_revenue(&reqs, &all, &none, &c);
        assert_eq!(fresh.placement, -2.0);
    }

    #[test]
    fn hit_ratio() {
        let reqs: Vec<&[usize]> = vec![&[0, 1], &[2, 0]];
        assert_eq!(chr(&reqs, &CacheState::from_placement(vec![true; 3])), 1.0);
        assert_eq!(chr(&reqs, &CacheState::empty(3)), 0.0);
        assert_eq!(chr(&reqs, &CacheState::from_placement(vec![true, true, false])), 0.75);
    }

    #[test]
    fn capacity_validation() {
        let p = CostParams {
            file_size: 2,
            ..CostParams::default()
        };
        assert!(p.with_capacity(3, 10).is_err());
        assert!(p.with_capacity(22, 10).is_err());
        assert_eq!(p.with_capacity(8, 10).unwrap().slots(), 4);
        let bad = CostParams {
            discount: 1.0,
            ..CostParams::default()
        };
        assert!(bad.validate().is_err());
    }
}
