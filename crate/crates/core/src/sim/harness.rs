//! End-to-end experiment driver.
//!
//! Data flows across an explicit user/edge boundary: users hold their own
//! trace, predictor outputs and accuracy tables and send only
//! [`EstimateMessage`]s; the edge server plans from those messages, the
//! historical global popularity, and requests it has already served.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{PredictorMode, RunConfig};
use crate::baselines::{
    chropt_placement, recency_update, stabc_placement, Eviction, PolicyKind, RecencyTracker,
};
use crate::error::{Error, Result};
use crate::planner::{
    chr, compute_weights, future_placement_by_popularity, place_by_weight, planned_revenue,
    realized_revenue, CacheState, CostModel, DemandEstimate,
};
use crate::predictor::{
    build_dataset, estimate_accuracy, history_before, noisy_oracle_predict,
    top1_accuracy_by_position, train_centralized, train_federated, ModelParams, TrainingSample,
};
use crate::request_model::{
    build_catalog, empirical_user_popularity, generate_trace, global_popularity,
    sample_user_profiles, ContentCatalog, Partition, RequestTrace, UserProfile,
};
use crate::rng::{derive_seed, stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub round: usize,
    pub mean_loss: f64,
    /// Validation top-1 accuracy per position.
    pub val_accuracy: Vec<f64>,
}

/// How each user turns its history into predictions.
#[derive(Debug, Clone)]
pub enum Predictor {
    Trained(ModelParams),
    /// Surrogate with the configured per-position hit rate.
    Oracle(Vec<f64>),
}

/// The only thing a user sends to the edge server each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateMessage {
    pub user: usize,
    pub slot: usize,
    /// `est[s][f]`
    pub est: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Workload {
    pub catalog: ContentCatalog,
    pub profiles: Vec<UserProfile>,
    pub trace: RequestTrace,
    /// Request frequency over the training window, pooled across users.
    pub global_popularity: Vec<f64>,
}

/// Synthetic data with the split applied and user popularities filled in.
pub fn prepare_workload(cfg: &RunConfig) -> Result<Workload> {
    cfg.validate()?;
    let catalog = build_catalog(cfg.catalog, derive_seed(cfg.seed, Stream::Catalog, &[]))?;
    let mut profiles = sample_user_profiles(
        cfg.users,
        cfg.catalog.num_genres,
        cfg.workload.dirichlet_alpha,
        derive_seed(cfg.seed, Stream::Profiles, &[]),
    )?;
    let trace = generate_trace(
        &catalog,
        &profiles,
        &cfg.workload.trace_params(),
        derive_seed(cfg.seed, Stream::Trace, &[]),
    )?;
    let partition = Partition::aligned(
        trace.len(),
        cfg.workload.requests_per_day,
        cfg.workload.history_days,
        cfg.workload.validation_fraction,
        cfg.slot_len,
    )?;
    let trace = trace.with_partition(partition);
    let train = trace.partition.train.clone();
    for p in &mut profiles {
        p.popularity = empirical_user_popularity(&trace, p.user, train.clone())?;
    }
    let global_popularity = global_popularity(&trace, train)?;
    Ok(Workload {
        catalog,
        profiles,
        trace,
        global_popularity,
    })
}

fn user_datasets(cfg: &RunConfig, trace: &RequestTrace) -> Result<Vec<Vec<TrainingSample>>> {
    (0..trace.num_users())
        .map(|u| {
            build_dataset(
                trace,
                u,
                trace.partition.train.clone(),
                cfg.predictor.history,
                cfg.slot_len,
            )
        })
        .collect()
}

fn initial_model(cfg: &RunConfig) -> Result<ModelParams> {
    ModelParams::random(
        cfg.architecture(),
        cfg.predictor.init_scale,
        derive_seed(cfg.seed, Stream::ModelInit, &[]),
    )
}

fn validation_curve_row(
    params: &ModelParams,
    trace: &RequestTrace,
    round: usize,
    mean_loss: f64,
) -> Result<CurveRow> {
    let p = &trace.partition;
    Ok(CurveRow {
        round,
        mean_loss,
        val_accuracy: top1_accuracy_by_position(params, trace, p.validation_slots(), p.slot_len)?,
    })
}

/// FedAvg training on every user's training window.
pub fn train_predictor(cfg: &RunConfig, work: &Workload) -> Result<(ModelParams, Vec<CurveRow>)> {
    let datasets = user_datasets(cfg, &work.trace)?;
    let mut curve = Vec::with_capacity(cfg.predictor.fl.rounds);
    let mut eval_error = None;
    let model = train_federated(
        initial_model(cfg)?,
        &datasets,
        &cfg.predictor.fl,
        derive_seed(cfg.seed, Stream::LocalUpdate, &[]),
        |round, outcome| match validation_curve_row(&outcome.params, &work.trace, round, outcome.mean_loss) {
            Ok(row) => curve.push(row),
            Err(e) => eval_error = Some(e),
        },
    )?;
    if let Some(e) = eval_error {
        return Err(e);
    }
    Ok((model, curve))
}

impl Predictor {
    /// User `user`'s prediction rows for the slot starting at mini-slot
    /// `start`. The trained model sees only the user's past requests; the
    /// surrogate peeks at the truth by construction.
    fn predict(
        &self,
        cfg: &RunConfig,
        work: &Workload,
        user: usize,
        slot: usize,
    ) -> Result<Vec<Vec<f64>>> {
        let n = cfg.slot_len;
        let start = slot * n;
        match self {
            Predictor::Trained(model) => {
                model.predict(history_before(&work.trace, user, start, model.arch.history))
            }
            Predictor::Oracle(accuracy) => {
                let mut rng = stream_rng(cfg.seed, Stream::Oracle, &[user as u64, slot as u64]);
                Ok(noisy_oracle_predict(
                    &work.trace.user(user)[start..start + n],
                    accuracy,
                    &work.profiles[user].popularity,
                    &mut rng,
                ))
            }
        }
    }
}

/// Users' state after training and validation.
#[derive(Debug, Clone)]
pub struct UserSide {
    pub predictor: Predictor,
    /// `accuracy[u][s][f]` from the validation window.
    pub accuracy: Vec<Vec<Vec<f64>>>,
    pub train_curve: Vec<CurveRow>,
}

pub fn prepare_users(cfg: &RunConfig, work: &Workload) -> Result<UserSide> {
    let (predictor, train_curve) = match cfg.predictor.mode {
        PredictorMode::Trained => {
            let (model, curve) = train_predictor(cfg, work)?;
            (Predictor::Trained(model), curve)
        }
        PredictorMode::Oracle => (
            Predictor::Oracle(cfg.predictor.oracle_accuracy[..cfg.slot_len].to_vec()),
            Vec::new(),
        ),
    };
    let n = cfg.slot_len;
    let slots = work.trace.partition.validation_slots();
    let accuracy = (0..cfg.users)
        .into_par_iter()
        .map(|u| {
            let mut preds = Vec::with_capacity(slots.len());
            let mut truth = Vec::with_capacity(slots.len());
            for slot in slots.clone() {
                preds.push(predictor.predict(cfg, work, u, slot)?);
                truth.push(work.trace.user(u)[slot * n..(slot + 1) * n].to_vec());
            }
            Ok(estimate_accuracy(
                &preds,
                &truth,
                n,
                work.catalog.num_files(),
                cfg.predictor.accuracy_mode,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UserSide {
        predictor,
        accuracy,
        train_curve,
    })
}

/// Steps 1 and 2 for one user and slot: predict, then blend with accuracy
/// and the user's own popularity.
pub fn user_message(
    cfg: &RunConfig,
    work: &Workload,
    users: &UserSide,
    user: usize,
    slot: usize,
) -> Result<EstimateMessage> {
    let probs = users.predictor.predict(cfg, work, user, slot)?;
    let est = crate::planner::estimate_user_requests(
        &probs,
        &users.accuracy[user],
        &work.profiles[user].popularity,
    );
    Ok(EstimateMessage { user, slot, est })
}

/// Step 3: the edge server stacks the messages of one slot.
pub fn aggregate_messages(slot: usize, mut messages: Vec<EstimateMessage>) -> Result<DemandEstimate> {
    messages.sort_by_key(|m| m.user);
    if messages.iter().any(|m| m.slot != slot) {
        return Err(Error::Config(format!("message for a different slot than {slot}")));
    }
    DemandEstimate::from_user_estimates(messages.into_iter().map(|m| m.est).collect())
}

/// Demand estimates the edge server receives for every test slot.
pub fn test_demands(cfg: &RunConfig, work: &Workload, users: &UserSide) -> Result<Vec<DemandEstimate>> {
    work.trace
        .partition
        .test_slots()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|slot| {
            let messages = (0..cfg.users)
                .map(|u| user_message(cfg, work, users, u, slot))
                .collect::<Result<Vec<_>>>()?;
            aggregate_messages(slot, messages)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotReport {
    pub slot: usize,
    pub policy: PolicyKind,
    pub cache_size: usize,
    pub chr: f64,
    pub realized_revenue: f64,
    pub planned_revenue: f64,
    /// Files newly placed at the start of the slot.
    pub placements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub policy: PolicyKind,
    pub cache_size: usize,
    pub slot: usize,
    pub file: usize,
    pub weight: f64,
    pub selected: bool,
}

/// Edge-server view: what a policy may consult when choosing a placement.
pub struct EdgeServer<'a> {
    pub policy: PolicyKind,
    pub cost: CostModel,
    global_popularity: &'a [f64],
    spare: crate::planner::SpareCapacity,
    tracker: Option<RecencyTracker>,
    static_placement: CacheState,
}

impl<'a> EdgeServer<'a> {
    /// `served_history[u]` holds the requests served before the first test
    /// slot, replayed by the recency policies to warm their caches.
    pub fn new(
        policy: PolicyKind,
        cost: CostModel,
        global_popularity: &'a [f64],
        spare: crate::planner::SpareCapacity,
        served_history: &[&[usize]],
    ) -> Self {
        let static_placement = stabc_placement(global_popularity, &cost);
        let tracker = match policy {
            PolicyKind::Lru | PolicyKind::Mru => {
                let eviction = if policy == PolicyKind::Lru {
                    Eviction::LeastRecent
                } else {
                    Eviction::MostRecent
                };
                let mut t = RecencyTracker::with_initial(&static_placement, &cost, eviction);
                recency_update(&mut t, served_history, 0);
                Some(t)
            }
            _ => None,
        };
        Self {
            policy,
            cost,
            global_popularity,
            spare,
            tracker,
            static_placement,
        }
    }

    /// Steps 3 and 4: placement for the coming slot from the users'
    /// estimates.
    pub fn plan(&self, demand: &DemandEstimate, d_prev: &CacheState) -> CacheState {
        match self.policy {
            PolicyKind::Proposed => {
                let d_next = future_placement_by_popularity(self.global_popularity, &self.cost);
                let w = compute_weights(demand, d_prev, &d_next, &self.cost);
                place_by_weight(&w.per_file, &self.cost, self.spare)
            }
            PolicyKind::ChrOpt => chropt_placement(demand, &self.cost),
            PolicyKind::StaBc => self.static_placement.clone(),
            PolicyKind::Lru | PolicyKind::Mru => {
                self.tracker.as_ref().expect("recency tracker").state()
            }
        }
    }

    /// Requests served during the slot that just ended.
    pub fn observe_served(&mut self, served: &[&[usize]], first_mini_slot: usize) {
        if let Some(t) = self.tracker.as_mut() {
            recency_update(t, served, first_mini_slot);
        }
    }
}

/// Sequential slot loop for one policy and cache size.
pub fn simulate_policy(
    cfg: &RunConfig,
    work: &Workload,
    demands: &[DemandEstimate],
    policy: PolicyKind,
    cache_size: usize,
    mut decisions: Option<&mut Vec<DecisionRow>>,
) -> Result<Vec<SlotReport>> {
    let cost = cfg.costs.with_capacity(cache_size, work.catalog.num_files())?;
    let part = &work.trace.partition;
    let history = work.trace.window(0..part.test.start);
    let mut server = EdgeServer::new(
        policy,
        cost,
        &work.global_popularity,
        cfg.spare_capacity,
        &history,
    );
    let d_next = future_placement_by_popularity(&work.global_popularity, &cost);
    let mut d_prev = CacheState::empty(work.catalog.num_files());
    let mut reports = Vec::with_capacity(demands.len());
    for (slot, demand) in part.test_slots().zip(demands) {
        let d = server.plan(demand, &d_prev).at_slot(slot);
        debug_assert!(d.is_feasible(&cost));
        let range = part.slot_range(slot);
        let served = work.trace.window(range.clone());
        let revenue = realized_revenue(&served, &d, &d_prev, &cost);
        if let Some(rows) = decisions.as_deref_mut() {
            let w = compute_weights(demand, &d_prev, &d_next, &cost);
            rows.extend(w.per_file.iter().enumerate().map(|(file, &weight)| DecisionRow {
                policy,
                cache_size,
                slot,
                file,
                weight,
                selected: d.contains(file),
            }));
        }
        reports.push(SlotReport {
            slot,
            policy,
            cache_size,
            chr: chr(&served, &d),
            realized_revenue: revenue.total(),
            planned_revenue: planned_revenue(demand, &d, &d_prev, &d_next, &cost),
            placements: d.insertions_since(&d_prev),
        });
        server.observe_served(&served, range.start);
        d_prev = d;
    }
    Ok(reports)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: PolicyKind,
    pub n: usize,
    pub cache_size: usize,
    pub slots: usize,
    pub mean_chr: f64,
    /// Half-width of the normal 95% interval over slots.
    pub chr_ci: f64,
    pub mean_revenue: f64,
    pub revenue_ci: f64,
    pub mean_planned_revenue: f64,
    pub mean_placements: f64,
}

fn mean_and_ci(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, 1.96 * (var / k).sqrt())
}

pub fn summarize(reports: &[SlotReport], n: usize) -> Vec<SummaryRow> {
    let mut keys: Vec<(PolicyKind, usize)> = reports.iter().map(|r| (r.policy, r.cache_size)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(policy, cache_size)| {
            let rows: Vec<&SlotReport> = reports
                .iter()
                .filter(|r| r.policy == policy && r.cache_size == cache_size)
                .collect();
            let col = |f: fn(&SlotReport) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (mean_chr, chr_ci) = mean_and_ci(&col(|r| r.chr));
            let (mean_revenue, revenue_ci) = mean_and_ci(&col(|r| r.realized_revenue));
            let (mean_planned_revenue, _) = mean_and_ci(&col(|r| r.planned_revenue));
            let (mean_placements, _) = mean_and_ci(&col(|r| r.placements as f64));
            SummaryRow {
                policy,
                n,
                cache_size,
                slots: rows.len(),
                mean_chr,
                chr_ci,
                mean_revenue,
                revenue_ci,
                mean_planned_revenue,
                mean_placements,
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub slots: Vec<SlotReport>,
    pub summary: Vec<SummaryRow>,
    pub train_curve: Vec<CurveRow>,
    pub decisions: Vec<DecisionRow>,
}

/// Generates data, prepares the users, then runs every (policy, cache size)
/// pair over the test window.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult> {
    let work = prepare_workload(cfg)?;
    let users = prepare_users(cfg, &work)?;
    run_with(cfg, &work, &users)
}

pub fn run_with(cfg: &RunConfig, work: &Workload, users: &UserSide) -> Result<ExperimentResult> {
    let demands = test_demands(cfg, work, users)?;
    let pairs: Vec<(PolicyKind, usize)> = cfg
        .policies
        .iter()
        .flat_map(|&p| cfg.cache_sizes.iter().map(move |&s| (p, s)))
        .collect();
    let mut outcomes = pairs
        .into_par_iter()
        .map(|(policy, size)| {
            let mut rows = Vec::new();
            let sink = cfg.dump_decisions.then_some(&mut rows);
            let reports = simulate_policy(cfg, work, &demands, policy, size, sink)?;
            Ok((policy, size, reports, rows))
        })
        .collect::<Result<Vec<_>>>()?;
    outcomes.sort_by_key(|(p, s, _, _)| (*p, *s));
    let mut slots = Vec::new();
    let mut decisions = Vec::new();
    for (_, _, reports, rows) in outcomes {
        slots.extend(reports);
        decisions.extend(rows);
    }
    let summary = summarize(&slots, cfg.slot_len);
    Ok(ExperimentResult {
        slots,
        summary,
        train_curve: users.train_curve.clone(),
        decisions,
    })
}

/// Summary over `sizes`, which must be ascending.
pub fn sweep_cache_sizes(cfg: &RunConfig, sizes: &[usize]) -> Result<ExperimentResult> {
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Config("cache sizes must be ascending".into()));
    }
    if sizes.is_empty() {
        return Ok(ExperimentResult {
            slots: Vec::new(),
            summary: Vec::new(),
            train_curve: Vec::new(),
            decisions: Vec::new(),
        });
    }
    let cfg = RunConfig {
        cache_sizes: sizes.to_vec(),
        ..cfg.clone()
    };
    run_experiment(&cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlComparison {
    /// Held-out top-1 accuracy per position.
    pub federated: Vec<f64>,
    pub centralized: Vec<f64>,
}

impl FlComparison {
    pub fn ratio_at_first_position(&self) -> f64 {
        self.federated[0] / self.centralized[0]
    }
}

/// Trains the same architecture with FedAvg and with pooled-data SGD under
/// the same round and epoch schedule, and scores both on the test window.
pub fn compare_fl_vs_centralized(cfg: &RunConfig) -> Result<FlComparison> {
    let work = prepare_workload(cfg)?;
    let datasets = user_datasets(cfg, &work.trace)?;
    let pooled: Vec<TrainingSample> = datasets.iter().flatten().cloned().collect();
    let seed = derive_seed(cfg.seed, Stream::LocalUpdate, &[]);
    let fl = train_federated(initial_model(cfg)?, &datasets, &cfg.predictor.fl, seed, |_, _| {})?;
    let cl = train_centralized(initial_model(cfg)?, &pooled, &cfg.predictor.fl, seed, |_, _| {})?;
    let p = &work.trace.partition;
    Ok(FlComparison {
        federated: top1_accuracy_by_position(&fl, &work.trace, p.test_slots(), p.slot_len)?,
        centralized: top1_accuracy_by_position(&cl, &work.trace, p.test_slots(), p.slot_len)?,
    })
}
