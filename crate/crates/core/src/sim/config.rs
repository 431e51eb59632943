use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::PolicyKind;
use crate::error::{Error, Result};
use crate::planner::{CostParams, SpareCapacity};
use crate::predictor::{AccuracyMode, Architecture, FlConfig};
use crate::request_model::{CatalogParams, FollowUp, TraceParams};

/// Per-position accuracies of the full-scale reference predictor.
pub const REFERENCE_ACCURACY: [f64; 5] = [0.8531, 0.8167, 0.7968, 0.7771, 0.7414];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadParams {
    pub dirichlet_alpha: f64,
    pub history_days: usize,
    pub test_days: usize,
    pub requests_per_day: usize,
    pub seed_len: usize,
    pub top_m: usize,
    pub similarity_decay: f64,
    pub mix_weight: f64,
    pub follow_up: FollowUp,
    /// Trailing share of the history used for validation.
    pub validation_fraction: f64,
}

impl Default for WorkloadParams {
    fn default() -> Self {
        Self {
            dirichlet_alpha: 0.3,
            history_days: 40,
            test_days: 8,
            requests_per_day: 107,
            seed_len: 7,
            top_m: 5,
            similarity_decay: 0.5,
            mix_weight: 0.7,
            follow_up: FollowUp::Independent,
            validation_fraction: 0.1,
        }
    }
}

impl WorkloadParams {
    pub fn trace_params(&self) -> TraceParams {
        TraceParams {
            days: self.history_days + self.test_days,
            requests_per_day: self.requests_per_day,
            seed_len: self.seed_len,
            top_m: self.top_m,
            similarity_decay: self.similarity_decay,
            mix_weight: self.mix_weight,
            follow_up: self.follow_up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorMode {
    Trained,
    Oracle,
}

impl std::str::FromStr for PredictorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trained" => Ok(Self::Trained),
            "oracle" | "noisy-oracle" => Ok(Self::Oracle),
            other => Err(Error::Config(format!("unknown predictor {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorConfig {
    pub mode: PredictorMode,
    /// Past requests fed to the model.
    pub history: usize,
    pub hidden: Vec<usize>,
    pub init_scale: f64,
    pub fl: FlConfig,
    /// Noisy-oracle hit probability per position; needs at least `slot_len`
    /// entries.
    pub oracle_accuracy: Vec<f64>,
    pub accuracy_mode: AccuracyMode,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            mode: PredictorMode::Oracle,
            history: 10,
            hidden: vec![32],
            init_scale: 1.0,
            fl: FlConfig::default(),
            oracle_accuracy: REFERENCE_ACCURACY.to_vec(),
            accuracy_mode: AccuracyMode::PerFile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub users: usize,
    pub catalog: CatalogParams,
    pub workload: WorkloadParams,
    /// Mini-slots per cache-placement slot (n).
    pub slot_len: usize,
    pub predictor: PredictorConfig,
    pub costs: CostParams,
    pub spare_capacity: SpareCapacity,
    pub cache_sizes: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    /// Also write per-file weights and selections for every slot.
    #[serde(default)]
    pub dump_decisions: bool,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    /// Desk-scale setup: 10 users, 60 files, 40 history days, 8 test days.
    fn default() -> Self {
        Self {
            seed: 7,
            users: 10,
            catalog: CatalogParams::default(),
            workload: WorkloadParams::default(),
            slot_len: 5,
            predictor: PredictorConfig::default(),
            costs: CostParams::default(),
            spare_capacity: SpareCapacity::Fill,
            cache_sizes: vec![6, 12, 24, 36, 48, 60],
            policies: PolicyKind::ALL.to_vec(),
            dump_decisions: false,
            out_dir: None,
        }
    }
}

impl RunConfig {
    /// Full-scale setup: 50 users, 240 files, 160 history days. Placement
    /// cost is 0.7 for two-mini-slot placement slots and 1 otherwise.
    pub fn paper_scale(slot_len: usize) -> Self {
        let mut cfg = Self {
            users: 50,
            catalog: CatalogParams {
                num_files: 240,
                ..CatalogParams::default()
            },
            workload: WorkloadParams {
                history_days: 160,
                test_days: 16,
                ..WorkloadParams::default()
            },
            slot_len,
            cache_sizes: (1..=12).map(|k| 20 * k).collect(),
            ..Self::default()
        };
        cfg.predictor.fl = FlConfig {
            rounds: 450,
            local_epochs: 4,
            batch_size: 32,
            learning_rate: 0.18,
        };
        cfg.predictor.hidden = vec![64];
        cfg.costs.placement_cost = if slot_len == 2 { 0.7 } else { 1.0 };
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            history: self.predictor.history,
            horizon: self.slot_len,
            num_files: self.catalog.num_files,
            hidden: self.predictor.hidden.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.users == 0 {
            return bad("at least one user is required".into());
        }
        if self.slot_len == 0 {
            return bad("slot_len must be at least 1".into());
        }
        let c = &self.catalog;
        if c.num_genres == 0 || c.num_files % c.num_genres != 0 {
            return bad(format!(
                "{} files cannot be split evenly across {} genres",
                c.num_files, c.num_genres
            ));
        }
        if c.feature_dim < 2 || !(c.zipf_exponent > 0.0) {
            return bad("feature_dim must be >= 2 and zipf_exponent > 0".into());
        }
        let w = &self.workload;
        if w.seed_len == 0 || w.requests_per_day < w.seed_len {
            return bad("requests_per_day must be at least seed_len >= 1".into());
        }
        if c.num_files / c.num_genres < w.seed_len + w.top_m {
            return bad(format!(
                "each genre needs at least seed_len + top_m = {} files",
                w.seed_len + w.top_m
            ));
        }
        if !(w.dirichlet_alpha > 0.0) || !(w.similarity_decay > 0.0) {
            return bad("dirichlet_alpha and similarity_decay must be positive".into());
        }
        if !(w.mix_weight > 0.0 && w.mix_weight < 1.0) {
            return bad(format!("mix_weight {} outside (0, 1)", w.mix_weight));
        }
        if !(0.0..1.0).contains(&w.validation_fraction) {
            return bad(format!("validation_fraction {} outside [0, 1)", w.validation_fraction));
        }
        if w.history_days == 0 || w.test_days == 0 {
            return bad("history_days and test_days must be positive".into());
        }
        let history_len = w.history_days * w.requests_per_day;
        let train_len = (history_len as f64 * (1.0 - w.validation_fraction)) as usize;
        if train_len < self.predictor.history + self.slot_len + self.slot_len {
            return bad("training window too short for the predictor history".into());
        }
        if w.test_days * w.requests_per_day < self.slot_len {
            return bad("test window shorter than one placement slot".into());
        }
        self.costs.validate()?;
        let full = c.num_files * self.costs.file_size;
        for &s in &self.cache_sizes {
            if s < self.costs.file_size || s > full || s % self.costs.file_size != 0 {
                return bad(format!(
                    "cache size {s} must be a multiple of the file size within [{}, {full}]",
                    self.costs.file_size
                ));
            }
        }
        let p = &self.predictor;
        if p.history == 0 {
            return bad("predictor history must be at least 1".into());
        }
        if p.oracle_accuracy.len() < self.slot_len
            || p.oracle_accuracy.iter().any(|a| !(0.0..=1.0).contains(a))
        {
            return bad(format!(
                "oracle_accuracy needs {} entries in [0, 1]",
                self.slot_len
            ));
        }
        if p.hidden.contains(&0) || !(p.init_scale >= 0.0) {
            return bad("hidden widths must be positive and init_scale non-negative".into());
        }
        p.fl.validate()?;
        Ok(())
    }
}
