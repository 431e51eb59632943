//! Experiment configuration, the slot-by-slot simulation loop, and outputs.

mod config;
mod harness;
pub mod output;

pub use config::{PredictorConfig, PredictorMode, RunConfig, WorkloadParams, REFERENCE_ACCURACY};
pub use harness::{
    aggregate_messages, compare_fl_vs_centralized, prepare_users, prepare_workload, run_experiment,
    run_with, simulate_policy, summarize, sweep_cache_sizes, test_demands, train_predictor,
    user_message, CurveRow, DecisionRow, EdgeServer, EstimateMessage, ExperimentResult,
    FlComparison, Predictor, SlotReport, SummaryRow, UserSide, Workload,
};
