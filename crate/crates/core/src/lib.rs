//! Proactive edge-cache placement that maximizes operator revenue from
//! privacy-preserving, per-user multi-slot demand predictions.
//!
//! The crate covers synthetic request generation ([`request_model`]),
//! federated demand prediction ([`predictor`]), the per-slot revenue
//! knapsack ([`planner`]), comparison policies ([`baselines`]) and the
//! experiment driver ([`sim`]).

pub mod baselines;
pub mod error;
pub mod planner;
pub mod predictor;
pub mod request_model;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
