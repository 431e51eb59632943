//! Content catalog, user preferences and synthetic request traces.

mod catalog;
mod generator;
pub mod io;
mod profile;
mod trace;

pub use catalog::{build_catalog, zipf_weights, CatalogParams, ContentCatalog};
pub use generator::{generate_trace, similarity_score, topm_distribution, FollowUp, TraceParams};
pub(crate) use generator::sample_index;
pub use profile::{sample_dirichlet, sample_user_profiles, UserProfile};
pub use trace::{empirical_user_popularity, global_popularity, Partition, RequestTrace};
