//! Per-run diagnostics shared by all algorithms and the experiment harness.

use serde::{Deserialize, Serialize};

/// What a single algorithm run produced. Serializing the same report twice
/// yields identical bytes (object keys are ordered), which is what the
/// determinism contracts compare.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Full configuration, including the algorithm tag and derived parameters.
    pub config: serde_json::Value,
    /// Every environment draw made by the run (Phase I + Phase II).
    pub samples_total: u64,
    /// Index of the returned policy in the class.
    pub chosen_policy: usize,
    /// Exact `max_π R(π) − R(π̂)`, recomputed from the environment.
    pub suboptimality: f64,
    /// Exact Phase-I estimator variance for every policy in the class.
    pub variance_by_policy: Vec<f64>,
    /// Master seed of the stream the run consumed.
    pub seed: u64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}
