//! Per-node service history and the reputation formula
//! `R = log10(S) * (alpha / T + (1 - alpha) * A)`, clamped below at a floor.
//!
//! `S` is the total number of services performed, `T` the running mean
//! response time in seconds and `A` the exact fraction of services judged
//! correct. The logarithm grows new reputations quickly and then levels off,
//! which keeps long-lived nodes from locking out newcomers.

use crate::error::{Error, Result};
use crate::types::NodeId;
use serde::{Deserialize, Serialize};

/// Log base used by the reputation formula. Kept as a named constant so the
/// choice is auditable; with base 10, reaching S = 10 services contributes a
/// factor of exactly 1.
pub const REPUTATION_LOG_BASE: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReputationRecord {
    pub node_id: NodeId,
    /// Total services performed, at least 1.
    pub total_services: u64,
    /// Arithmetic mean of all recorded response times, seconds.
    pub mean_response_time: f64,
    /// Services judged correct; accuracy is `correct_count / total_services`.
    pub correct_count: u64,
}

impl ReputationRecord {
    /// Record for a fresh registrant: one prior service at the prior mean of
    /// 1.0 s, judged correct. With the floor this yields a reputation of 1.0
    /// and exactly one ring position.
    pub fn new(node_id: NodeId) -> Self {
        ReputationRecord {
            node_id,
            total_services: 1,
            mean_response_time: 1.0,
            correct_count: 1,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.correct_count as f64 / self.total_services as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReputationParams {
    /// Weight of response speed versus data accuracy, in (0, 1).
    pub alpha: f64,
    /// Lower clamp on the returned reputation.
    pub reputation_floor: f64,
    /// Slashing triggers when the raw reputation drops strictly below this;
    /// 0 disables slashing.
    pub slash_threshold: f64,
}

impl Default for ReputationParams {
    fn default() -> Self {
        ReputationParams { alpha: 0.5, reputation_floor: 1.0, slash_threshold: 0.0 }
    }
}

impl ReputationParams {
    pub fn with_alpha(alpha: f64) -> Self {
        ReputationParams { alpha, ..Default::default() }
    }
}

/// Unclamped reputation value.
pub fn raw_reputation(record: &ReputationRecord, params: &ReputationParams) -> f64 {
    let s = record.total_services as f64;
    let log_s = s.log(REPUTATION_LOG_BASE);
    log_s * (params.alpha / record.mean_response_time
        + (1.0 - params.alpha) * record.accuracy())
}

/// Reputation clamped below at the floor.
pub fn compute_reputation(record: &ReputationRecord, params: &ReputationParams) -> f64 {
    raw_reputation(record, params).max(params.reputation_floor)
}

/// Folds one completed service into the record: `S` increments, the mean
/// response time becomes the exact running mean, and the correct count
/// increments iff the service was judged correct.
pub fn record_service(
    record: &ReputationRecord,
    response_time: f64,
    correct: bool,
) -> Result<ReputationRecord> {
    if !(response_time > 0.0) {
        return Err(Error::NonpositiveResponseTime(response_time));
    }
    let s = record.total_services;
    let mean = record.mean_response_time + (response_time - record.mean_response_time)
        / (s + 1) as f64;
    Ok(ReputationRecord {
        node_id: record.node_id.clone(),
        total_services: s + 1,
        mean_response_time: mean,
        correct_count: record.correct_count + if correct { 1 } else { 0 },
    })
}

/// True iff slashing is enabled and the raw (unclamped) reputation has fallen
/// strictly below the threshold.
pub fn should_slash(record: &ReputationRecord, params: &ReputationParams) -> bool {
    params.slash_threshold > 0.0 && raw_reputation(record, params) < params.slash_threshold
}
