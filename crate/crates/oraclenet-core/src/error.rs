//! Crate-wide error type. Contract violations (caller bugs) and ledger
//! rejections share one enum so simulator code can bubble everything up.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("event id must be nonempty")]
    EmptyEventId,

    #[error("reputation {0} is below the floor of 1.0")]
    ReputationBelowFloor(f64),

    #[error("source count must be at least 1")]
    ZeroSourceCount,

    #[error("result set must be nonempty")]
    EmptyResults,

    #[error("response time must be positive (got {0})")]
    NonpositiveResponseTime(f64),

    #[error("envelopes carry mixed event ids ({0} vs {1})")]
    MixedEventIds(String, String),

    #[error("attestation failed verification for source {0}")]
    BadAttestation(String),

    #[error("priority claim failed verification for node {0}")]
    BadPriorityClaim(crate::NodeId),

    #[error("node {0} is already registered")]
    AlreadyRegistered(crate::NodeId),

    #[error("node {0} is not registered")]
    NotRegistered(crate::NodeId),

    #[error("deposit {got} is below the required minimum {min}")]
    InsufficientDeposit { got: u64, min: u64 },

    #[error("account {0} has insufficient funds (need {1}, have {2})")]
    InsufficientFunds(String, u64, u64),

    #[error("request id {0} already exists in the event log")]
    DuplicateRequest(String),

    #[error("unknown request id {0}")]
    UnknownRequest(String),

    #[error("request {0} was already finalized")]
    AlreadyFinalized(String),

    #[error("node {0} has no deposit to confiscate")]
    EmptyDeposit(crate::NodeId),

    #[error("consensus round aborted: {responsive} responsive of {members} members")]
    ConsensusAborted { responsive: usize, members: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("no metrics to report")]
    EmptyMetrics,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
