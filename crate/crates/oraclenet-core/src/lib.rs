//! Deterministic, seedable simulator and algorithm library for a
//! reputation-weighted blockchain oracle network.
//!
//! The library is organized around the lifecycle of a single oracle task:
//!
//! * [`vrf`] — keyed-hash verifiable randomness and the shared ring hash.
//! * [`selection`] — hash-ring anchors, per-event node priorities, top-t selection.
//! * [`reputation`] — per-node service history and the reputation formula.
//! * [`filtering`] — sliding-window timestamp filter and the retry policy.
//! * [`collection`] — commit-reveal envelopes and t-of-n group signatures.
//! * [`aggregation`] — the temporary consensus network, outlier detection and
//!   value aggregation.
//! * [`contracts`] — the simulated on-chain ledger (registration, messages,
//!   payment, reputation).
//! * [`simnet`] — the discrete-event engine tying everything together.
//! * [`scenario`] / [`metrics`] — experiment configuration, scheme variants,
//!   end-to-end runs and CSV reporting.
//!
//! Every run is a pure function of its configuration and seed: two runs with
//! equal `(config, seed)` produce byte-identical traces, ledgers and reports.

pub mod aggregation;
pub mod collection;
pub mod contracts;
pub mod error;
pub mod filtering;
pub mod metrics;
pub mod reputation;
pub mod scenario;
pub mod selection;
pub mod simnet;
pub mod types;
pub mod vrf;

pub use error::{Error, Result};
pub use types::{NodeId, SimTime};
