//! Ordered event trace of a simulation run.
//!
//! Every externally meaningful transition is appended as one line-delimited
//! record, so runs can be diffed, hashed and replayed. The trace doubles as
//! the information-flow audit log: plaintext accesses are recorded and can be
//! checked against group-signature formation times after the fact.

use crate::types::{NodeId, SimTime};
use crate::vrf;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum TraceEvent {
    TaskPosted { q: String, attempt: u32 },
    EnvelopeBroadcast { q: String, node: NodeId, distance: u64 },
    EnvelopeRejected { q: String, node: NodeId, reason: &'static str },
    NetworkJoin { q: String, node: NodeId, outcome: String },
    GroupSignatureFormed { q: String, contributors: usize },
    KeyRevealed { q: String, node: NodeId },
    PlaintextAccess { q: String, node: NodeId },
    CollectionClosed { q: String, candidates: usize },
    FilterDecision { q: String, kept: Vec<NodeId>, dropped: Vec<NodeId> },
    RoundCommitted { q: String, round: u8, epoch: u32, payload_hash: u64 },
    LeaderChanged { q: String, from: NodeId, to: NodeId, epoch: u32 },
    MemberCrashed { q: String, node: NodeId },
    ResultSubmitted { q: String, node: NodeId, value: f64 },
    TaskFinalized { q: String, value: f64, response_time: f64 },
    RetryScheduled { q: String, attempt: u32, new_width: SimTime },
    TaskFailed { q: String, reason: &'static str },
    HorizonAbort { pending: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub event: TraceEvent,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.time)?;
        match &self.event {
            TraceEvent::TaskPosted { q, attempt } => write!(f, "posted {q} attempt {attempt}"),
            TraceEvent::EnvelopeBroadcast { q, node, distance } => {
                write!(f, "envelope {q} {node} distance {distance}")
            }
            TraceEvent::EnvelopeRejected { q, node, reason } => {
                write!(f, "rejected {q} {node} {reason}")
            }
            TraceEvent::NetworkJoin { q, node, outcome } => {
                write!(f, "join {q} {node} {outcome}")
            }
            TraceEvent::GroupSignatureFormed { q, contributors } => {
                write!(f, "group-signature {q} contributors {contributors}")
            }
            TraceEvent::KeyRevealed { q, node } => write!(f, "reveal {q} {node}"),
            TraceEvent::PlaintextAccess { q, node } => write!(f, "plaintext {q} {node}"),
            TraceEvent::CollectionClosed { q, candidates } => {
                write!(f, "closed {q} candidates {candidates}")
            }
            TraceEvent::FilterDecision { q, kept, dropped } => {
                write!(f, "filter {q} kept")?;
                for n in kept {
                    write!(f, " {n}")?;
                }
                write!(f, " dropped")?;
                for n in dropped {
                    write!(f, " {n}")?;
                }
                Ok(())
            }
            TraceEvent::RoundCommitted { q, round, epoch, payload_hash } => {
                write!(f, "round {q} r{round} e{epoch} payload {payload_hash:016x}")
            }
            TraceEvent::LeaderChanged { q, from, to, epoch } => {
                write!(f, "leader {q} {from} -> {to} e{epoch}")
            }
            TraceEvent::MemberCrashed { q, node } => write!(f, "crash {q} {node}"),
            TraceEvent::ResultSubmitted { q, node, value } => {
                write!(f, "submit {q} {node} value {value:.9e}")
            }
            TraceEvent::TaskFinalized { q, value, response_time } => {
                write!(f, "finalized {q} value {value:.9e} rt {response_time:.6}")
            }
            TraceEvent::RetryScheduled { q, attempt, new_width } => {
                write!(f, "retry {q} attempt {attempt} width {new_width}")
            }
            TraceEvent::TaskFailed { q, reason } => write!(f, "failed {q} {reason}"),
            TraceEvent::HorizonAbort { pending } => write!(f, "horizon-abort pending {pending}"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TraceLog {
    pub records: Vec<TraceRecord>,
}

impl TraceLog {
    pub fn push(&mut self, time: SimTime, event: TraceEvent) {
        self.records.push(TraceRecord { time, event });
    }

    pub fn lines(&self) -> impl Iterator<Item = String> + '_ {
        self.records.iter().map(|r| r.to_string())
    }

    /// Stable content hash over the line-delimited export.
    pub fn content_hash(&self) -> u64 {
        let mut material = Vec::new();
        for line in self.lines() {
            material.extend_from_slice(line.as_bytes());
            material.push(b'\n');
        }
        vrf::hash_to_ring(&material)
    }

    /// Information-flow audit: counts plaintext accesses that precede their
    /// task's group-signature formation (ties count as violations).
    pub fn early_plaintext_violations(&self) -> usize {
        let mut group_sig_at: BTreeMap<&str, SimTime> = BTreeMap::new();
        for r in &self.records {
            if let TraceEvent::GroupSignatureFormed { q, .. } = &r.event {
                group_sig_at.entry(q.as_str()).or_insert(r.time);
            }
        }
        self.records
            .iter()
            .filter(|r| {
                if let TraceEvent::PlaintextAccess { q, .. } = &r.event {
                    match group_sig_at.get(q.as_str()) {
                        Some(&formed) => r.time < formed,
                        None => true,
                    }
                } else {
                    false
                }
            })
            .count()
    }

    /// Plain-text export, one record per line.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for line in self.lines() {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}
