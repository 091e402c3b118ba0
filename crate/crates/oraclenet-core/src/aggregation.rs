//! Off-chain aggregation: the temporary priority-gated consensus network and
//! the two one-shot consensus rounds that agree on the revealed result set
//! and on the final aggregate.
//!
//! The network holds at most `t` members ordered by priority. The first
//! responder creates it and leads; later responders join while there is
//! room, and once full a joiner displaces the lowest-priority member only if
//! it outranks them. Consensus is leader-proposal/acknowledge at crash-fault
//! fidelity: one payload per round, committed on a majority of member
//! acknowledgements, with the next-highest-priority member taking over a
//! crashed leader. Round payloads are canonical byte strings so agreement is
//! checked by byte equality.

use crate::error::{Error, Result};
use crate::filtering::TimedResult;
use crate::types::NodeId;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub const K_MAD: f64 = 3.0;

/// A network member with its priority ordering key (smaller distance ranks
/// higher; ties break by ascending node id).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Member {
    pub node_id: NodeId,
    pub distance: u64,
}

impl Member {
    fn key(&self) -> (u64, &NodeId) {
        (self.distance, &self.node_id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Forming,
    Round1,
    Round2,
    Submitted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JoinOutcome {
    Created,
    Joined,
    Evicted(NodeId),
    Rejected,
    /// Duplicate join by a current member is a no-op.
    Duplicate,
}

#[derive(Clone, Debug)]
pub struct TempNetwork {
    pub event_id: Vec<u8>,
    pub capacity: usize,
    /// Sorted by descending priority (ascending distance, ties by id).
    pub members: Vec<Member>,
    pub leader: NodeId,
    pub phase: Phase,
}

impl TempNetwork {
    fn create(event_id: Vec<u8>, capacity: usize, member: Member) -> Self {
        TempNetwork {
            event_id,
            capacity,
            leader: member.node_id.clone(),
            members: vec![member],
            phase: Phase::Forming,
        }
    }

    pub fn contains(&self, node: &NodeId) -> bool {
        self.members.iter().any(|m| &m.node_id == node)
    }

    pub fn member_ids(&self) -> Vec<NodeId> {
        self.members.iter().map(|m| m.node_id.clone()).collect()
    }

    pub fn is_full(&self) -> bool {
        self.members.len() >= self.capacity
    }

    /// Distance of the lowest-priority member (the largest distance).
    pub fn worst_distance(&self) -> Option<u64> {
        self.members.last().map(|m| m.distance)
    }

    fn insert_sorted(&mut self, member: Member) {
        let at = self
            .members
            .binary_search_by(|m| m.key().cmp(&member.key()))
            .unwrap_or_else(|i| i);
        self.members.insert(at, member);
    }

    fn join(&mut self, member: Member) -> JoinOutcome {
        if self.contains(&member.node_id) {
            return JoinOutcome::Duplicate;
        }
        if !self.is_full() {
            self.insert_sorted(member);
            return JoinOutcome::Joined;
        }
        let worst = self.members.last().expect("full network").clone();
        if member.key() < worst.key() {
            self.members.pop();
            self.insert_sorted(member);
            if worst.node_id == self.leader {
                // Evicted leaders trigger re-election: highest priority leads.
                self.leader = self.members[0].node_id.clone();
            }
            JoinOutcome::Evicted(worst.node_id)
        } else {
            JoinOutcome::Rejected
        }
    }

    /// Promotes the highest-priority member not in `down` to leader. Returns
    /// the new leader when one exists.
    pub fn promote_leader(&mut self, down: &BTreeSet<NodeId>) -> Option<NodeId> {
        let next = self.members.iter().find(|m| !down.contains(&m.node_id))?;
        self.leader = next.node_id.clone();
        Some(self.leader.clone())
    }
}

/// Creates the network on first contact or joins an existing one, enforcing
/// the capacity and priority-eviction rules.
pub fn join_network(
    net: Option<TempNetwork>,
    event_id: &[u8],
    capacity: usize,
    node_id: NodeId,
    distance: u64,
) -> (TempNetwork, JoinOutcome) {
    let member = Member { node_id, distance };
    match net {
        None => (
            TempNetwork::create(event_id.to_vec(), capacity, member),
            JoinOutcome::Created,
        ),
        Some(mut n) => {
            let outcome = n.join(member);
            (n, outcome)
        }
    }
}

/// Majority quorum over the full membership.
pub fn quorum(member_count: usize) -> usize {
    member_count / 2 + 1
}

/// Deduplicates by submitter (keeping the highest-priority claim), sorts by
/// descending priority and truncates to `t`. This is the canonical view a
/// leader proposes for round 1.
pub fn dedupe_sort_truncate(results: &[TimedResult], t: usize) -> Vec<TimedResult> {
    let mut best: BTreeMap<&NodeId, &TimedResult> = BTreeMap::new();
    for r in results {
        best.entry(&r.node_id)
            .and_modify(|cur| {
                if (r.priority.distance, &r.node_id) < (cur.priority.distance, &cur.node_id) {
                    *cur = r;
                }
            })
            .or_insert(r);
    }
    let mut out: Vec<TimedResult> = best.into_values().cloned().collect();
    out.sort_by(|a, b| {
        (a.priority.distance, &a.node_id).cmp(&(b.priority.distance, &b.node_id))
    });
    out.truncate(t);
    out
}

/// Canonical byte payload for a result set; members compare these for
/// byte-equal agreement at the end of each round.
pub fn canonical_results_payload(results: &[TimedResult]) -> Vec<u8> {
    let mut m = Vec::new();
    m.extend_from_slice(&(results.len() as u32).to_be_bytes());
    for r in results {
        m.extend_from_slice(&(r.node_id.as_bytes().len() as u32).to_be_bytes());
        m.extend_from_slice(r.node_id.as_bytes());
        m.extend_from_slice(&r.value.to_bits().to_be_bytes());
        m.extend_from_slice(&r.timestamp.as_micros().to_be_bytes());
        m.extend_from_slice(&r.priority.distance.to_be_bytes());
    }
    m
}

/// Round 1: all surviving members adopt the leader's proposal. `views` holds
/// the local views of the responsive members and must cover a majority of
/// the membership, leader included.
pub fn run_round1(
    net: &TempNetwork,
    views: &BTreeMap<NodeId, Vec<TimedResult>>,
    t: usize,
) -> Result<Vec<TimedResult>> {
    if views.len() < quorum(net.members.len()) || !views.contains_key(&net.leader) {
        return Err(Error::ConsensusAborted {
            responsive: views.len(),
            members: net.members.len(),
        });
    }
    Ok(dedupe_sort_truncate(&views[&net.leader], t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum AggregationStrategy {
    #[default]
    Median,
    Mean,
}

impl fmt::Display for AggregationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationStrategy::Median => f.write_str("median"),
            AggregationStrategy::Mean => f.write_str("mean"),
        }
    }
}

impl std::str::FromStr for AggregationStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(AggregationStrategy::Median),
            "mean" => Ok(AggregationStrategy::Mean),
            other => Err(Error::InvalidConfig(format!("unknown strategy {other:?}"))),
        }
    }
}

pub fn aggregate_value(values: &[f64], strategy: AggregationStrategy) -> f64 {
    debug_assert!(!values.is_empty());
    match strategy {
        AggregationStrategy::Mean => values.iter().sum::<f64>() / values.len() as f64,
        AggregationStrategy::Median => median(values),
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Index `i` is an outlier iff `|values[i] - median| > max(eps_abs, k * MAD)`
/// with `eps_abs = 1e-6 * |median| + 1e-9` and `k = 3`. MAD is the median
/// absolute deviation.
pub fn detect_outliers(values: &[f64]) -> BTreeSet<usize> {
    debug_assert!(!values.is_empty());
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let mad = median(&deviations);
    let threshold = (1e-6 * med.abs() + 1e-9).max(K_MAD * mad);
    deviations
        .iter()
        .enumerate()
        .filter(|(_, &d)| d > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// Final per-task outcome written to the message contract.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregationResult {
    pub event_id: String,
    pub value: f64,
    pub strategy: AggregationStrategy,
    /// Nodes whose values entered the aggregate (the filtered set).
    pub contributors: BTreeSet<NodeId>,
    /// One flag per committee member: false when dropped by the filter,
    /// judged an outlier, or failed reveal.
    pub correct_flags: BTreeMap<NodeId, bool>,
    /// Seconds from event post to finalize.
    pub response_time: f64,
}

/// Round 2: aggregates the filtered consensus set and flags correctness for
/// every committee member. `committee` lists the members whose service this
/// task counts as (flags default to incorrect for members absent from the
/// filtered set).
pub fn run_round2_and_aggregate(
    event_id: &str,
    committee: &[NodeId],
    filtered: &[TimedResult],
    strategy: AggregationStrategy,
    response_time: f64,
) -> Result<AggregationResult> {
    if filtered.is_empty() {
        return Err(Error::EmptyResults);
    }
    let values: Vec<f64> = filtered.iter().map(|r| r.value).collect();
    let value = aggregate_value(&values, strategy);
    let outliers = detect_outliers(&values);
    let outlier_nodes: BTreeSet<&NodeId> =
        outliers.iter().map(|&i| &filtered[i].node_id).collect();
    let contributors: BTreeSet<NodeId> =
        filtered.iter().map(|r| r.node_id.clone()).collect();
    let correct_flags: BTreeMap<NodeId, bool> = committee
        .iter()
        .map(|id| {
            let ok = contributors.contains(id) && !outlier_nodes.contains(id);
            (id.clone(), ok)
        })
        .collect();
    Ok(AggregationResult {
        event_id: event_id.to_owned(),
        value,
        strategy,
        contributors,
        correct_flags,
        response_time,
    })
}
