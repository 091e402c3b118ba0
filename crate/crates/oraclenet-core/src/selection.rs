//! Hash-ring node selection.
//!
//! Each request event is anchored on a 2^64 ring at
//! `hash_to_ring(event_id || beacon)`. A node derives a deterministic
//! signature over the same bytes with its secret key, expands it into
//! `ceil(reputation)` ring positions, and its priority for the event is the
//! inverse of the smallest clockwise distance from any of those positions to
//! the anchor. Distances stay exact unsigned integers; all ordering uses the
//! integer distance (smaller wins), never the floating-point priority.

use crate::error::{Error, Result};
use crate::types::NodeId;
use crate::vrf::{self, KeyRegistry, PublicKey, SecretKey, VrfOutput};

/// Where a request event lands on the ring, reproducible by any party.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventAnchor {
    pub event_id: Vec<u8>,
    pub beacon: Vec<u8>,
    pub anchor: u64,
}

impl EventAnchor {
    /// The byte string hashed to the anchor and signed for positions.
    pub fn input_bytes(&self) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.event_id.len() + self.beacon.len());
        v.extend_from_slice(&self.event_id);
        v.extend_from_slice(&self.beacon);
        v
    }
}

pub fn compute_anchor(event_id: &[u8], beacon: &[u8]) -> Result<EventAnchor> {
    if event_id.is_empty() {
        return Err(Error::EmptyEventId);
    }
    let mut input = Vec::with_capacity(event_id.len() + beacon.len());
    input.extend_from_slice(event_id);
    input.extend_from_slice(beacon);
    Ok(EventAnchor {
        event_id: event_id.to_vec(),
        beacon: beacon.to_vec(),
        anchor: vrf::hash_to_ring(&input),
    })
}

/// Clockwise ring distance from the anchor to a position on the 2^64 ring.
pub fn clockwise_distance(anchor: u64, position: u64) -> u64 {
    position.wrapping_sub(anchor)
}

/// Number of ring positions a reputation value grants.
pub fn ring_positions(reputation: f64) -> u32 {
    reputation.ceil() as u32
}

/// A node's ring positions, winning position and distance for one event,
/// together with the proof that regenerates them.
#[derive(Clone, Debug, PartialEq)]
pub struct RingPriority {
    pub node_id: NodeId,
    pub positions: Vec<u64>,
    pub winning_position: u64,
    pub distance: u64,
    pub proof: VrfOutput,
}

impl RingPriority {
    /// Priority as the rational 1 / max(distance, 1). Comparisons elsewhere
    /// use the integer distance; this is for display and export only.
    pub fn priority(&self) -> f64 {
        1.0 / self.distance.max(1) as f64
    }

    /// Canonical audit-log record: node, winning position, distance, proof.
    pub fn canonical_record(&self) -> String {
        let sig = self.proof.signature_bytes();
        let hex: String = sig.iter().map(|b| format!("{b:02x}")).collect();
        format!("{},{},{},{}", self.node_id, self.winning_position, self.distance, hex)
    }

    /// Ordering key: ascending distance is descending priority; ties break
    /// by ascending node id.
    fn rank_key(&self) -> (u64, &NodeId) {
        (self.distance, &self.node_id)
    }
}

fn positions_from_signature(sig: &[u8; 40], count: u32) -> Vec<u64> {
    (1..=count as u64)
        .map(|k| {
            let mut input = Vec::with_capacity(48);
            input.extend_from_slice(sig);
            input.extend_from_slice(&k.to_be_bytes());
            vrf::hash_to_ring(&input)
        })
        .collect()
}

fn winning(anchor: u64, positions: &[u64]) -> (u64, u64) {
    positions
        .iter()
        .map(|&p| (clockwise_distance(anchor, p), p))
        .min()
        .expect("positions nonempty")
}

/// Computes a node's ring priority for an event. `reputation` must already be
/// clamped to at least 1.
pub fn compute_ring_priority(
    sk: &SecretKey,
    node_id: NodeId,
    anchor: &EventAnchor,
    reputation: f64,
) -> Result<RingPriority> {
    if !(reputation >= 1.0) {
        return Err(Error::ReputationBelowFloor(reputation));
    }
    let proof = vrf::generate(sk, &anchor.input_bytes());
    let positions = positions_from_signature(&proof.signature_bytes(), ring_positions(reputation));
    let (distance, winning_position) = winning(anchor.anchor, &positions);
    Ok(RingPriority { node_id, positions, winning_position, distance, proof })
}

/// Checks a published claim: the proof must verify under `pk`, every position
/// must regenerate from the proof, and the winning position and distance must
/// be consistent with the claimed position count.
pub fn verify_ring_priority(
    registry: &KeyRegistry,
    pk: &PublicKey,
    anchor: &EventAnchor,
    claim: &RingPriority,
) -> bool {
    if claim.positions.is_empty() {
        return false;
    }
    if !registry.verify(pk, &anchor.input_bytes(), &claim.proof) {
        return false;
    }
    let expected =
        positions_from_signature(&claim.proof.signature_bytes(), claim.positions.len() as u32);
    if expected != claim.positions {
        return false;
    }
    let (distance, winning_position) = winning(anchor.anchor, &expected);
    distance == claim.distance && winning_position == claim.winning_position
}

/// Returns the `min(t, len)` highest-priority claims, descending priority,
/// ties broken by ascending node id. Deterministic in the input set.
pub fn select_top_t(claims: &[RingPriority], t: usize) -> Vec<RingPriority> {
    select_top_t_counted(claims, t, &mut 0)
}

/// As [`select_top_t`], surfacing the number of comparisons performed so the
/// harness can report machine-independent selection cost.
pub fn select_top_t_counted(
    claims: &[RingPriority],
    t: usize,
    comparisons: &mut u64,
) -> Vec<RingPriority> {
    let mut ranked: Vec<&RingPriority> = claims.iter().collect();
    ranked.sort_by(|a, b| {
        *comparisons += 1;
        a.rank_key().cmp(&b.rank_key())
    });
    ranked.into_iter().take(t).cloned().collect()
}

/// Deterministic data-source assignment: winning position modulo the number
/// of sources, verifiable by anyone holding the claim.
pub fn assign_data_source(claim: &RingPriority, source_count: usize) -> Result<usize> {
    if source_count == 0 {
        return Err(Error::ZeroSourceCount);
    }
    Ok((claim.winning_position % source_count as u64) as usize)
}
