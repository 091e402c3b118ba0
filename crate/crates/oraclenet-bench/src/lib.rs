//! Shared fixtures for the pipeline benchmarks.

use oraclenet_core::selection::{compute_anchor, compute_ring_priority, EventAnchor, RingPriority};
use oraclenet_core::types::NodeId;
use oraclenet_core::vrf::{setup, KeyPair};

pub fn anchor(event: u64) -> EventAnchor {
    compute_anchor(format!("bench-{event}").as_bytes(), b"beacon").unwrap()
}

pub fn keys(n: usize) -> Vec<KeyPair> {
    (0..n).map(|i| setup(0xbe7c + i as u64)).collect()
}

pub fn claims(keys: &[KeyPair], anchor: &EventAnchor, reputation: f64) -> Vec<RingPriority> {
    keys.iter()
        .enumerate()
        .map(|(i, kp)| {
            compute_ring_priority(&kp.secret_key, NodeId::nth(i), anchor, reputation).unwrap()
        })
        .collect()
}
