//! Commit-reveal data collection with t-of-n partial signatures.
//!
//! A responding node seals its value (and the data-source attestation that
//! vouches for it) under a per-event temporary key and broadcasts the sealed
//! envelope together with a partial signature over the event id. Once `t`
//! distinct submitters have broadcast, anyone can form the group signature;
//! only then do nodes reveal their temporary secret keys, letting everyone
//! decrypt. Copying another node's ciphertext is futile: decryption under the
//! copier's own revealed key fails the integrity tag.
//!
//! The broadcast envelope exposes only the timestamp, priority claim and the
//! commitment to the attestation; the value and the attestation itself stay
//! inside the ciphertext until reveal.

use crate::error::{Error, Result};
use crate::filtering::TimedResult;
use crate::selection::{self, EventAnchor, RingPriority};
use crate::types::{NodeId, SimTime};
use crate::vrf::{self, KeyRegistry, PublicKey, SecretKey, VrfOutput};
use std::collections::BTreeMap;

/// Signed statement from a (simulated) data source that `value` was served
/// at `issued_at`. Stands in for a TLS-session proof.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceAttestation {
    pub source_id: String,
    pub value: f64,
    pub issued_at: SimTime,
    pub signature: VrfOutput,
}

impl SourceAttestation {
    fn message_bytes(source_id: &str, value: f64, issued_at: SimTime) -> Vec<u8> {
        let mut m = Vec::new();
        m.extend_from_slice(b"oraclenet.attestation");
        m.extend_from_slice(&(source_id.len() as u32).to_be_bytes());
        m.extend_from_slice(source_id.as_bytes());
        m.extend_from_slice(&value.to_bits().to_be_bytes());
        m.extend_from_slice(&issued_at.as_micros().to_be_bytes());
        m
    }

    pub fn issue(source_sk: &SecretKey, source_id: &str, value: f64, issued_at: SimTime) -> Self {
        let msg = Self::message_bytes(source_id, value, issued_at);
        SourceAttestation {
            source_id: source_id.to_owned(),
            value,
            issued_at,
            signature: vrf::generate(source_sk, &msg),
        }
    }

    pub fn verify(&self, registry: &KeyRegistry, source_pk: &PublicKey) -> bool {
        let msg = Self::message_bytes(&self.source_id, self.value, self.issued_at);
        registry.verify(source_pk, &msg, &self.signature)
    }

    /// Canonical encoding, sealed inside the envelope ciphertext.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut m = Self::message_bytes(&self.source_id, self.value, self.issued_at);
        m.extend_from_slice(&self.signature.signature_bytes());
        m
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Option<Self> {
        let tag = b"oraclenet.attestation";
        if bytes.len() < tag.len() + 4 {
            return None;
        }
        if &bytes[..tag.len()] != tag {
            return None;
        }
        let mut at = tag.len();
        let id_len = u32::from_be_bytes(bytes[at..at + 4].try_into().ok()?) as usize;
        at += 4;
        if bytes.len() != at + id_len + 8 + 8 + 40 {
            return None;
        }
        let source_id = String::from_utf8(bytes[at..at + id_len].to_vec()).ok()?;
        at += id_len;
        let value = f64::from_bits(u64::from_be_bytes(bytes[at..at + 8].try_into().ok()?));
        at += 8;
        let issued_at = SimTime::from_micros(u64::from_be_bytes(bytes[at..at + 8].try_into().ok()?));
        at += 8;
        let sig_value = u64::from_be_bytes(bytes[at..at + 8].try_into().ok()?);
        let proof: [u8; 32] = bytes[at + 8..at + 40].try_into().ok()?;
        Some(SourceAttestation {
            source_id,
            value,
            issued_at,
            signature: VrfOutput { value: sig_value, proof },
        })
    }
}

/// Sealed submission broadcast during collection. Field order is the
/// canonical wire order used by `canonical_bytes`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackEnvelope {
    pub event_id: Vec<u8>,
    pub submitter: NodeId,
    pub temp_public_key: PublicKey,
    pub ciphertext: Vec<u8>,
    pub integrity_tag: [u8; 32],
    pub partial_signature: VrfOutput,
    pub attestation_commitment: [u8; 32],
    pub timestamp: SimTime,
    pub priority_claim: RingPriority,
}

impl FeedbackEnvelope {
    /// Canonical byte record (big-endian integers, length-prefixed fields) so
    /// audit logs are replayable.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut m = Vec::new();
        m.extend_from_slice(&(self.event_id.len() as u32).to_be_bytes());
        m.extend_from_slice(&self.event_id);
        m.extend_from_slice(&(self.submitter.as_bytes().len() as u32).to_be_bytes());
        m.extend_from_slice(self.submitter.as_bytes());
        m.extend_from_slice(self.temp_public_key.as_bytes());
        m.extend_from_slice(&(self.ciphertext.len() as u32).to_be_bytes());
        m.extend_from_slice(&self.ciphertext);
        m.extend_from_slice(&self.integrity_tag);
        m.extend_from_slice(&self.partial_signature.signature_bytes());
        m.extend_from_slice(&self.attestation_commitment);
        m.extend_from_slice(&self.timestamp.as_micros().to_be_bytes());
        m.extend_from_slice(&self.priority_claim.proof.signature_bytes());
        m.extend_from_slice(&(self.priority_claim.positions.len() as u32).to_be_bytes());
        m
    }
}

fn keystream(sk_temp: &SecretKey, event_id: &[u8], len: usize) -> Vec<u8> {
    let key = vrf::digest(&[sk_temp.as_bytes(), event_id]);
    let mut out = Vec::with_capacity(len);
    let mut block = 0u64;
    while out.len() < len {
        let chunk = vrf::digest(&[&key, &block.to_be_bytes()]);
        out.extend_from_slice(&chunk);
        block += 1;
    }
    out.truncate(len);
    out
}

fn xor_stream(sk_temp: &SecretKey, event_id: &[u8], data: &[u8]) -> Vec<u8> {
    keystream(sk_temp, event_id, data.len())
        .iter()
        .zip(data)
        .map(|(k, d)| k ^ d)
        .collect()
}

fn integrity_tag(sk_temp: &SecretKey, value: f64) -> [u8; 32] {
    vrf::digest(&[sk_temp.as_bytes(), &value.to_bits().to_be_bytes()])
}

fn partial_sig_message(event_id: &[u8]) -> Vec<u8> {
    let mut m = Vec::with_capacity(event_id.len() + 21);
    m.extend_from_slice(b"oraclenet.partial-sig");
    m.extend_from_slice(event_id);
    m
}

/// Seals a feedback value. The caller's attestation and priority claim are
/// checked before sealing; an invalid input is rejected rather than sealed.
#[allow(clippy::too_many_arguments)]
pub fn seal_feedback(
    registry: &KeyRegistry,
    source_pk: &PublicKey,
    node_pk: &PublicKey,
    anchor: &EventAnchor,
    sk_temp: &SecretKey,
    submitter: NodeId,
    value: f64,
    timestamp: SimTime,
    attestation: &SourceAttestation,
    priority_claim: RingPriority,
) -> Result<FeedbackEnvelope> {
    if !attestation.verify(registry, source_pk) {
        return Err(Error::BadAttestation(attestation.source_id.clone()));
    }
    if !selection::verify_ring_priority(registry, node_pk, anchor, &priority_claim) {
        return Err(Error::BadPriorityClaim(submitter));
    }
    let event_id = anchor.event_id.clone();
    let mut plaintext = value.to_bits().to_be_bytes().to_vec();
    plaintext.extend_from_slice(&attestation.canonical_bytes());
    let ciphertext = xor_stream(sk_temp, &event_id, &plaintext);
    Ok(FeedbackEnvelope {
        attestation_commitment: vrf::digest(&[&attestation.canonical_bytes()]),
        integrity_tag: integrity_tag(sk_temp, value),
        partial_signature: vrf::generate(sk_temp, &partial_sig_message(&event_id)),
        temp_public_key: vrf::public_key_of(sk_temp),
        event_id,
        submitter,
        ciphertext,
        timestamp,
        priority_claim,
    })
}

/// Group signature over the partial signatures of at least `t` distinct
/// submitters for one event.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSignature {
    pub event_id: Vec<u8>,
    pub contributing_nodes: Vec<NodeId>,
    pub signature: [u8; 32],
}

#[derive(Clone, Debug, PartialEq)]
pub enum GroupSignatureStatus {
    Formed(GroupSignature),
    NotYet,
}

/// Forms the group signature once `t` distinct submitters are present: the
/// canonical hash of the first `t` partial signatures in priority order
/// (ascending distance, ties by node id). Below the threshold returns NotYet.
pub fn try_form_group_signature(
    envelopes: &[FeedbackEnvelope],
    t: usize,
) -> Result<GroupSignatureStatus> {
    if envelopes.is_empty() {
        return Ok(GroupSignatureStatus::NotYet);
    }
    let event_id = &envelopes[0].event_id;
    for e in envelopes {
        if &e.event_id != event_id {
            return Err(Error::MixedEventIds(
                String::from_utf8_lossy(event_id).into_owned(),
                String::from_utf8_lossy(&e.event_id).into_owned(),
            ));
        }
    }
    let mut by_submitter: BTreeMap<&NodeId, &FeedbackEnvelope> = BTreeMap::new();
    for e in envelopes {
        by_submitter.entry(&e.submitter).or_insert(e);
    }
    if by_submitter.len() < t {
        return Ok(GroupSignatureStatus::NotYet);
    }
    let mut ranked: Vec<&FeedbackEnvelope> = by_submitter.into_values().collect();
    ranked.sort_by(|a, b| {
        (a.priority_claim.distance, &a.submitter).cmp(&(b.priority_claim.distance, &b.submitter))
    });
    ranked.truncate(t);

    let mut material = Vec::with_capacity(8 + t * 40);
    material.extend_from_slice(&(t as u64).to_be_bytes());
    for e in &ranked {
        material.extend_from_slice(&e.partial_signature.signature_bytes());
    }
    Ok(GroupSignatureStatus::Formed(GroupSignature {
        event_id: event_id.clone(),
        contributing_nodes: ranked.iter().map(|e| e.submitter.clone()).collect(),
        signature: vrf::digest(&[&material]),
    }))
}

/// Why a revealed envelope was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RevealFailure {
    KeyWithheld,
    WrongKeyBinding,
    IntegrityFailure,
    AttestationMismatch,
    BadAttestation,
    SourceMismatch,
}

pub struct RevealOutcome {
    pub results: Vec<TimedResult>,
    pub flagged: Vec<(NodeId, RevealFailure)>,
}

/// Looks up the registered key of a source by id.
pub type SourceKeyLookup<'a> = dyn Fn(&str) -> Option<&'a PublicKey> + 'a;

/// Decrypts every envelope whose key was revealed and whose contents check
/// out; the rest are dropped and flagged with the reason. The partial
/// signature is also checked here, now that the temporary key is known.
///
/// `source_count` and the per-envelope priority claim determine the data
/// source each node was assigned; an attestation from any other source is
/// rejected.
pub fn reveal_and_decrypt(
    envelopes: &[FeedbackEnvelope],
    group_sig: &GroupSignature,
    revealed_keys: &BTreeMap<NodeId, SecretKey>,
    registry: &KeyRegistry,
    source_pk_of: &SourceKeyLookup<'_>,
    source_ids: &[String],
) -> Result<RevealOutcome> {
    for e in envelopes {
        if e.event_id != group_sig.event_id {
            return Err(Error::MixedEventIds(
                String::from_utf8_lossy(&group_sig.event_id).into_owned(),
                String::from_utf8_lossy(&e.event_id).into_owned(),
            ));
        }
    }
    let mut results = Vec::new();
    let mut flagged = Vec::new();
    for e in envelopes {
        match open_envelope(e, revealed_keys, registry, source_pk_of, source_ids) {
            Ok(r) => results.push(r),
            Err(f) => flagged.push((e.submitter.clone(), f)),
        }
    }
    Ok(RevealOutcome { results, flagged })
}

fn open_envelope(
    e: &FeedbackEnvelope,
    revealed_keys: &BTreeMap<NodeId, SecretKey>,
    registry: &KeyRegistry,
    source_pk_of: &SourceKeyLookup<'_>,
    source_ids: &[String],
) -> std::result::Result<TimedResult, RevealFailure> {
    let sk = revealed_keys.get(&e.submitter).ok_or(RevealFailure::KeyWithheld)?;
    if vrf::public_key_of(sk) != e.temp_public_key {
        return Err(RevealFailure::WrongKeyBinding);
    }
    if vrf::generate(sk, &partial_sig_message(&e.event_id)) != e.partial_signature {
        return Err(RevealFailure::WrongKeyBinding);
    }
    let plaintext = xor_stream(sk, &e.event_id, &e.ciphertext);
    if plaintext.len() < 8 {
        return Err(RevealFailure::IntegrityFailure);
    }
    let value = f64::from_bits(u64::from_be_bytes(plaintext[..8].try_into().unwrap()));
    if integrity_tag(sk, value) != e.integrity_tag {
        return Err(RevealFailure::IntegrityFailure);
    }
    let attestation = SourceAttestation::from_canonical_bytes(&plaintext[8..])
        .ok_or(RevealFailure::IntegrityFailure)?;
    if vrf::digest(&[&attestation.canonical_bytes()]) != e.attestation_commitment {
        return Err(RevealFailure::AttestationMismatch);
    }
    let source_pk = source_pk_of(&attestation.source_id).ok_or(RevealFailure::BadAttestation)?;
    if !attestation.verify(registry, source_pk) {
        return Err(RevealFailure::BadAttestation);
    }
    if attestation.value.to_bits() != value.to_bits() {
        return Err(RevealFailure::BadAttestation);
    }
    // The claim pins which source this node was assigned to.
    let assigned = selection::assign_data_source(&e.priority_claim, source_ids.len())
        .map_err(|_| RevealFailure::SourceMismatch)?;
    if source_ids.get(assigned).map(String::as_str) != Some(attestation.source_id.as_str()) {
        return Err(RevealFailure::SourceMismatch);
    }
    Ok(TimedResult {
        node_id: e.submitter.clone(),
        value,
        timestamp: e.timestamp,
        priority: e.priority_claim.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{compute_anchor, compute_ring_priority};
    use crate::vrf::{derive_temp_keypair, setup, KeyPair};

    struct Fixture {
        registry: KeyRegistry,
        anchor: EventAnchor,
        source_ids: Vec<String>,
        source_keys: Vec<KeyPair>,
        nodes: Vec<(NodeId, KeyPair)>,
    }

    impl Fixture {
        fn new(node_count: usize) -> Self {
            let mut registry = KeyRegistry::new();
            let anchor = compute_anchor(b"q-collect", b"beacon").unwrap();
            let source_keys: Vec<KeyPair> = (0..4).map(|i| setup(9000 + i)).collect();
            let source_ids: Vec<String> = (0..4).map(|i| format!("src-{i}")).collect();
            for kp in &source_keys {
                registry.register(kp);
            }
            let nodes: Vec<(NodeId, KeyPair)> = (0..node_count)
                .map(|i| {
                    let kp = setup(100 + i as u64);
                    registry.register(&kp);
                    (NodeId::nth(i), kp)
                })
                .collect();
            Fixture { registry, anchor, source_ids, source_keys, nodes }
        }

        fn envelope(&self, i: usize, value: f64) -> (FeedbackEnvelope, SecretKey) {
            let (id, kp) = &self.nodes[i];
            let claim =
                compute_ring_priority(&kp.secret_key, id.clone(), &self.anchor, 1.0).unwrap();
            let src = selection::assign_data_source(&claim, self.source_ids.len()).unwrap();
            let ts = SimTime::from_secs_f64(1.0 + i as f64 * 0.01);
            let att = SourceAttestation::issue(
                &self.source_keys[src].secret_key,
                &self.source_ids[src],
                value,
                ts,
            );
            let temp = derive_temp_keypair(&kp.secret_key, &self.anchor.event_id, 0);
            let env = seal_feedback(
                &self.registry,
                &self.source_keys[src].public_key,
                &kp.public_key,
                &self.anchor,
                &temp.secret_key,
                id.clone(),
                value,
                ts,
                &att,
                claim,
            )
            .unwrap();
            (env, temp.secret_key)
        }

        fn reveal(
            &self,
            envelopes: &[FeedbackEnvelope],
            sig: &GroupSignature,
            keys: &BTreeMap<NodeId, SecretKey>,
        ) -> RevealOutcome {
            let lookup = |id: &str| -> Option<&PublicKey> {
                self.source_ids
                    .iter()
                    .position(|s| s == id)
                    .map(|i| &self.source_keys[i].public_key)
            };
            reveal_and_decrypt(envelopes, sig, keys, &self.registry, &lookup, &self.source_ids)
                .unwrap()
        }
    }

    fn formed(envelopes: &[FeedbackEnvelope], t: usize) -> GroupSignature {
        match try_form_group_signature(envelopes, t).unwrap() {
            GroupSignatureStatus::Formed(g) => g,
            GroupSignatureStatus::NotYet => panic!("expected group signature"),
        }
    }

    #[test]
    fn seal_reveal_round_trip() {
        let fx = Fixture::new(3);
        let sealed: Vec<_> = (0..3).map(|i| fx.envelope(i, 10.0 + i as f64)).collect();
        let envelopes: Vec<_> = sealed.iter().map(|(e, _)| e.clone()).collect();
        let sig = formed(&envelopes, 3);
        let keys: BTreeMap<NodeId, SecretKey> = sealed
            .iter()
            .map(|(e, sk)| (e.submitter.clone(), *sk))
            .collect();
        let out = fx.reveal(&envelopes, &sig, &keys);
        assert!(out.flagged.is_empty());
        let mut values: Vec<f64> = out.results.iter().map(|r| r.value).collect();
        values.sort_by(f64::total_cmp);
        assert_eq!(values, vec![10.0, 11.0, 12.0]);
    }

    #[test]
    fn same_value_different_keys_yield_distinct_ciphertexts() {
        let fx = Fixture::new(2);
        let (a, _) = fx.envelope(0, 5.0);
        let (b, _) = fx.envelope(1, 5.0);
        assert_ne!(a.ciphertext[..8], b.ciphertext[..8]);
    }

    #[test]
    fn tampered_ciphertext_fails_integrity() {
        let fx = Fixture::new(3);
        let sealed: Vec<_> = (0..3).map(|i| fx.envelope(i, 1.0)).collect();
        let mut envelopes: Vec<_> = sealed.iter().map(|(e, _)| e.clone()).collect();
        envelopes[0].ciphertext[0] ^= 0xff;
        let sig = formed(&envelopes, 3);
        let keys: BTreeMap<NodeId, SecretKey> =
            sealed.iter().map(|(e, sk)| (e.submitter.clone(), *sk)).collect();
        let out = fx.reveal(&envelopes, &sig, &keys);
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.flagged.len(), 1);
        assert!(matches!(
            out.flagged[0].1,
            RevealFailure::IntegrityFailure | RevealFailure::AttestationMismatch
        ));
    }

    #[test]
    fn threshold_counts_distinct_submitters() {
        let fx = Fixture::new(4);
        let sealed: Vec<_> = (0..3).map(|i| fx.envelope(i, 1.0)).collect();
        let mut envelopes: Vec<_> = sealed.iter().map(|(e, _)| e.clone()).collect();

        // t-1 distinct submitters: not yet.
        assert_eq!(
            try_form_group_signature(&envelopes, 4).unwrap(),
            GroupSignatureStatus::NotYet
        );

        // A duplicate submitter does not count twice.
        envelopes.push(envelopes[0].clone());
        assert_eq!(
            try_form_group_signature(&envelopes, 4).unwrap(),
            GroupSignatureStatus::NotYet
        );

        // At the threshold.
        let (fourth, _) = fx.envelope(3, 1.0);
        envelopes.push(fourth);
        let sig = formed(&envelopes, 4);
        assert_eq!(sig.contributing_nodes.len(), 4);

        // Mixed event ids are a caller bug.
        let other_anchor = compute_anchor(b"other-q", b"beacon").unwrap();
        let mut foreign = envelopes[0].clone();
        foreign.event_id = other_anchor.event_id;
        envelopes.push(foreign);
        assert!(try_form_group_signature(&envelopes, 4).is_err());
    }

    #[test]
    fn withheld_key_flags_the_withholder() {
        let fx = Fixture::new(3);
        let sealed: Vec<_> = (0..3).map(|i| fx.envelope(i, 2.0)).collect();
        let envelopes: Vec<_> = sealed.iter().map(|(e, _)| e.clone()).collect();
        let sig = formed(&envelopes, 3);
        let keys: BTreeMap<NodeId, SecretKey> = sealed
            .iter()
            .skip(1)
            .map(|(e, sk)| (e.submitter.clone(), *sk))
            .collect();
        let out = fx.reveal(&envelopes, &sig, &keys);
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.flagged, vec![(NodeId::nth(0), RevealFailure::KeyWithheld)]);
    }

    #[test]
    fn copied_ciphertext_fails_under_the_copiers_key() {
        // A freeloader copies a victim's ciphertext, tag and commitment but
        // must reveal its own key; decryption then fails the integrity check.
        let fx = Fixture::new(3);
        let sealed: Vec<_> = (0..2).map(|i| fx.envelope(i, 7.5)).collect();
        let mut envelopes: Vec<_> = sealed.iter().map(|(e, _)| e.clone()).collect();

        let (copier_id, copier_kp) = &fx.nodes[2];
        let claim = compute_ring_priority(&copier_kp.secret_key, copier_id.clone(), &fx.anchor, 1.0)
            .unwrap();
        let temp = derive_temp_keypair(&copier_kp.secret_key, &fx.anchor.event_id, 0);
        let victim = &envelopes[0];
        let stolen = FeedbackEnvelope {
            event_id: victim.event_id.clone(),
            submitter: copier_id.clone(),
            temp_public_key: temp.public_key,
            ciphertext: victim.ciphertext.clone(),
            integrity_tag: victim.integrity_tag,
            partial_signature: vrf::generate(
                &temp.secret_key,
                &partial_sig_message(&victim.event_id),
            ),
            attestation_commitment: victim.attestation_commitment,
            timestamp: victim.timestamp,
            priority_claim: claim,
        };
        envelopes.push(stolen);

        let sig = formed(&envelopes, 3);
        let mut keys: BTreeMap<NodeId, SecretKey> =
            sealed.iter().map(|(e, sk)| (e.submitter.clone(), *sk)).collect();
        keys.insert(copier_id.clone(), temp.secret_key);

        let out = fx.reveal(&envelopes, &sig, &keys);
        assert_eq!(out.results.len(), 2);
        assert_eq!(out.flagged.len(), 1);
        assert_eq!(out.flagged[0].0, *copier_id);
        assert!(matches!(
            out.flagged[0].1,
            RevealFailure::IntegrityFailure | RevealFailure::AttestationMismatch
        ));
    }

    #[test]
    fn invalid_inputs_are_rejected_before_sealing() {
        let fx = Fixture::new(2);
        let (id, kp) = &fx.nodes[0];
        let claim = compute_ring_priority(&kp.secret_key, id.clone(), &fx.anchor, 1.0).unwrap();
        let src = selection::assign_data_source(&claim, fx.source_ids.len()).unwrap();
        let ts = SimTime::from_secs_f64(1.0);
        let temp = derive_temp_keypair(&kp.secret_key, &fx.anchor.event_id, 0);

        // Attestation signed by the wrong source key.
        let wrong_src = (src + 1) % fx.source_ids.len();
        let bad_att = SourceAttestation::issue(
            &fx.source_keys[wrong_src].secret_key,
            &fx.source_ids[src],
            1.0,
            ts,
        );
        assert!(seal_feedback(
            &fx.registry,
            &fx.source_keys[src].public_key,
            &kp.public_key,
            &fx.anchor,
            &temp.secret_key,
            id.clone(),
            1.0,
            ts,
            &bad_att,
            claim.clone(),
        )
        .is_err());

        // Claim that fails verification (inflated distance).
        let good_att = SourceAttestation::issue(
            &fx.source_keys[src].secret_key,
            &fx.source_ids[src],
            1.0,
            ts,
        );
        let mut bad_claim = claim;
        bad_claim.distance = bad_claim.distance.wrapping_sub(1);
        assert!(seal_feedback(
            &fx.registry,
            &fx.source_keys[src].public_key,
            &kp.public_key,
            &fx.anchor,
            &temp.secret_key,
            id.clone(),
            1.0,
            ts,
            &good_att,
            bad_claim,
        )
        .is_err());
    }

    #[test]
    fn ciphertexts_are_statistically_flat() {
        // Distinguisher proxy: across many seals of two fixed distinct
        // values, ciphertext bits are indistinguishable from fair coins.
        let fx = Fixture::new(1);
        let (id, kp) = &fx.nodes[0];
        let claim = compute_ring_priority(&kp.secret_key, id.clone(), &fx.anchor, 1.0).unwrap();
        let src = selection::assign_data_source(&claim, fx.source_ids.len()).unwrap();
        let mut ones = [0u64; 2];
        let mut bits = [0u64; 2];
        for (vi, value) in [0.0f64, 1e9].iter().enumerate() {
            for trial in 0..400u32 {
                let ts = SimTime::from_micros(1_000_000 + trial as u64);
                let att = SourceAttestation::issue(
                    &fx.source_keys[src].secret_key,
                    &fx.source_ids[src],
                    *value,
                    ts,
                );
                let temp = derive_temp_keypair(&kp.secret_key, &fx.anchor.event_id, trial);
                let env = seal_feedback(
                    &fx.registry,
                    &fx.source_keys[src].public_key,
                    &kp.public_key,
                    &fx.anchor,
                    &temp.secret_key,
                    id.clone(),
                    *value,
                    ts,
                    &att,
                    claim.clone(),
                )
                .unwrap();
                ones[vi] += env.ciphertext[..8].iter().map(|b| b.count_ones() as u64).sum::<u64>();
                bits[vi] += 64;
            }
        }
        for vi in 0..2 {
            let frac = ones[vi] as f64 / bits[vi] as f64;
            assert!((frac - 0.5).abs() < 0.02, "bit bias {frac}");
        }
        let gap = (ones[0] as f64 / bits[0] as f64 - ones[1] as f64 / bits[1] as f64).abs();
        assert!(gap < 0.03, "distinguishable bias {gap}");
    }
}
