//! Keyed-hash verifiable randomness for the simulator.
//!
//! The construction is deliberately simple: `value` is the first 8 bytes of
//! `H(sk || input)` interpreted big-endian and `proof` is
//! `H(sk || input || "proof")`. Public verifiability is stood in for by a
//! key registry that maps registered public keys back to their secrets, so
//! a verifier recomputes the output and compares. The interface is the usual
//! setup/generate/verify triad and is swappable for a real elliptic-curve
//! VRF without touching callers.
//!
//! `hash_to_ring` is the shared hash whose 64-bit range is the consistent
//! hash ring used by node selection.

use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt;

pub const KEY_LEN: usize = 32;

/// Concatenating SHA-256 over the given parts.
pub fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SecretKey(pub(crate) [u8; KEY_LEN]);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey(pub(crate) [u8; KEY_LEN]);

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl SecretKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        SecretKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    /// Lowercase hex, the serialization used in scenario snapshots.
    pub fn to_hex(&self) -> String {
        hex(&self.0)
    }
}

impl PublicKey {
    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex(&self.0)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SecretKey(..)")
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", self.to_hex())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub secret_key: SecretKey,
    pub public_key: PublicKey,
}

/// Derives the public key from a secret key. Pure function, so equal secrets
/// always map to the same public key.
pub fn public_key_of(sk: &SecretKey) -> PublicKey {
    PublicKey(digest(&[b"oraclenet.vrf.pk", &sk.0]))
}

/// Deterministic key generation from a 64-bit seed.
pub fn setup(rng_seed: u64) -> KeyPair {
    let sk = SecretKey(digest(&[b"oraclenet.vrf.sk", &rng_seed.to_be_bytes()]));
    KeyPair { secret_key: sk, public_key: public_key_of(&sk) }
}

/// Derives a per-event temporary keypair for commit-reveal submissions.
pub fn derive_temp_keypair(sk: &SecretKey, event_id: &[u8], attempt: u32) -> KeyPair {
    let tmp = SecretKey(digest(&[
        b"oraclenet.vrf.temp",
        &sk.0,
        event_id,
        &attempt.to_be_bytes(),
    ]));
    KeyPair { secret_key: tmp, public_key: public_key_of(&tmp) }
}

/// A VRF output: a 64-bit ring coordinate plus its proof.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct VrfOutput {
    pub value: u64,
    pub proof: [u8; 32],
}

impl fmt::Debug for VrfOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VrfOutput {{ value: {}, proof: {} }}", self.value, hex(&self.proof))
    }
}

impl VrfOutput {
    /// Canonical 40-byte encoding: value (big-endian) followed by the proof.
    /// This doubles as the deterministic signature `g` over the input.
    pub fn signature_bytes(&self) -> [u8; 40] {
        let mut out = [0u8; 40];
        out[..8].copy_from_slice(&self.value.to_be_bytes());
        out[8..].copy_from_slice(&self.proof);
        out
    }
}

/// Deterministic VRF evaluation under `sk`.
pub fn generate(sk: &SecretKey, input: &[u8]) -> VrfOutput {
    let d = digest(&[&sk.0, input]);
    let value = u64::from_be_bytes(d[..8].try_into().expect("8 bytes"));
    let proof = digest(&[&sk.0, input, b"proof"]);
    VrfOutput { value, proof }
}

/// Registry of known public keys. Stands in for public verifiability: a
/// verifier looks the secret up and recomputes the claimed output.
#[derive(Default, Clone)]
pub struct KeyRegistry {
    keys: HashMap<PublicKey, SecretKey>,
}

impl KeyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, pair: &KeyPair) {
        self.keys.insert(pair.public_key, pair.secret_key);
    }

    pub fn contains(&self, pk: &PublicKey) -> bool {
        self.keys.contains_key(pk)
    }

    /// Accepts exactly the outputs of `generate` under the secret matching
    /// `pk`; any altered value, proof, input or mismatched key rejects.
    pub fn verify(&self, pk: &PublicKey, input: &[u8], output: &VrfOutput) -> bool {
        match self.keys.get(pk) {
            Some(sk) => generate(sk, input) == *output,
            None => false,
        }
    }
}

/// Shared ring hash: first 8 bytes of SHA-256, big-endian. Full 64-bit range.
pub fn hash_to_ring(data: &[u8]) -> u64 {
    let d = digest(&[data]);
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn setup_is_deterministic_and_seed_separated() {
        assert_eq!(setup(7), setup(7));
        assert_ne!(setup(7).public_key, setup(8).public_key);
        assert_ne!(setup(7).secret_key, setup(8).secret_key);
    }

    #[test]
    fn generate_verify_round_trip() {
        let mut reg = KeyRegistry::new();
        for seed in 0..16u64 {
            let kp = setup(seed);
            reg.register(&kp);
            let msg = format!("message-{seed}");
            let out = generate(&kp.secret_key, msg.as_bytes());
            assert_eq!(out, generate(&kp.secret_key, msg.as_bytes()));
            assert!(reg.verify(&kp.public_key, msg.as_bytes(), &out));
        }
    }

    #[test]
    fn tampered_outputs_reject() {
        let mut reg = KeyRegistry::new();
        let kp = setup(42);
        let other = setup(43);
        reg.register(&kp);
        reg.register(&other);
        let input = b"tamper-me";
        let honest = generate(&kp.secret_key, input);

        let mut bumped = honest;
        bumped.value = bumped.value.wrapping_add(1);
        assert!(!reg.verify(&kp.public_key, input, &bumped));

        let mut flipped = honest;
        flipped.proof[0] ^= 0x01;
        assert!(!reg.verify(&kp.public_key, input, &flipped));

        assert!(!reg.verify(&kp.public_key, b"other-input", &honest));
        assert!(!reg.verify(&other.public_key, input, &honest));

        // Uniqueness: a mutated value with the honest proof always rejects.
        let forged = VrfOutput { value: honest.value ^ 0xdead, proof: honest.proof };
        assert!(!reg.verify(&kp.public_key, input, &forged));
    }

    #[test]
    fn unregistered_key_rejects() {
        let reg = KeyRegistry::new();
        let kp = setup(1);
        let out = generate(&kp.secret_key, b"x");
        assert!(!reg.verify(&kp.public_key, b"x", &out));
    }

    #[test]
    fn hash_to_ring_golden_and_deterministic() {
        // Golden value for the empty input, frozen from the reference hash
        // (first 8 bytes of SHA-256 of the empty string, big-endian).
        assert_eq!(hash_to_ring(b""), 16406829232824261652);
        assert_eq!(hash_to_ring(b"abc"), hash_to_ring(b"abc"));
        assert_ne!(hash_to_ring(b"abc"), hash_to_ring(b"abd"));
    }

    #[test]
    fn single_bit_flips_change_the_value() {
        // Avalanche oracle: 10^4 random single-bit flips, zero collisions.
        let kp = setup(99);
        let mut collisions = 0usize;
        for i in 0..10_000u64 {
            let mut msg = digest(&[b"avalanche", &i.to_be_bytes()]).to_vec();
            let base = generate(&kp.secret_key, &msg).value;
            let bit = (i % 256) as usize;
            msg[bit / 8] ^= 1 << (bit % 8);
            if generate(&kp.secret_key, &msg).value == base {
                collisions += 1;
            }
        }
        assert_eq!(collisions, 0);
    }

    fn chi_square_uniform_256(samples: impl Iterator<Item = u64>) -> f64 {
        let mut buckets = [0u64; 256];
        let mut n = 0u64;
        for v in samples {
            buckets[(v >> 56) as usize] += 1;
            n += 1;
        }
        let expected = n as f64 / 256.0;
        buckets
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum()
    }

    #[test]
    fn vrf_values_pass_uniformity_chi_square() {
        let kp = setup(7);
        let stat = chi_square_uniform_256(
            (0..100_000u64).map(|i| generate(&kp.secret_key, &i.to_be_bytes()).value),
        );
        // 255 degrees of freedom, significance 0.001.
        let crit = ChiSquared::new(255.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit, "chi2 {stat} >= {crit}");
    }

    #[test]
    fn ring_hash_passes_uniformity_chi_square() {
        let stat = chi_square_uniform_256(
            (0..100_000u64).map(|i| hash_to_ring(&digest(&[b"ring", &i.to_be_bytes()]))),
        );
        let crit = ChiSquared::new(255.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit, "chi2 {stat} >= {crit}");
    }

    #[test]
    fn temp_keypairs_are_per_event_and_deterministic() {
        let kp = setup(3);
        let a = derive_temp_keypair(&kp.secret_key, b"q1", 0);
        let b = derive_temp_keypair(&kp.secret_key, b"q1", 0);
        let c = derive_temp_keypair(&kp.secret_key, b"q2", 0);
        let d = derive_temp_keypair(&kp.secret_key, b"q1", 1);
        assert_eq!(a, b);
        assert_ne!(a.public_key, c.public_key);
        assert_ne!(a.public_key, d.public_key);
        assert_eq!(a.public_key, public_key_of(&a.secret_key));
    }
}
