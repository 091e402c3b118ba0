//! Latency sampling for the simulated network.
//!
//! Population latencies are normal with a 1 ms truncation floor. Each node
//! carries a fixed mean drawn once from the population (heterogeneous
//! devices keep stable relative speeds) plus per-request jitter at a quarter
//! of the population sigma. Short peer-to-peer hops (acknowledgements,
//! submissions) use their own, much smaller scale.

use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Truncation floor: no latency below one millisecond.
pub const LATENCY_FLOOR_S: f64 = 0.001;

/// One draw from N(mean, std^2), truncated below at the floor. A zero std
/// yields exactly the mean (still floored).
pub fn sample_latency(mean: f64, std: f64, rng: &mut impl Rng) -> f64 {
    debug_assert!(mean > 0.0, "latency mean must be positive");
    if std <= 0.0 {
        return mean.max(LATENCY_FLOOR_S);
    }
    let normal = Normal::new(mean, std).expect("valid normal");
    normal.sample(rng).max(LATENCY_FLOOR_S)
}

/// Fixed per-node latency profile.
#[derive(Clone, Copy, Debug)]
pub struct NodeLatency {
    pub mean: f64,
    pub jitter_std: f64,
}

impl NodeLatency {
    /// Draws the node's fixed mean from the population distribution.
    pub fn draw(population_mean: f64, population_std: f64, jitter_divisor: f64, rng: &mut impl Rng) -> Self {
        let mean = sample_latency(population_mean, population_std, rng);
        let jitter_std = if jitter_divisor > 0.0 { population_std / jitter_divisor } else { 0.0 };
        NodeLatency { mean, jitter_std }
    }

    /// Latency of one request from this node.
    pub fn request_latency(&self, rng: &mut impl Rng) -> f64 {
        sample_latency(self.mean, self.jitter_std, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn zero_sigma_returns_the_mean_exactly() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_latency(0.8, 0.0, &mut rng), 0.8);
        }
    }

    #[test]
    fn moments_match_at_reference_parameters() {
        // 10^5 draws at mu = 1.0, sigma = 0.2: sample mean within 1.0 +/- 0.01
        // and sample std within 0.2 +/- 0.01.
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_latency(1.0, 0.2, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 0.2).abs() < 0.01, "std {}", var.sqrt());
    }

    #[test]
    fn the_floor_is_never_crossed() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            assert!(sample_latency(0.002, 0.05, &mut rng) >= LATENCY_FLOOR_S);
        }
    }

    #[test]
    fn node_profiles_are_stable_and_jittered() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let profile = NodeLatency::draw(1.0, 0.3, 4.0, &mut rng);
        assert!((profile.jitter_std - 0.075).abs() < 1e-12);
        let a = profile.request_latency(&mut rng);
        let b = profile.request_latency(&mut rng);
        assert_ne!(a, b);
        assert!(a > 0.0 && b > 0.0);
    }
}
