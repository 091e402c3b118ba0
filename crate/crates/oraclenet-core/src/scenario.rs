//! Scenario configuration, scheme variants and the experiment runners.
//!
//! `SimConfig` mirrors the CLI flags and the flat TOML scenario-file format
//! field for field. `run_scenario` executes one end-to-end run; `run_matrix`
//! sweeps a parameter grid across variants and seed replications in parallel
//! and yields one CSV row per cell.

use crate::aggregation::AggregationStrategy;
use crate::error::{Error, Result};
use crate::metrics::{RunMetrics, RunRow};
use crate::simnet::{SimOutcome, Simulation};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// The four scheme variants compared by the experiments.
///
/// `NoReputation` forces every ring-position count to 1, `NoFilter` bypasses
/// the sliding-window filter (keeping all top-t), and `Baseline` does both:
/// VRF-random selection with no data filtering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SchemeVariant {
    Full,
    NoReputation,
    NoFilter,
    Baseline,
}

impl SchemeVariant {
    pub const ALL: [SchemeVariant; 4] = [
        SchemeVariant::Full,
        SchemeVariant::NoReputation,
        SchemeVariant::NoFilter,
        SchemeVariant::Baseline,
    ];

    /// Reputation-weighted ring positions, or one position per node.
    pub fn reputation_weighted(self) -> bool {
        matches!(self, SchemeVariant::Full | SchemeVariant::NoFilter)
    }

    /// Sliding-window filter active, or all top-t kept.
    pub fn filter_enabled(self) -> bool {
        matches!(self, SchemeVariant::Full | SchemeVariant::NoReputation)
    }

    pub fn label(self) -> &'static str {
        match self {
            SchemeVariant::Full => "full",
            SchemeVariant::NoReputation => "no-reputation",
            SchemeVariant::NoFilter => "no-filter",
            SchemeVariant::Baseline => "baseline",
        }
    }
}

impl fmt::Display for SchemeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchemeVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(SchemeVariant::Full),
            "no-reputation" => Ok(SchemeVariant::NoReputation),
            "no-filter" => Ok(SchemeVariant::NoFilter),
            "baseline" => Ok(SchemeVariant::Baseline),
            other => Err(Error::InvalidConfig(format!(
                "unknown variant {other:?} (expected full, no-reputation, no-filter or baseline)"
            ))),
        }
    }
}

/// Full experiment configuration. Defaults reproduce the reference setup:
/// 100 nodes, 10% malicious, committees of 10, a 1 s window, alpha 0.5 and
/// an acceptance threshold of 1, over 1000 tasks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Total number of oracle nodes (N).
    pub node_count: usize,
    /// Fraction of adversarial nodes (delta).
    pub malicious_fraction: f64,
    /// Nodes selected per task (t).
    pub committee_size: usize,
    /// Feedback timestamp window width in seconds (w).
    pub window_width_s: f64,
    /// Reputation speed/accuracy weight (alpha).
    pub alpha: f64,
    /// Minimum filtered count before aggregation proceeds (zeta).
    pub min_count: usize,
    /// Population latency mean / std in seconds (mu, sigma).
    pub latency_mean_s: f64,
    pub latency_std_s: f64,
    /// Per-request jitter std is latency_std_s / jitter_divisor.
    pub jitter_divisor: f64,
    pub task_count: usize,
    pub seed: u64,
    /// Split of the malicious fraction by behavior kind; fractions over the
    /// malicious population, summing to at most 1 (remainder: false_data).
    pub adversary_mix: BTreeMap<String, f64>,

    // Data source model.
    pub source_count: usize,
    pub base_value: f64,
    /// Source drift per second.
    pub drift_rate: f64,
    /// Random-walk scale per sqrt(second).
    pub noise_std: f64,

    // Simulated economics.
    pub reward_per_task: u64,
    pub min_deposit: u64,
    pub node_funds: u64,
    /// Raw-reputation slash threshold; 0 disables slashing.
    pub slash_threshold: f64,

    // Protocol timing.
    /// Peer-to-peer hop latency (acks, submissions), seconds.
    pub hop_mean_s: f64,
    pub hop_std_s: f64,
    /// Self-selection margin: nodes respond when their ring distance falls
    /// inside margin * t slots of the anchor.
    pub participation_margin: f64,
    /// Grace period before collection closes.
    pub settle_s: f64,
    pub collect_timeout_s: f64,
    pub leader_timeout_s: f64,
    pub submit_timeout_s: f64,
    pub task_gap_s: f64,
    pub max_attempts: u32,
    /// Virtual-time budget for the whole run, seconds.
    pub horizon_s: f64,

    // Evaluation.
    pub strategy: AggregationStrategy,
    /// Task accuracy tolerance: |aggregate - truth| within
    /// max(epsilon_rel * |truth|, epsilon_abs).
    pub epsilon_rel: f64,
    pub epsilon_abs: f64,

    // Adversary parameters.
    pub false_data_offset_std: f64,
    pub lazy_extra_delay_s: f64,
    pub targeted_after_broadcasts: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            node_count: 100,
            malicious_fraction: 0.1,
            committee_size: 10,
            window_width_s: 1.0,
            alpha: 0.5,
            min_count: 1,
            latency_mean_s: 1.0,
            latency_std_s: 0.3,
            jitter_divisor: 4.0,
            task_count: 1000,
            seed: 1,
            adversary_mix: BTreeMap::from([("false_data".to_owned(), 1.0)]),
            source_count: 4,
            base_value: 100.0,
            drift_rate: 0.05,
            noise_std: 0.05,
            reward_per_task: 100,
            min_deposit: 50,
            node_funds: 1000,
            slash_threshold: 0.0,
            hop_mean_s: 0.05,
            hop_std_s: 0.015,
            participation_margin: 2.5,
            settle_s: 0.2,
            collect_timeout_s: 5.0,
            leader_timeout_s: 1.0,
            submit_timeout_s: 0.5,
            task_gap_s: 0.25,
            max_attempts: 4,
            horizon_s: 86_400.0,
            strategy: AggregationStrategy::Mean,
            epsilon_rel: 1e-2,
            epsilon_abs: 1e-6,
            false_data_offset_std: 15.0,
            lazy_extra_delay_s: 0.9,
            targeted_after_broadcasts: 1,
        }
    }
}

pub const KNOWN_BEHAVIORS: [&str; 5] =
    ["false_data", "lazy", "freeloader", "targeted_offline", "sybil"];

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.node_count == 0 {
            return fail("node_count must be at least 1".into());
        }
        if self.committee_size == 0 || self.committee_size > self.node_count {
            return fail(format!(
                "committee_size must be in 1..={} (got {})",
                self.node_count, self.committee_size
            ));
        }
        if !(0.0..1.0).contains(&self.malicious_fraction) {
            return fail(format!(
                "malicious_fraction must be in [0, 1) (got {})",
                self.malicious_fraction
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail(format!("alpha must be in (0, 1) (got {})", self.alpha));
        }
        if self.min_count == 0 {
            return fail("min_count (zeta) must be at least 1".into());
        }
        for (name, value) in [
            ("window_width_s", self.window_width_s),
            ("latency_mean_s", self.latency_mean_s),
            ("participation_margin", self.participation_margin),
            ("collect_timeout_s", self.collect_timeout_s),
            ("leader_timeout_s", self.leader_timeout_s),
            ("submit_timeout_s", self.submit_timeout_s),
            ("horizon_s", self.horizon_s),
        ] {
            if !(value > 0.0) {
                return fail(format!("{name} must be positive (got {value})"));
            }
        }
        for (name, value) in [
            ("latency_std_s", self.latency_std_s),
            ("noise_std", self.noise_std),
            ("drift_rate", self.drift_rate.abs()),
            ("hop_mean_s", self.hop_mean_s),
            ("hop_std_s", self.hop_std_s),
            ("settle_s", self.settle_s),
            ("task_gap_s", self.task_gap_s),
            ("epsilon_rel", self.epsilon_rel),
            ("epsilon_abs", self.epsilon_abs),
        ] {
            if value < 0.0 {
                return fail(format!("{name} must be nonnegative (got {value})"));
            }
        }
        if self.source_count == 0 {
            return fail("source_count must be at least 1".into());
        }
        if self.max_attempts == 0 {
            return fail("max_attempts must be at least 1".into());
        }
        if self.node_funds < self.min_deposit {
            return fail(format!(
                "node_funds {} cannot cover min_deposit {}",
                self.node_funds, self.min_deposit
            ));
        }
        let mut mix_total = 0.0;
        for (name, frac) in &self.adversary_mix {
            if !KNOWN_BEHAVIORS.contains(&name.as_str()) {
                return fail(format!(
                    "unknown adversary behavior {name:?} (known: {KNOWN_BEHAVIORS:?})"
                ));
            }
            if !(0.0..=1.0).contains(frac) {
                return fail(format!("adversary_mix[{name}] must be in [0, 1] (got {frac})"));
            }
            mix_total += frac;
        }
        if mix_total > 1.0 + 1e-9 {
            return fail(format!("adversary_mix fractions sum to {mix_total} > 1"));
        }
        Ok(())
    }

    /// Parses the flat TOML scenario-file format.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Runs one scenario end to end and returns its metrics.
pub fn run_scenario(config: &SimConfig, variant: SchemeVariant) -> Result<RunMetrics> {
    Ok(run_scenario_full(config, variant)?.metrics)
}

/// As [`run_scenario`], also returning the event trace and final ledger.
pub fn run_scenario_full(config: &SimConfig, variant: SchemeVariant) -> Result<SimOutcome> {
    config.validate()?;
    Simulation::new(config.clone(), variant)?.run()
}

/// Parameter grid for `run_matrix`. Empty axes fall back to the base config's
/// value, so a sweep lists only the dimensions it varies.
#[derive(Clone, Debug, Default)]
pub struct MatrixSpec {
    pub deltas: Vec<f64>,
    pub committees: Vec<usize>,
    pub alphas: Vec<f64>,
    pub variants: Vec<SchemeVariant>,
    pub replications: usize,
    /// Replication r runs with seed `seed_base + r`.
    pub seed_base: u64,
}

fn axis<T: Clone>(values: &[T], base: T) -> Vec<T> {
    if values.is_empty() {
        vec![base]
    } else {
        values.to_vec()
    }
}

/// Runs every (variant x grid point x replication) cell, in parallel, and
/// returns one row per cell in deterministic order. Cell failures are
/// recorded in the row's status and do not stop the matrix.
pub fn run_matrix(base: &SimConfig, spec: &MatrixSpec) -> Result<Vec<RunRow>> {
    base.validate()?;
    let deltas = axis(&spec.deltas, base.malicious_fraction);
    let committees = axis(&spec.committees, base.committee_size);
    let alphas = axis(&spec.alphas, base.alpha);
    let variants =
        if spec.variants.is_empty() { vec![SchemeVariant::Full] } else { spec.variants.clone() };
    let replications = spec.replications.max(1);

    let mut cells = Vec::new();
    for &delta in &deltas {
        for &t in &committees {
            for &alpha in &alphas {
                for &variant in &variants {
                    for rep in 0..replications {
                        let mut cfg = base.clone();
                        cfg.malicious_fraction = delta;
                        cfg.committee_size = t;
                        cfg.alpha = alpha;
                        cfg.seed = spec.seed_base + rep as u64;
                        cells.push((cfg, variant));
                    }
                }
            }
        }
    }

    let rows: Vec<RunRow> = cells
        .into_par_iter()
        .map(|(cfg, variant)| {
            let (status, metrics) = match run_scenario(&cfg, variant) {
                Ok(m) => ("ok".to_owned(), m),
                Err(e) => (format!("error: {e}"), RunMetrics::default()),
            };
            RunRow {
                variant: variant.label().to_owned(),
                seed: cfg.seed,
                nodes: cfg.node_count,
                malicious_fraction: cfg.malicious_fraction,
                committee_size: cfg.committee_size,
                window_width_s: cfg.window_width_s,
                alpha: cfg.alpha,
                min_count: cfg.min_count,
                task_count: cfg.task_count,
                status,
                metrics,
            }
        })
        .collect();
    Ok(rows)
}

/// Builds the CSV row for a single completed run.
pub fn run_row(config: &SimConfig, variant: SchemeVariant, metrics: RunMetrics) -> RunRow {
    RunRow {
        variant: variant.label().to_owned(),
        seed: config.seed,
        nodes: config.node_count,
        malicious_fraction: config.malicious_fraction,
        committee_size: config.committee_size,
        window_width_s: config.window_width_s,
        alpha: config.alpha,
        min_count: config.min_count,
        task_count: config.task_count,
        status: "ok".to_owned(),
        metrics,
    }
}
