//! Sliding-window timestamp filter.
//!
//! From a set of timed results, keep the contiguous (in sorted-timestamp
//! order) subset whose timestamp range is at most `w`, maximizing the count,
//! breaking count ties by minimum population variance of the timestamps, and
//! breaking remaining ties by the earliest window start. Inputs are sorted
//! before the sweep; only maximal windows can win, so the left pointer walk
//! visits every candidate. Variance ties are decided in exact integer
//! arithmetic on microsecond timestamps, never floats.
//!
//! A companion retry policy widens the window by half whenever the filtered
//! count falls below the configured threshold.

use crate::error::{Error, Result};
use crate::selection::RingPriority;
use crate::types::{NodeId, SimTime};

/// One revealed feedback result, carrying the priority claim it arrived with.
#[derive(Clone, Debug, PartialEq)]
pub struct TimedResult {
    pub node_id: NodeId,
    pub value: f64,
    pub timestamp: SimTime,
    pub priority: RingPriority,
}

/// Window width, acceptance threshold and the fixed growth factor of the
/// retry policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterPolicy {
    pub window_width: SimTime,
    pub min_count: usize,
    pub growth_factor: f64,
}

pub const WINDOW_GROWTH_FACTOR: f64 = 1.5;

impl FilterPolicy {
    pub fn new(window_width: SimTime, min_count: usize) -> Self {
        FilterPolicy { window_width, min_count, growth_factor: WINDOW_GROWTH_FACTOR }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetryDecision {
    Accept,
    Retry { new_width: SimTime },
}

/// Accept iff the filtered count met the threshold; otherwise retry with the
/// window widened by half (exact on integer microseconds).
pub fn apply_retry_policy(filtered_count: usize, policy: &FilterPolicy) -> RetryDecision {
    if filtered_count >= policy.min_count {
        RetryDecision::Accept
    } else {
        RetryDecision::Retry { new_width: grow_width(policy.window_width) }
    }
}

pub fn grow_width(w: SimTime) -> SimTime {
    SimTime(w.0 + w.0 / 2)
}

/// Window statistics for exact variance comparison:
/// variance = (n * sum_sq - sum^2) / n^2, compared cross-multiplied in u128.
#[derive(Clone, Copy)]
struct WindowStats {
    n: u128,
    sum: u128,
    sum_sq: u128,
}

impl WindowStats {
    fn numerator(&self) -> u128 {
        self.n * self.sum_sq - self.sum * self.sum
    }

    /// True iff self's population variance is strictly smaller than other's.
    fn variance_lt(&self, other: &WindowStats) -> bool {
        self.numerator() * other.n * other.n < other.numerator() * self.n * self.n
    }

    fn variance_secs2(&self) -> f64 {
        (self.numerator() as f64 / (self.n * self.n) as f64) / 1e12
    }
}

/// Outcome of a filter run: which sorted indices were kept, plus the exact
/// window statistics (for logging and tests).
struct BestWindow {
    start: usize,
    end: usize, // inclusive
    stats: WindowStats,
}

fn window_stats(prefix_sum: &[u128], prefix_sq: &[u128], l: usize, r: usize) -> WindowStats {
    WindowStats {
        n: (r - l + 1) as u128,
        sum: prefix_sum[r + 1] - prefix_sum[l],
        sum_sq: prefix_sq[r + 1] - prefix_sq[l],
    }
}

/// Filters `results` to the best timestamp window of width at most `w`.
/// Output preserves the input items (identities included) of the winning
/// window, in timestamp order.
pub fn filter_window(results: &[TimedResult], w: SimTime) -> Result<Vec<TimedResult>> {
    filter_window_counted(results, w, &mut 0)
}

/// As [`filter_window`], counting windows examined for the cost report.
pub fn filter_window_counted(
    results: &[TimedResult],
    w: SimTime,
    comparisons: &mut u64,
) -> Result<Vec<TimedResult>> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut sorted: Vec<&TimedResult> = results.iter().collect();
    // Secondary key keeps the sweep deterministic under equal timestamps.
    sorted.sort_by(|a, b| (a.timestamp, &a.node_id).cmp(&(b.timestamp, &b.node_id)));

    let ts: Vec<u64> = sorted.iter().map(|r| r.timestamp.as_micros()).collect();
    let n = ts.len();
    let mut prefix_sum = vec![0u128; n + 1];
    let mut prefix_sq = vec![0u128; n + 1];
    for (i, &t) in ts.iter().enumerate() {
        prefix_sum[i + 1] = prefix_sum[i] + t as u128;
        prefix_sq[i + 1] = prefix_sq[i] + (t as u128) * (t as u128);
    }

    // Sweep maximal windows: for each left edge, the furthest right edge in
    // range. Only maximal windows can win on count, and equal-count windows
    // are compared on exact variance, earliest start last.
    let mut best: Option<BestWindow> = None;
    let mut r = 0usize;
    for l in 0..n {
        if r < l {
            r = l;
        }
        while r + 1 < n && ts[r + 1] - ts[l] <= w.as_micros() {
            r += 1;
        }
        *comparisons += 1;
        let cand = BestWindow { start: l, end: r, stats: window_stats(&prefix_sum, &prefix_sq, l, r) };
        best = Some(match best {
            None => cand,
            Some(cur) => {
                let cand_count = cand.end - cand.start + 1;
                let cur_count = cur.end - cur.start + 1;
                if cand_count > cur_count
                    || (cand_count == cur_count && cand.stats.variance_lt(&cur.stats))
                {
                    cand
                } else {
                    cur
                }
            }
        });
    }

    let best = best.expect("nonempty input");
    debug_assert!(ts[best.end] - ts[best.start] <= w.as_micros());
    Ok(sorted[best.start..=best.end].iter().map(|r| (*r).clone()).collect())
}

/// Population variance of the kept window's timestamps in seconds squared,
/// for decision logs.
pub fn window_variance_secs2(kept: &[TimedResult]) -> f64 {
    let n = kept.len() as u128;
    if n == 0 {
        return 0.0;
    }
    let sum: u128 = kept.iter().map(|r| r.timestamp.as_micros() as u128).sum();
    let sum_sq: u128 =
        kept.iter().map(|r| (r.timestamp.as_micros() as u128).pow(2)).sum();
    WindowStats { n, sum, sum_sq }.variance_secs2()
}
