//! Run metrics and CSV reporting.
//!
//! CSV output is byte-stable: UTF-8, LF line endings, comma separation, and
//! floats printed at 9 significant digits in scientific notation, so
//! golden-file comparisons hold across machines.

use crate::error::{Error, Result};
use crate::types::NodeId;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Machine-independent cost counters surfaced instead of wall-clock numbers.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    /// Comparisons performed while ranking claims.
    pub selection_comparisons: u64,
    /// Candidate windows examined by the sliding filter.
    pub filter_windows: u64,
}

/// One reputation observation, exported to traces.csv.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub task_index: u32,
    pub node_id: NodeId,
    pub total_services: u64,
    pub mean_response_time: f64,
    pub accuracy: f64,
    pub reputation: f64,
}

/// Outputs of one scenario run.
#[derive(Clone, Debug, Default)]
pub struct RunMetrics {
    /// Fraction of completed tasks whose aggregate landed within the task
    /// tolerance of ground truth at aggregation time.
    pub accuracy: f64,
    /// Mean over completed tasks of the population variance of contributor
    /// values.
    pub mean_variance: f64,
    /// Mean seconds from event post to finalize, completed tasks only.
    pub mean_response_time: f64,
    pub completed: u64,
    pub failed: u64,
    pub retry_count: u64,
    /// True when the run stopped at the simulation horizon.
    pub aborted: bool,
    pub selection_counts: BTreeMap<NodeId, u64>,
    pub reputation_traces: Vec<TraceRow>,
    pub counters: OpCounters,
}

/// Formats a float at 9 significant digits, scientific notation.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn median_f64(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One row of metrics.csv: the scenario coordinates plus the run outcome.
#[derive(Clone, Debug)]
pub struct RunRow {
    pub variant: String,
    pub seed: u64,
    pub nodes: usize,
    pub malicious_fraction: f64,
    pub committee_size: usize,
    pub window_width_s: f64,
    pub alpha: f64,
    pub min_count: usize,
    pub task_count: usize,
    pub status: String,
    pub metrics: RunMetrics,
}

pub const METRICS_CSV_HEADER: &str = "variant,seed,nodes,malicious_fraction,committee,window_s,\
alpha,zeta,tasks,status,completed,failed,retries,accuracy,mean_variance,mean_response_time_s,\
selection_comparisons,filter_windows";

pub const TRACES_CSV_HEADER: &str =
    "variant,seed,task_index,node_id,total_services,mean_response_time_s,accuracy,reputation";

impl RunRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.variant,
            self.seed,
            self.nodes,
            fmt_sig9(self.malicious_fraction),
            self.committee_size,
            fmt_sig9(self.window_width_s),
            fmt_sig9(self.alpha),
            self.min_count,
            self.task_count,
            self.status,
            self.metrics.completed,
            self.metrics.failed,
            self.metrics.retry_count,
            fmt_sig9(self.metrics.accuracy),
            fmt_sig9(self.metrics.mean_variance),
            fmt_sig9(self.metrics.mean_response_time),
            self.metrics.counters.selection_comparisons,
            self.metrics.counters.filter_windows,
        )
    }
}

pub fn metrics_csv(rows: &[RunRow]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

pub fn traces_csv(rows: &[RunRow]) -> String {
    let mut out = String::from(TRACES_CSV_HEADER);
    out.push('\n');
    for row in rows {
        for t in &row.metrics.reputation_traces {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.variant,
                row.seed,
                t.task_index,
                t.node_id,
                t.total_services,
                fmt_sig9(t.mean_response_time),
                fmt_sig9(t.accuracy),
                fmt_sig9(t.reputation),
            );
        }
    }
    out
}

fn variant_summary(rows: &[RunRow], variant: &str) -> Option<(f64, f64, f64)> {
    let of: Vec<&RunRow> =
        rows.iter().filter(|r| r.variant == variant && r.status == "ok").collect();
    if of.is_empty() {
        return None;
    }
    let acc: Vec<f64> = of.iter().map(|r| r.metrics.accuracy).collect();
    let var: Vec<f64> = of.iter().map(|r| r.metrics.mean_variance).collect();
    let rt: Vec<f64> = of.iter().map(|r| r.metrics.mean_response_time).collect();
    Some((median_f64(&acc), median_f64(&var), median_f64(&rt)))
}

pub fn summary_text(rows: &[RunRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "runs: {}", rows.len());
    let mut variants: Vec<&str> = rows.iter().map(|r| r.variant.as_str()).collect();
    variants.sort_unstable();
    variants.dedup();
    for v in &variants {
        if let Some((acc, var, rt)) = variant_summary(rows, v) {
            let _ = writeln!(
                out,
                "{v}: median accuracy {acc:.4}, median mean_variance {var:.4}, \
                 median response time {rt:.4}s"
            );
        }
    }
    if let (Some((fa, fv, frt)), Some((ba, bv, brt))) =
        (variant_summary(rows, "full"), variant_summary(rows, "baseline"))
    {
        let _ = writeln!(
            out,
            "full vs baseline: accuracy {:+.2} pp, variance {:+.1}%, response time {:+.1}%",
            (fa - ba) * 100.0,
            if bv > 0.0 { (fv - bv) / bv * 100.0 } else { 0.0 },
            if brt > 0.0 { (frt - brt) / brt * 100.0 } else { 0.0 },
        );
    }
    out
}

/// Writes metrics.csv, traces.csv and summary.txt under `out_dir`.
pub fn emit_report(rows: &[RunRow], out_dir: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::EmptyMetrics);
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("metrics.csv"), metrics_csv(rows))?;
    fs::write(out_dir.join("traces.csv"), traces_csv(rows))?;
    fs::write(out_dir.join("summary.txt"), summary_text(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, accuracy: f64) -> RunRow {
        RunRow {
            variant: variant.into(),
            seed: 1,
            nodes: 10,
            malicious_fraction: 0.1,
            committee_size: 3,
            window_width_s: 1.0,
            alpha: 0.5,
            min_count: 1,
            task_count: 5,
            status: "ok".into(),
            metrics: RunMetrics {
                accuracy,
                mean_variance: 2.0,
                mean_response_time: 1.5,
                completed: 5,
                ..Default::default()
            },
        }
    }

    #[test]
    fn header_is_frozen() {
        assert_eq!(
            METRICS_CSV_HEADER,
            "variant,seed,nodes,malicious_fraction,committee,window_s,alpha,zeta,tasks,status,\
             completed,failed,retries,accuracy,mean_variance,mean_response_time_s,\
             selection_comparisons,filter_windows"
        );
    }

    #[test]
    fn nine_significant_digits() {
        assert_eq!(fmt_sig9(1.0), "1.00000000e0");
        assert_eq!(fmt_sig9(0.123456789123), "1.23456789e-1");
        assert_eq!(fmt_sig9(-42.5), "-4.25000000e1");
    }

    #[test]
    fn csv_has_one_line_per_row_plus_header() {
        let csv = metrics_csv(&[row("full", 0.9)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], METRICS_CSV_HEADER);
        assert!(lines[1].starts_with("full,1,10,"));
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn empty_report_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(emit_report(&[], dir.path()), Err(Error::EmptyMetrics)));
        assert!(!dir.path().join("metrics.csv").exists());
    }

    #[test]
    fn report_writes_all_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row("full", 0.95), row("baseline", 0.9)];
        emit_report(&rows, dir.path()).unwrap();
        let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert_eq!(metrics.lines().count(), 3);
        let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.contains("full vs baseline"));
        assert!(dir.path().join("traces.csv").exists());
    }

    #[test]
    fn medians_are_the_usual_order_statistics() {
        assert_eq!(median_f64(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median_f64(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
