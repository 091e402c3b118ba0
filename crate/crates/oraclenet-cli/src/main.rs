//! Command-line harness: single scenario runs, parameter-matrix sweeps and
//! report generation over previously collected metrics.
//!
//! Flags mirror the scenario-config fields; a TOML scenario file can seed the
//! configuration and flags override it. The `ORACLENET_SEED` environment
//! variable overrides `--seed`. Usage and I/O errors exit with code 2.

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use oraclenet_core::metrics::{self, RunRow};
use oraclenet_core::scenario::{self, MatrixSpec, SchemeVariant, SimConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "oraclenet", version, about = "Oracle network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario and write its report.
    Run(RunArgs),
    /// Sweep a parameter grid across variants and seeds.
    Matrix(MatrixArgs),
    /// Summarize an existing metrics.csv.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML scenario file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Total number of oracle nodes (N).
    #[arg(long)]
    nodes: Option<usize>,
    /// Fraction of malicious nodes (delta).
    #[arg(long)]
    malicious: Option<f64>,
    /// Nodes selected per task (t).
    #[arg(long)]
    committee: Option<usize>,
    /// Time window width in seconds (w).
    #[arg(long)]
    window: Option<f64>,
    /// Reputation preference weight (alpha).
    #[arg(long)]
    alpha: Option<f64>,
    /// Minimum aggregation count (zeta).
    #[arg(long)]
    zeta: Option<usize>,
    /// Number of oracle tasks per run.
    #[arg(long)]
    tasks: Option<usize>,
    /// RNG seed (ORACLENET_SEED overrides).
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn build(&self) -> anyhow::Result<SimConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                SimConfig::from_toml_str(&text)?
            }
            None => SimConfig::default(),
        };
        if let Some(n) = self.nodes {
            cfg.node_count = n;
        }
        if let Some(d) = self.malicious {
            cfg.malicious_fraction = d;
        }
        if let Some(t) = self.committee {
            cfg.committee_size = t;
        }
        if let Some(w) = self.window {
            cfg.window_width_s = w;
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(z) = self.zeta {
            cfg.min_count = z;
        }
        if let Some(k) = self.tasks {
            cfg.task_count = k;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Ok(env_seed) = std::env::var("ORACLENET_SEED") {
            cfg.seed = env_seed
                .parse()
                .map_err(|_| anyhow!("ORACLENET_SEED must be an integer, got {env_seed:?}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Scheme variant: full, no-reputation, no-filter or baseline.
    #[arg(long, default_value = "full")]
    variant: String,
    /// Output directory for metrics.csv, traces.csv and summary.txt.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Malicious fractions to sweep, comma separated (e.g. 0.05,0.1,0.2).
    #[arg(long, value_delimiter = ',')]
    deltas: Vec<f64>,
    /// Committee sizes to sweep.
    #[arg(long, value_delimiter = ',')]
    committees: Vec<usize>,
    /// Alpha values to sweep.
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    /// Variants to run (default: all four).
    #[arg(long, value_delimiter = ',')]
    variants: Vec<String>,
    /// Seed replications per cell; replication r uses seed + r.
    #[arg(long, default_value_t = 1)]
    replications: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Existing metrics.csv to summarize.
    #[arg(long)]
    metrics: PathBuf,
    /// Where to write summary.txt (defaults to the metrics directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: &RunArgs) -> anyhow::Result<()> {
    let cfg = args.config.build()?;
    let variant: SchemeVariant = args.variant.parse()?;
    let metrics = scenario::run_scenario(&cfg, variant)?;
    let row = scenario::run_row(&cfg, variant, metrics);
    print_brief(&row);
    metrics::emit_report(&[row], &args.out)?;
    eprintln!("report written to {}", args.out.display());
    Ok(())
}

fn matrix(args: &MatrixArgs) -> anyhow::Result<()> {
    let cfg = args.config.build()?;
    let variants = if args.variants.is_empty() {
        SchemeVariant::ALL.to_vec()
    } else {
        args.variants
            .iter()
            .map(|v| v.parse())
            .collect::<oraclenet_core::Result<Vec<_>>>()?
    };
    let spec = MatrixSpec {
        deltas: args.deltas.clone(),
        committees: args.committees.clone(),
        alphas: args.alphas.clone(),
        variants,
        replications: args.replications,
        seed_base: cfg.seed,
    };
    let rows = scenario::run_matrix(&cfg, &spec)?;
    for row in &rows {
        print_brief(row);
    }
    metrics::emit_report(&rows, &args.out)?;
    eprintln!("report written to {}", args.out.display());
    Ok(())
}

fn report(args: &ReportArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.metrics)
        .with_context(|| format!("reading {}", args.metrics.display()))?;
    let rows = parse_metrics_csv(&text)?;
    if rows.is_empty() {
        return Err(anyhow!("no data rows in {}", args.metrics.display()));
    }
    let summary = summarize(&rows);
    print!("{summary}");
    let out_dir = match &args.out {
        Some(dir) => dir.clone(),
        None => args
            .metrics
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("summary.txt"), summary)?;
    Ok(())
}

/// Minimal reader for the columns the summary needs.
struct CsvRun {
    variant: String,
    accuracy: f64,
    mean_variance: f64,
    mean_response_time: f64,
}

fn parse_metrics_csv(text: &str) -> anyhow::Result<Vec<CsvRun>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty metrics file"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| -> anyhow::Result<usize> {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| anyhow!("metrics file is missing the {name:?} column"))
    };
    let (vi, st, ai, mi, ri) = (
        col("variant")?,
        col("status")?,
        col("accuracy")?,
        col("mean_variance")?,
        col("mean_response_time_s")?,
    );
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(anyhow!("line {} has {} fields, expected {}", lineno + 2, fields.len(), columns.len()));
        }
        if fields[st] != "ok" {
            continue;
        }
        rows.push(CsvRun {
            variant: fields[vi].to_owned(),
            accuracy: fields[ai].parse()?,
            mean_variance: fields[mi].parse()?,
            mean_response_time: fields[ri].parse()?,
        });
    }
    Ok(rows)
}

fn summarize(rows: &[CsvRun]) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let mut variants: Vec<&str> = rows.iter().map(|r| r.variant.as_str()).collect();
    variants.sort_unstable();
    variants.dedup();
    let _ = writeln!(out, "runs: {}", rows.len());
    for v in variants {
        let of: Vec<&CsvRun> = rows.iter().filter(|r| r.variant == v).collect();
        let acc: Vec<f64> = of.iter().map(|r| r.accuracy).collect();
        let var: Vec<f64> = of.iter().map(|r| r.mean_variance).collect();
        let rt: Vec<f64> = of.iter().map(|r| r.mean_response_time).collect();
        let _ = writeln!(
            out,
            "{v}: n={} median accuracy {:.4}, median mean_variance {:.4}, median response time {:.4}s",
            of.len(),
            metrics::median_f64(&acc),
            metrics::median_f64(&var),
            metrics::median_f64(&rt),
        );
    }
    out
}

fn print_brief(row: &RunRow) {
    println!(
        "{} seed={} N={} delta={} t={} alpha={}: status={} accuracy={:.4} variance={:.4} rt={:.4}s \
         completed={} failed={} retries={}",
        row.variant,
        row.seed,
        row.nodes,
        row.malicious_fraction,
        row.committee_size,
        row.alpha,
        row.status,
        row.metrics.accuracy,
        row.metrics.mean_variance,
        row.metrics.mean_response_time,
        row.metrics.completed,
        row.metrics.failed,
        row.metrics.retry_count,
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Matrix(args) => matrix(args),
        Command::Report(args) => report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
