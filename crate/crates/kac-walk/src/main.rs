//! `kac-walk`: Monte Carlo experiments on Kac's walk on the sphere.
//!
//! Each subcommand maps to one experiment; flags override values from an
//! optional `--config` file (flat `key = value` lines), which in turn
//! override built-in defaults. Results land as JSONL + CSV under the output
//! directory and a one-line summary is printed to stdout.

use clap::{Args, Parser, Subcommand};
use kac_walk::config::{apply_kv, parse_config_text};
use kac_walk::coupling::CouplingTuning;
use kac_walk::error::Error;
use kac_walk::experiments::{run_experiment, ExperimentConfig, ExperimentKind, StatRow};
use kac_walk::output::{default_stem, emit_results};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "kac-walk",
    version,
    about = "Kac's walk on the sphere: couplings, coalescence, and mixing experiments"
)]
struct Cli {
    /// Flat key-value config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed override (also honors the KAC_SEED environment variable).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for JSONL/CSV results.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also emit one row per replica (and outcome objects for couplings).
    #[arg(long, global = true)]
    per_replica: bool,

    /// Skip writing files; print the summary only.
    #[arg(long, global = true)]
    no_files: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Dimension of the sphere's ambient space.
    #[arg(long)]
    n: Option<usize>,

    /// Monte Carlo replicas.
    #[arg(long)]
    replicas: Option<u64>,

    /// Steps (meaning depends on the subcommand).
    #[arg(long)]
    steps: Option<u64>,

    /// Comma-separated time grid.
    #[arg(long, value_delimiter = ',')]
    t_grid: Option<Vec<u64>>,

    /// Tuning preset: desk (default) or reference.
    #[arg(long)]
    tuning: Option<String>,

    /// Phase-1 closeness exponent `a`.
    #[arg(long)]
    a: Option<f64>,

    /// Coordinate-floor exponent `b`.
    #[arg(long)]
    b: Option<f64>,

    /// Start mode: auto | worst | random | near | equal.
    #[arg(long)]
    start: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Marginal law of the plain walk after a fixed number of steps.
    Walk(CommonArgs),
    /// Bare non-Markovian coupling runs.
    Couple(CommonArgs),
    /// Proportional-coupling contraction rates.
    Contract(CommonArgs),
    /// Two-phase coupling coalescence (optionally over an n grid).
    Coalesce {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated dimension grid for the scaling fit.
        #[arg(long, value_delimiter = ',')]
        n_grid: Option<Vec<usize>>,
        /// Phase-1 length override.
        #[arg(long)]
        t_phase1: Option<u64>,
        /// Total length override.
        #[arg(long)]
        t_total: Option<u64>,
    },
    /// Connectivity probability of uniform pair multigraphs.
    Partition {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of uniform edges (default derives from epsilon).
        #[arg(long)]
        edges: Option<u64>,
        /// Connectivity exponent epsilon.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// KS decay along a time grid plus the untouched-coordinate
    /// discriminator.
    Mixing(CommonArgs),
    /// Coupon-collector coverage times.
    Coupon(CommonArgs),
    /// Small-coordinate probabilities under the stationary law.
    Smallvals {
        #[command(flatten)]
        common: CommonArgs,
        /// Exponent c (> 1); the threshold is n^(-3c).
        #[arg(long)]
        c: Option<f64>,
        /// Explicit threshold override.
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err.downcast_ref::<Error>() {
                Some(Error::Config { .. }) | Some(Error::InvalidExperiment(_)) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config_text(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };

    apply_command(&mut cfg, &cli.command)?;

    // Seed precedence: --seed flag, then config file, then KAC_SEED.
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    } else if cli.config.is_none() {
        if let Ok(env_seed) = std::env::var("KAC_SEED") {
            cfg.seed = env_seed.parse().map_err(|_| Error::Config {
                key: "KAC_SEED".into(),
                message: format!("cannot parse `{env_seed}` as u64"),
            })?;
        }
    }
    if let Some(threads) = cli.threads {
        cfg.threads = threads;
    }
    if cli.per_replica {
        cfg.per_replica = true;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = Some(dir.display().to_string());
    }

    let records = run_experiment(&cfg)?;

    for record in &records {
        if let Some(row) = record.headline() {
            println!("{}", format_headline(row));
        }
    }

    if !cli.no_files {
        let dir = PathBuf::from(cfg.out_dir.clone().unwrap_or_else(|| "results".into()));
        let stem = default_stem(&cfg);
        let paths = emit_results(&records, &dir, &stem)?;
        println!("wrote {}", paths.jsonl.display());
        println!("wrote {}", paths.csv.display());
        if let Some(outcomes) = paths.outcomes {
            println!("wrote {}", outcomes.display());
        }
    }
    Ok(())
}

fn format_headline(row: &StatRow) -> String {
    let mut line = format!("{} n={}", row.stat, row.n);
    if let Some(t) = row.t {
        line.push_str(&format!(" t={t}"));
    }
    line.push_str(&format!(": {:.6}", row.value));
    if let (Some(lo), Some(hi)) = (row.ci_low, row.ci_high) {
        line.push_str(&format!(" (99% CI [{lo:.6}, {hi:.6}])"));
    }
    if let Some(reference) = row.reference {
        line.push_str(&format!(" | reference {reference:.6}"));
        if let Some(note) = &row.note {
            line.push_str(&format!(" ({note})"));
        }
    }
    line
}

fn apply_common(cfg: &mut ExperimentConfig, kind: ExperimentKind, c: &CommonArgs) -> anyhow::Result<()> {
    cfg.kind = kind;
    if let Some(preset) = &c.tuning {
        cfg.tuning = match preset.as_str() {
            "desk" => CouplingTuning::desk(),
            "reference" => CouplingTuning::reference(),
            other => {
                return Err(Error::Config {
                    key: "tuning".into(),
                    message: format!("unknown preset `{other}` (desk | reference)"),
                }
                .into())
            }
        };
    }
    if let Some(n) = c.n {
        apply_kv(cfg, "n", &n.to_string())?;
    }
    if let Some(r) = c.replicas {
        apply_kv(cfg, "replicas", &r.to_string())?;
    }
    if let Some(s) = c.steps {
        apply_kv(cfg, "steps", &s.to_string())?;
    }
    if let Some(grid) = &c.t_grid {
        cfg.t_grid = grid.clone();
    }
    if let Some(a) = c.a {
        apply_kv(cfg, "a", &a.to_string())?;
    }
    if let Some(b) = c.b {
        apply_kv(cfg, "b", &b.to_string())?;
    }
    if let Some(start) = &c.start {
        apply_kv(cfg, "start", start)?;
    }
    Ok(())
}

fn apply_command(cfg: &mut ExperimentConfig, command: &Command) -> anyhow::Result<()> {
    match command {
        Command::Walk(c) => apply_common(cfg, ExperimentKind::Walk, c)?,
        Command::Couple(c) => apply_common(cfg, ExperimentKind::Couple, c)?,
        Command::Contract(c) => apply_common(cfg, ExperimentKind::Contract, c)?,
        Command::Mixing(c) => apply_common(cfg, ExperimentKind::Mixing, c)?,
        Command::Coupon(c) => apply_common(cfg, ExperimentKind::Coupon, c)?,
        Command::Coalesce { common, n_grid, t_phase1, t_total } => {
            apply_common(cfg, ExperimentKind::Coalesce, common)?;
            if let Some(grid) = n_grid {
                cfg.n_grid = grid.clone();
            }
            if let Some(t) = t_phase1 {
                cfg.t_phase1 = Some(*t);
            }
            if let Some(t) = t_total {
                cfg.t_total = Some(*t);
            }
        }
        Command::Partition { common, edges, epsilon } => {
            apply_common(cfg, ExperimentKind::Partition, common)?;
            if let Some(m) = edges {
                apply_kv(cfg, "edges", &m.to_string())?;
            }
            if let Some(eps) = epsilon {
                apply_kv(cfg, "epsilon", &eps.to_string())?;
            }
        }
        Command::Smallvals { common, c, threshold } => {
            apply_common(cfg, ExperimentKind::SmallVals, common)?;
            if let Some(c) = c {
                apply_kv(cfg, "c_exp", &c.to_string())?;
            }
            if let Some(th) = threshold {
                apply_kv(cfg, "threshold", &th.to_string())?;
            }
        }
    }
    Ok(())
}
