//! Reproducible Monte Carlo experiments.
//!
//! Every experiment is described by an [`ExperimentConfig`], runs its
//! replicas on per-replica RNG streams, and emits [`ResultRecord`]s whose
//! rows carry the Monte Carlo estimate, a 99% interval, and the closed-form
//! reference value (exact factor, tail bound, oracle CDF, ...) it is to be
//! compared against. Aggregation walks replicas in index order, so results
//! are independent of the worker-thread count.

mod coalescence;
mod contraction;
mod couple_exp;
mod coupon;
mod mixing;
mod partition_conn;
mod small_values;

use crate::coupling::{CouplingOutcome, CouplingTuning};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use rayon::prelude::*;

/// Which experiment to run; mirrors the CLI subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Single-time marginal check of the plain walk.
    Walk,
    /// Bare non-Markovian coupling runs from configurable starts.
    Couple,
    /// One-step and multi-step contraction of the proportional coupling.
    Contract,
    /// Full two-phase coupling and coalescence rates, optionally over an
    /// `n` grid for the time-scaling fit.
    Coalesce,
    /// Connectivity probability of uniform-edge multigraphs.
    Partition,
    /// Mixing diagnostics: KS decay along a time grid plus the
    /// untouched-coordinate discriminator.
    Mixing,
    /// Coupon-collector coverage times.
    Coupon,
    /// Small-coordinate probabilities under the stationary law.
    SmallVals,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Walk => "walk",
            Self::Couple => "couple",
            Self::Contract => "contract",
            Self::Coalesce => "coalesce",
            Self::Partition => "partition",
            Self::Mixing => "mixing",
            Self::Coupon => "coupon",
            Self::SmallVals => "smallvals",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "walk" => Some(Self::Walk),
            "couple" => Some(Self::Couple),
            "contract" => Some(Self::Contract),
            "coalesce" => Some(Self::Coalesce),
            "partition" => Some(Self::Partition),
            "mixing" => Some(Self::Mixing),
            "coupon" => Some(Self::Coupon),
            "smallvals" => Some(Self::SmallVals),
            _ => None,
        }
    }
}

/// How coupled starts are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartMode {
    /// Experiment-appropriate default (worst-case pair for contraction,
    /// near pair for bare coupling runs).
    Auto,
    /// `x = e1`, `y = e2`: maximizes the starting squared-coordinate
    /// discrepancy (value 2).
    Worst,
    /// Independent Haar pair.
    Random,
    /// Tiny-rotation pair with conditioned coordinate floor.
    Near,
    /// Identical Haar states.
    Equal,
}

impl StartMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Auto => "auto",
            Self::Worst => "worst",
            Self::Random => "random",
            Self::Near => "near",
            Self::Equal => "equal",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "auto" => Some(Self::Auto),
            "worst" => Some(Self::Worst),
            "random" => Some(Self::Random),
            "near" => Some(Self::Near),
            "equal" => Some(Self::Equal),
            _ => None,
        }
    }
}

/// Full description of one experiment run. Echoed into every result record;
/// re-running an echoed config with its seed reproduces the output
/// byte-for-byte (timestamps and durations aside).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    /// Dimension grid for scaling experiments; empty means `[n]`.
    #[serde(default)]
    pub n_grid: Vec<usize>,
    /// Time grid; empty picks an experiment-specific default.
    #[serde(default)]
    pub t_grid: Vec<u64>,
    /// Step count for single-time experiments; 0 picks a default.
    pub steps: u64,
    pub replicas: u64,
    pub seed: u64,
    pub tuning: CouplingTuning,
    /// Connectivity exponent: the edge-count default is
    /// `ceil((1/2 + 2 eps) n ln n)` and the reference bound `1 - 2 n^-eps`.
    pub epsilon: f64,
    /// Small-values exponent (`> 1`); the threshold default is `n^{-3c}`.
    pub c_exp: f64,
    /// Explicit small-values threshold override.
    pub threshold: Option<f64>,
    /// Edge count for the partition experiment; 0 derives from `epsilon`.
    pub edges: u64,
    /// Angular histogram bins for the `n = 2` total-variation estimator.
    pub bins: usize,
    /// Phase-1 length override for two-phase runs.
    pub t_phase1: Option<u64>,
    /// Total length override for two-phase runs.
    pub t_total: Option<u64>,
    /// Coordinate floor for conditioned near starts.
    pub min_coord_sq: f64,
    /// Rotation angle separating the chains of a near start.
    pub perturbation: f64,
    pub start: StartMode,
    /// Also emit one row (and, for couplings, one outcome object) per
    /// replica.
    pub per_replica: bool,
    /// Worker threads; 0 means all available. Results never depend on this.
    pub threads: usize,
    pub out_dir: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::Walk,
            n: 10,
            n_grid: Vec::new(),
            t_grid: Vec::new(),
            steps: 0,
            replicas: 1000,
            seed: 0,
            tuning: CouplingTuning::desk(),
            epsilon: 1.0,
            c_exp: 2.0,
            threshold: None,
            edges: 0,
            bins: 360,
            t_phase1: None,
            t_total: None,
            min_coord_sq: 1e-3,
            perturbation: 1e-9,
            start: StartMode::Auto,
            per_replica: false,
            threads: 0,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, value) in [
            ("a", self.tuning.a),
            ("b", self.tuning.b),
            ("p", self.tuning.p),
            ("q", self.tuning.q),
            ("q_prime", self.tuning.q_prime),
            ("snap_tol", self.tuning.coalescence_snap_tol),
            ("epsilon", self.epsilon),
            ("c_exp", self.c_exp),
            ("threshold", self.threshold.unwrap_or(0.0)),
            ("min_coord_sq", self.min_coord_sq),
            ("perturbation", self.perturbation),
        ] {
            if !value.is_finite() {
                return Err(Error::Config {
                    key: key.into(),
                    message: format!("value must be finite, got {value}"),
                });
            }
        }
        if self.n < 2 {
            return Err(Error::Config {
                key: "n".into(),
                message: format!("dimension must be at least 2, got {}", self.n),
            });
        }
        if let Some(&bad) = self.n_grid.iter().find(|&&m| m < 2) {
            return Err(Error::Config {
                key: "n_grid".into(),
                message: format!("dimension must be at least 2, got {bad}"),
            });
        }
        if self.replicas == 0 {
            return Err(Error::Config {
                key: "replicas".into(),
                message: "need at least one replica".into(),
            });
        }
        if self.bins == 0 {
            return Err(Error::Config { key: "bins".into(), message: "need at least one bin".into() });
        }
        if self.kind == ExperimentKind::SmallVals && self.threshold.is_none() && self.c_exp <= 1.0
        {
            return Err(Error::Config {
                key: "c_exp".into(),
                message: format!("small-values exponent must exceed 1, got {}", self.c_exp),
            });
        }
        if let (Some(t1), Some(t2)) = (self.t_phase1, self.t_total) {
            if t1 >= t2 {
                return Err(Error::Config {
                    key: "t_total".into(),
                    message: format!("need t_phase1 < t_total, got {t1} >= {t2}"),
                });
            }
        }
        self.tuning.validate().map_err(|e| Error::Config {
            key: "q_prime".into(),
            message: e.to_string(),
        })?;
        Ok(())
    }

    /// The dimensions this run covers.
    pub fn dimensions(&self) -> Vec<usize> {
        if self.n_grid.is_empty() {
            vec![self.n]
        } else {
            self.n_grid.clone()
        }
    }

    /// Phase lengths for two-phase runs at dimension `n`:
    /// `t_phase1 = ceil((4a + 5) n ln n)` and a phase-2 window of
    /// `ceil(5 n ln n)` unless overridden.
    pub fn phase_lengths(&self, n: usize) -> (u64, u64) {
        let nlogn = n as f64 * (n as f64).ln();
        let t1 = self
            .t_phase1
            .unwrap_or_else(|| ((4.0 * self.tuning.a + 5.0) * nlogn).ceil() as u64);
        let t2 = self.t_total.unwrap_or_else(|| t1 + (5.0 * nlogn).ceil().max(1.0) as u64);
        (t1, t2.max(t1 + 1))
    }

    /// Edge count for the partition experiment at dimension `n`.
    pub fn edge_count(&self, n: usize) -> u64 {
        if self.edges > 0 {
            self.edges
        } else {
            ((0.5 + 2.0 * self.epsilon) * n as f64 * (n as f64).ln()).ceil() as u64
        }
    }
}

/// One statistic: the estimate, its uncertainty, and the reference value it
/// is compared against. Flat so it maps directly onto a CSV row.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StatRow {
    pub experiment: String,
    pub n: usize,
    pub t: Option<u64>,
    pub replica: Option<u64>,
    pub stat: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    /// Closed-form reference: an exact value or a proved bound (see `note`).
    pub reference: Option<f64>,
    pub seed: u64,
    pub note: Option<String>,
}

impl StatRow {
    pub(crate) fn new(experiment: &str, n: usize, seed: u64, stat: &str, value: f64) -> Self {
        Self {
            experiment: experiment.into(),
            n,
            t: None,
            replica: None,
            stat: stat.into(),
            value,
            stderr: None,
            ci_low: None,
            ci_high: None,
            reference: None,
            seed,
            note: None,
        }
    }

    pub(crate) fn at_t(mut self, t: u64) -> Self {
        self.t = Some(t);
        self
    }

    pub(crate) fn with_se(mut self, se: f64) -> Self {
        self.stderr = Some(se);
        let z = crate::stats::Z_99;
        self.ci_low = Some(self.value - z * se);
        self.ci_high = Some(self.value + z * se);
        self
    }

    pub(crate) fn with_wilson(mut self, successes: u64, trials: u64) -> Self {
        let (lo, hi) = crate::stats::wilson_interval(successes, trials, crate::stats::Z_99);
        self.ci_low = Some(lo);
        self.ci_high = Some(hi);
        let p = self.value;
        self.stderr = Some((p * (1.0 - p) / trials as f64).sqrt());
        self
    }

    pub(crate) fn with_reference(mut self, reference: f64, note: &str) -> Self {
        self.reference = Some(reference);
        self.note = Some(note.into());
        self
    }

    pub(crate) fn per_replica(mut self, replica: u64) -> Self {
        self.replica = Some(replica);
        self
    }
}

/// One experiment's output: the config echo, the statistic rows, optional
/// per-replica coupling outcomes, and wall-clock metadata.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub rows: Vec<StatRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<CouplingOutcome>,
    pub duration_ms: f64,
    pub timestamp: String,
}

impl ResultRecord {
    pub(crate) fn new(cfg: &ExperimentConfig, rows: Vec<StatRow>) -> Self {
        Self {
            experiment: cfg.kind.name().into(),
            config: cfg.clone(),
            rows,
            outcomes: Vec::new(),
            duration_ms: 0.0,
            timestamp: String::new(),
        }
    }

    /// The headline statistic for one-line CLI summaries: the first row.
    pub fn headline(&self) -> Option<&StatRow> {
        self.rows.iter().find(|r| r.replica.is_none())
    }

    /// Clears the volatile fields (wall clock and timestamp), leaving only
    /// seed-determined content. Used by the determinism checks.
    pub fn strip_volatile(&mut self) {
        self.duration_ms = 0.0;
        self.timestamp = String::new();
    }
}

/// Stream-id spacing between grid points: replica `r` of grid point `g`
/// draws from stream `g << 32 | r`.
pub(crate) const STREAM_SPACING: u64 = 1 << 32;

/// Maps replicas over a deterministic worker pool: replica `r` owns the
/// stream `(seed, stream_base + r)` and results come back in replica order,
/// so the outcome is identical for every thread count.
pub(crate) fn run_replicas<T, F>(
    threads: usize,
    replicas: u64,
    seed: u64,
    stream_base: u64,
    body: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut RngStream) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidExperiment(format!("worker pool: {e}")))?;
    pool.install(|| {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = RngStream::new(seed, stream_base + r);
                body(r, &mut rng)
            })
            .collect()
    })
}

/// Runs the configured experiment and returns its records.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let started = std::time::Instant::now();
    let mut records = match cfg.kind {
        ExperimentKind::Walk => mixing::walk_experiment(cfg)?,
        ExperimentKind::Mixing => mixing::mixing_diagnostics(cfg)?,
        ExperimentKind::Contract => contraction::contraction_experiment(cfg)?,
        ExperimentKind::Coupon => coupon::coupon_collector_experiment(cfg)?,
        ExperimentKind::SmallVals => small_values::small_values_experiment(cfg)?,
        ExperimentKind::Partition => partition_conn::partition_experiment(cfg)?,
        ExperimentKind::Couple => couple_exp::couple_experiment(cfg)?,
        ExperimentKind::Coalesce => coalescence::coalescence_experiment(cfg)?,
    };
    let elapsed = started.elapsed().as_secs_f64() * 1e3;
    let stamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
    for rec in &mut records {
        rec.duration_ms = elapsed;
        rec.timestamp = stamp.clone();
    }
    Ok(records)
}

pub use coalescence::coalescence_experiment;
pub use contraction::contraction_experiment;
pub use couple_exp::couple_experiment;
pub use coupon::coupon_collector_experiment;
pub use mixing::{mixing_diagnostics, walk_experiment};
pub use partition_conn::partition_experiment;
pub use small_values::small_values_experiment;
