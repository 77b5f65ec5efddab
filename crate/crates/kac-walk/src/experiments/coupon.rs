//! Coupon-collector coverage of the coordinate set.
//!
//! `tau` is the number of steps until every coordinate has appeared in some
//! update pair. The tail satisfies `P[tau > t] <= n e^{-t/n}`, and the exact
//! tail comes from inclusion-exclusion over untouched coordinate subsets;
//! both are emitted next to the Monte Carlo estimate. The row at
//! `t1 = ceil(0.4 n ln n)` is the pre-mixing discriminator: a walk started
//! at a point mass still has an untouched (hence unchanged) coordinate with
//! this probability.

use super::{run_replicas, ExperimentConfig, ResultRecord, StatRow};
use crate::error::Result;
use crate::stats;
use crate::walk::sample_pair;

pub(crate) fn default_t_grid(n: usize) -> Vec<u64> {
    let nf = n as f64;
    vec![n as u64, (2.0 * nf) as u64, (5.0 * nf) as u64, (nf * nf) as u64]
}

/// `ceil(0.4 n ln n)`, the discriminator time.
pub fn discriminator_time(n: usize) -> u64 {
    (0.4 * n as f64 * (n as f64).ln()).ceil() as u64
}

pub fn coupon_collector_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let n = cfg.n;
    let name = cfg.kind.name();
    let grid = if cfg.t_grid.is_empty() { default_t_grid(n) } else { cfg.t_grid.clone() };
    let t1 = discriminator_time(n);
    let cap = grid.iter().copied().max().unwrap_or(0).max(t1) + 1;

    let taus = run_replicas(cfg.threads, cfg.replicas, cfg.seed, 0, |_r, rng| {
        let mut touched = vec![false; n];
        let mut remaining = n;
        for step in 1..=cap {
            let (i, j) = sample_pair(n, rng);
            for k in [i, j] {
                if !touched[k] {
                    touched[k] = true;
                    remaining -= 1;
                }
            }
            if remaining == 0 {
                return Ok(step);
            }
        }
        Ok(cap + 1) // censored beyond every requested time
    })?;

    let tail = |t: u64| taus.iter().filter(|&&tau| tau > t).count() as u64;

    let mut rows = Vec::new();
    let uncovered = tail(t1);
    rows.push(
        StatRow::new(name, n, cfg.seed, "uncovered_at_t1", uncovered as f64 / cfg.replicas as f64)
            .at_t(t1)
            .with_wilson(uncovered, cfg.replicas)
            .with_reference(
                stats::untouched_probability_exact(n, t1),
                "exact inclusion-exclusion",
            ),
    );
    for &t in &grid {
        let count = tail(t);
        rows.push(
            StatRow::new(name, n, cfg.seed, "tail_prob", count as f64 / cfg.replicas as f64)
                .at_t(t)
                .with_wilson(count, cfg.replicas)
                .with_reference(stats::coupon_bound(n, t), "upper bound n e^{-t/n}"),
        );
        rows.push(
            StatRow::new(name, n, cfg.seed, "tail_prob_exact", count as f64 / cfg.replicas as f64)
                .at_t(t)
                .with_wilson(count, cfg.replicas)
                .with_reference(
                    stats::untouched_probability_exact(n, t),
                    "exact inclusion-exclusion",
                ),
        );
    }

    if cfg.per_replica {
        for (r, &tau) in taus.iter().enumerate() {
            rows.push(
                StatRow::new(name, n, cfg.seed, "tau", tau as f64).per_replica(r as u64),
            );
        }
    }

    Ok(vec![ResultRecord::new(cfg, rows)])
}
