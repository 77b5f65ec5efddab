//! Connectivity probability of the pair multigraph.
//!
//! The backward partition process fully merges exactly when the multigraph
//! with the schedule's pairs as edges is connected, so this experiment
//! estimates `P[m uniform edges connect n vertices]` (one union-find pass
//! per schedule) against the lower bound `1 - 2 n^{-eps}`, valid for
//! `m > (1/2 + 2 eps) n ln n`.

use super::{run_replicas, ExperimentConfig, ResultRecord, StatRow};
use crate::error::Result;
use crate::partition::{build_partitions, is_fully_merged, PairSchedule};
use crate::stats;

pub fn partition_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let n = cfg.n;
    let name = cfg.kind.name();
    let m = cfg.edge_count(n);

    let merged: Vec<bool> = run_replicas(cfg.threads, cfg.replicas, cfg.seed, 0, |_r, rng| {
        let schedule = PairSchedule::sample(n, 0, m, rng)?;
        Ok(is_fully_merged(&build_partitions(&schedule)))
    })?;
    let count = merged.iter().filter(|&&c| c).count() as u64;
    let p_hat = count as f64 / cfg.replicas as f64;

    let mut rows = vec![
        StatRow::new(name, n, cfg.seed, "connectivity", p_hat)
            .at_t(m)
            .with_wilson(count, cfg.replicas)
            .with_reference(
                stats::connectivity_lower_bound(n, cfg.epsilon),
                "lower bound 1 - 2 n^{-eps}",
            ),
        StatRow::new(name, n, cfg.seed, "edges", m as f64),
    ];

    if cfg.per_replica {
        for (r, &c) in merged.iter().enumerate() {
            rows.push(
                StatRow::new(name, n, cfg.seed, "connected", c as u64 as f64)
                    .per_replica(r as u64),
            );
        }
    }

    Ok(vec![ResultRecord::new(cfg, rows)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn two_vertices_one_edge_always_connect() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Partition,
            n: 2,
            edges: 1,
            replicas: 300,
            ..Default::default()
        };
        let recs = partition_experiment(&cfg).unwrap();
        assert_eq!(recs[0].rows[0].value, 1.0);
    }

    #[test]
    fn small_case_matches_enumeration() {
        // n = 3, m = 2: connected iff the two edges differ -> exactly 2/3.
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Partition,
            n: 3,
            edges: 2,
            replicas: 40_000,
            seed: 0,
            ..Default::default()
        };
        let recs = partition_experiment(&cfg).unwrap();
        let row = &recs[0].rows[0];
        assert!(row.ci_low.unwrap() <= 2.0 / 3.0 && 2.0 / 3.0 <= row.ci_high.unwrap());
    }

    #[test]
    fn default_edges_satisfy_bound_smoke() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Partition,
            n: 20,
            replicas: 2_000,
            seed: 4,
            ..Default::default()
        };
        let recs = partition_experiment(&cfg).unwrap();
        let row = &recs[0].rows[0];
        assert!(row.value >= row.reference.unwrap() - 4.0 * row.stderr.unwrap().max(1e-4));
    }
}
