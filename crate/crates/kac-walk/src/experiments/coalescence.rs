//! Full two-phase coupling runs and the coalescence-time scaling fit.
//!
//! Per dimension, phase 1 runs the proportional coupling long enough to make
//! the chains close and sign-aligned, phase 2 runs the non-Markovian
//! coupling; the events reported are the phase-1 exit failure, the partition
//! failure, and coalescence failure despite both phases going to plan. Over
//! a dimension grid, the median coupling time of successful runs is
//! regressed (log-log) against `n ln n`; desk-scale windows proportional to
//! `n ln n` should put the slope near 1.

use super::{run_replicas, ExperimentConfig, ResultRecord, StatRow, STREAM_SPACING};
use crate::coupling::{two_phase_coupling, TwoPhaseOutcome};
use crate::error::Result;
use crate::stats;
use crate::walk::SphereState;

pub fn coalescence_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let name = cfg.kind.name();
    let dims = cfg.dimensions();
    let mut records = Vec::new();
    let mut medians = Vec::new();

    for (g, &n) in dims.iter().enumerate() {
        let (t1, t2) = cfg.phase_lengths(n);
        let start = SphereState::basis(n, 0)?;
        let outs: Vec<TwoPhaseOutcome> = run_replicas(
            cfg.threads,
            cfg.replicas,
            cfg.seed,
            g as u64 * STREAM_SPACING,
            |_r, rng| two_phase_coupling(&start, t1, t2, &cfg.tuning, rng),
        )?;

        let replicas = cfg.replicas;
        let coalesced = outs.iter().filter(|o| o.outcome.coalesced).count() as u64;
        let e1 = outs.iter().filter(|o| o.outcome.phase1_close == Some(false)).count() as u64;
        let e3 = outs.iter().filter(|o| !o.outcome.partition_merged).count() as u64;
        let e2_inner = outs
            .iter()
            .filter(|o| {
                !o.outcome.coalesced
                    && o.outcome.phase1_close == Some(true)
                    && o.outcome.partition_merged
            })
            .count() as u64;
        let closeness: u64 = outs.iter().map(|o| o.outcome.closeness_violations).sum();
        let taus: Vec<f64> = outs
            .iter()
            .filter_map(|o| o.outcome.tau.map(|t| t as f64))
            .collect();
        let tau_median = stats::median(&taus);
        medians.push((n, tau_median));

        // The phase-2 window is (1/2 + 2 eps) n ln n for this eps.
        let nlogn = n as f64 * (n as f64).ln();
        let eps_window = (((t2 - t1) as f64 / nlogn) - 0.5) / 2.0;
        let frac = |c: u64| c as f64 / replicas as f64;

        let mut rows = vec![
            StatRow::new(name, n, cfg.seed, "coalescence", frac(coalesced))
                .at_t(t2)
                .with_wilson(coalesced, replicas),
            StatRow::new(name, n, cfg.seed, "phase1_fail", frac(e1)).with_wilson(e1, replicas),
            StatRow::new(name, n, cfg.seed, "partition_fail", frac(e3))
                .with_wilson(e3, replicas)
                .with_reference(
                    2.0 * (n as f64).powf(-eps_window.max(0.0)),
                    "upper bound 2 n^{-eps} at the window eps",
                ),
            StatRow::new(name, n, cfg.seed, "fail_despite_good_phases", frac(e2_inner))
                .with_wilson(e2_inner, replicas),
            StatRow::new(name, n, cfg.seed, "tau_median", tau_median).at_t(t2),
            StatRow::new(name, n, cfg.seed, "t_phase1", t1 as f64),
            StatRow::new(name, n, cfg.seed, "closeness_violations", closeness as f64)
                .with_reference(0.0, "must be zero"),
        ];

        if cfg.per_replica {
            for (r, o) in outs.iter().enumerate() {
                rows.push(
                    StatRow::new(name, n, cfg.seed, "coalesced", o.outcome.coalesced as u64 as f64)
                        .at_t(t2)
                        .per_replica(r as u64),
                );
            }
        }

        let mut record = ResultRecord::new(cfg, rows);
        if cfg.per_replica {
            record.outcomes = outs.into_iter().map(|o| o.outcome).collect();
        }
        records.push(record);
    }

    if medians.len() >= 2 && medians.iter().all(|(_, m)| m.is_finite()) {
        let xs: Vec<f64> = medians
            .iter()
            .map(|(n, _)| (*n as f64 * (*n as f64).ln()).ln())
            .collect();
        let ys: Vec<f64> = medians.iter().map(|(_, m)| m.ln()).collect();
        let slope = stats::regression_slope(&xs, &ys);
        let row = StatRow::new(name, cfg.n, cfg.seed, "tau_slope_loglog", slope)
            .with_reference(1.0, "log-log slope of median tau vs n ln n");
        records.push(ResultRecord::new(cfg, vec![row]));
    }

    Ok(records)
}
