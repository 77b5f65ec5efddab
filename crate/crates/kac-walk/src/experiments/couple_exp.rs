//! Bare non-Markovian coupling runs (`couple` subcommand).
//!
//! Starts are constructed per [`StartMode`]: `near` (the default) draws the
//! first chain Haar conditioned on a coordinate floor and rotates it by a
//! tiny angle for the second, `equal` uses identical chains, `random` an
//! independent Haar pair. One window of the non-Markovian coupling is run
//! per replica and the outcome flags are aggregated.

use super::{run_replicas, ExperimentConfig, ResultRecord, StartMode, StatRow};
use crate::coupling::{near_coupled_start, nonmarkovian_coupling_run, CoupledPair, CouplingOutcome};
use crate::error::Result;
use crate::rng::RngStream;
use crate::stats;
use crate::walk::sample_uniform_sphere;

fn make_start(cfg: &ExperimentConfig, rng: &mut RngStream) -> Result<CoupledPair> {
    match cfg.start {
        StartMode::Equal => {
            let x = sample_uniform_sphere(cfg.n, rng)?;
            CoupledPair::new(x.clone(), x, 0)
        }
        StartMode::Random | StartMode::Worst => {
            let x = sample_uniform_sphere(cfg.n, rng)?;
            let y = sample_uniform_sphere(cfg.n, rng)?;
            CoupledPair::new(x, y, 0)
        }
        StartMode::Auto | StartMode::Near => {
            near_coupled_start(cfg.n, cfg.min_coord_sq, cfg.perturbation, rng)
        }
    }
}

pub fn couple_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let n = cfg.n;
    let name = cfg.kind.name();
    let window = if cfg.steps == 0 {
        (5.0 * n as f64 * (n as f64).ln()).ceil() as u64
    } else {
        cfg.steps
    };

    let outcomes: Vec<CouplingOutcome> =
        run_replicas(cfg.threads, cfg.replicas, cfg.seed, 0, |_r, rng| {
            let start = make_start(cfg, rng)?;
            nonmarkovian_coupling_run(&start, 0, window, &cfg.tuning, rng)
        })?;

    let replicas = cfg.replicas;
    let count = |f: &dyn Fn(&CouplingOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as u64;

    let coalesced = count(&|o| o.coalesced);
    let merged = count(&|o| o.partition_merged);
    let good = count(&|o| o.good_events_ok);
    let floor_ok = count(&|o| o.coord_floor_ok);
    let merge_total: u64 = outcomes.iter().map(|o| o.merge_successes.len() as u64).sum();
    let merge_hits: u64 = outcomes
        .iter()
        .map(|o| o.merge_successes.iter().filter(|&&s| s).count() as u64)
        .sum();
    let closeness: u64 = outcomes.iter().map(|o| o.closeness_violations).sum();
    let conservation: u64 = outcomes.iter().map(|o| o.conservation_violations).sum();
    let (l1_mean, l1_se) =
        stats::mean_and_se(&outcomes.iter().map(|o| o.final_sq_l1).collect::<Vec<_>>());
    let (dist_mean, dist_se) =
        stats::mean_and_se(&outcomes.iter().map(|o| o.final_state_dist).collect::<Vec<_>>());

    let frac = |c: u64| c as f64 / replicas as f64;
    let mut rows = vec![
        StatRow::new(name, n, cfg.seed, "coalescence", frac(coalesced))
            .at_t(window)
            .with_wilson(coalesced, replicas),
        StatRow::new(name, n, cfg.seed, "partition_merged", frac(merged))
            .with_wilson(merged, replicas),
        StatRow::new(name, n, cfg.seed, "good_events", frac(good)).with_wilson(good, replicas),
        StatRow::new(name, n, cfg.seed, "coord_floor", frac(floor_ok))
            .with_wilson(floor_ok, replicas),
        StatRow::new(
            name,
            n,
            cfg.seed,
            "merge_success_rate",
            if merge_total > 0 { merge_hits as f64 / merge_total as f64 } else { f64::NAN },
        )
        .with_reference(cfg.tuning.merge_success_bound(n), "lower bound 1 - 6e3 n^{-c}"),
        StatRow::new(name, n, cfg.seed, "closeness_violations", closeness as f64)
            .with_reference(0.0, "must be zero"),
        StatRow::new(name, n, cfg.seed, "conservation_violations", conservation as f64)
            .with_reference(0.0, "must be zero"),
        StatRow::new(name, n, cfg.seed, "final_sq_l1_mean", l1_mean).with_se(l1_se),
        StatRow::new(name, n, cfg.seed, "final_state_dist_mean", dist_mean).with_se(dist_se),
    ];

    if cfg.per_replica {
        for (r, o) in outcomes.iter().enumerate() {
            rows.push(
                StatRow::new(name, n, cfg.seed, "coalesced", o.coalesced as u64 as f64)
                    .at_t(window)
                    .per_replica(r as u64),
            );
        }
    }

    let mut record = ResultRecord::new(cfg, rows);
    if cfg.per_replica {
        record.outcomes = outcomes;
    }
    Ok(vec![record])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ExperimentKind;

    #[test]
    fn equal_starts_coalesce_whenever_merged() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Couple,
            n: 5,
            replicas: 100,
            seed: 2,
            start: StartMode::Equal,
            per_replica: true,
            ..Default::default()
        };
        let recs = couple_experiment(&cfg).unwrap();
        let rows = &recs[0].rows;
        let coalesced = rows.iter().find(|r| r.stat == "coalescence").unwrap().value;
        let merged = rows.iter().find(|r| r.stat == "partition_merged").unwrap().value;
        assert_eq!(coalesced, merged, "identical chains coalesce exactly when merged");
        assert_eq!(recs[0].outcomes.len(), 100);
    }

    #[test]
    fn near_starts_mostly_coalesce_smoke() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Couple,
            n: 10,
            replicas: 120,
            seed: 6,
            ..Default::default()
        };
        let recs = couple_experiment(&cfg).unwrap();
        let rows = &recs[0].rows;
        assert!(rows.iter().find(|r| r.stat == "coalescence").unwrap().value >= 0.9);
        assert_eq!(rows.iter().find(|r| r.stat == "closeness_violations").unwrap().value, 0.0);
        assert_eq!(rows.iter().find(|r| r.stat == "conservation_violations").unwrap().value, 0.0);
    }
}
