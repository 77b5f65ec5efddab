//! Mixing diagnostics.
//!
//! For `n = 2` one step is exactly uniform in angle, so the angular
//! histogram total-variation estimate must sit below its Monte Carlo noise
//! floor. For `n >= 3` the squared first coordinate converges to
//! `Beta(1/2, (n-1)/2)`; the experiment tracks its one-sample KS distance
//! along a time grid from the point mass at `e1`, together with the
//! pre-mixing discriminator: at `t1 = ceil(0.4 n ln n)` some coordinate is
//! typically still untouched, so the chain is provably far from stationary.

use super::coupon::discriminator_time;
use super::{run_replicas, ExperimentConfig, ResultRecord, StatRow};
use crate::error::Result;
use crate::stats;
use crate::walk::{sample_pair, SphereState};

/// KS significance level used for the printed critical values.
const KS_ALPHA: f64 = 1e-3;

pub(crate) fn mixed_time(n: usize) -> u64 {
    (200.0 * n as f64 * (n as f64).ln()).ceil() as u64
}

/// Single-time marginal check (`walk` subcommand): angular TV for `n = 2`,
/// KS against the Beta law for `n >= 3`.
pub fn walk_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    if cfg.n == 2 {
        return angular_experiment(cfg, if cfg.steps == 0 { 1 } else { cfg.steps });
    }
    let steps = if cfg.steps == 0 { mixed_time(cfg.n) } else { cfg.steps };
    let mut cfg_grid = cfg.clone();
    cfg_grid.t_grid = vec![steps];
    run_marginal_grid(&cfg_grid)
}

/// Time-grid diagnostics (`mixing` subcommand).
pub fn mixing_diagnostics(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    if cfg.n == 2 {
        return angular_experiment(cfg, if cfg.steps == 0 { 1 } else { cfg.steps });
    }
    let mut cfg_grid = cfg.clone();
    if cfg_grid.t_grid.is_empty() {
        let n = cfg.n;
        let t1 = discriminator_time(n);
        cfg_grid.t_grid = vec![0, t1, 4 * t1, 16 * t1, mixed_time(n)];
    }
    run_marginal_grid(&cfg_grid)
}

fn angular_experiment(cfg: &ExperimentConfig, steps: u64) -> Result<Vec<ResultRecord>> {
    let name = cfg.kind.name();
    let angles = run_replicas(cfg.threads, cfg.replicas, cfg.seed, 0, |_r, rng| {
        let mut coords = [1.0f64, 0.0];
        for _ in 0..steps {
            // n = 2: the only pair is (0, 1).
            let theta = rng.angle();
            let (c, s) = (theta.cos(), theta.sin());
            let (a, b) = (coords[0], coords[1]);
            coords[0] = c * a - s * b;
            coords[1] = s * a + c * b;
        }
        let mut phi = coords[1].atan2(coords[0]);
        if phi < 0.0 {
            phi += std::f64::consts::TAU;
        }
        Ok(phi)
    })?;

    let tv = stats::angular_tv_vs_uniform(&angles, cfg.bins);
    let floor = stats::angular_tv_noise_floor(cfg.bins, cfg.replicas);
    let mut rows = vec![
        StatRow::new(name, 2, cfg.seed, "angular_tv", tv)
            .at_t(steps)
            .with_reference(floor, "noise floor sqrt(bins/(2 replicas))"),
        StatRow::new(name, 2, cfg.seed, "bins", cfg.bins as f64),
    ];
    if cfg.per_replica {
        for (r, &phi) in angles.iter().enumerate() {
            rows.push(StatRow::new(name, 2, cfg.seed, "angle", phi).per_replica(r as u64));
        }
    }
    Ok(vec![ResultRecord::new(cfg, rows)])
}

struct MarginalTrace {
    coord_sq_at_grid: Vec<f64>,
    untouched_at_t1: bool,
}

fn run_marginal_grid(cfg: &ExperimentConfig) -> Result<Vec<ResultRecord>> {
    let n = cfg.n;
    let name = cfg.kind.name();
    let grid = cfg.t_grid.clone();
    let t1 = discriminator_time(n);
    let max_t = grid.iter().copied().max().unwrap_or(0).max(t1);
    let start = SphereState::basis(n, 0)?;

    let traces = run_replicas(cfg.threads, cfg.replicas, cfg.seed, 0, |_r, rng| {
        let mut state = start.clone();
        let mut touched = vec![false; n];
        let mut untouched_at_t1 = true;
        let mut coord_sq_at_grid = vec![0.0; grid.len()];
        for (slot, &gt) in grid.iter().enumerate() {
            if gt == 0 {
                coord_sq_at_grid[slot] = state.coords()[0] * state.coords()[0];
            }
        }
        for t in 1..=max_t {
            let (i, j) = sample_pair(n, rng);
            crate::walk::rotate_pair(state.coords_mut(), i, j, rng.angle());
            touched[i] = true;
            touched[j] = true;
            if t == t1 {
                untouched_at_t1 = touched.iter().any(|&b| !b);
            }
            for (slot, &gt) in grid.iter().enumerate() {
                if gt == t {
                    coord_sq_at_grid[slot] = state.coords()[0] * state.coords()[0];
                }
            }
        }
        Ok(MarginalTrace { coord_sq_at_grid, untouched_at_t1 })
    })?;

    let mut rows = Vec::new();
    let uncovered = traces.iter().filter(|tr| tr.untouched_at_t1).count() as u64;
    rows.push(
        StatRow::new(
            name,
            n,
            cfg.seed,
            "uncovered_at_t1",
            uncovered as f64 / cfg.replicas as f64,
        )
        .at_t(t1)
        .with_wilson(uncovered, cfg.replicas)
        .with_reference(stats::untouched_probability_exact(n, t1), "exact inclusion-exclusion"),
    );

    let crit = stats::ks_critical(KS_ALPHA, cfg.replicas as usize);
    for (slot, &t) in grid.iter().enumerate() {
        let samples: Vec<f64> = traces.iter().map(|tr| tr.coord_sq_at_grid[slot]).collect();
        let d = stats::ks_distance(&samples, |x| stats::squared_coordinate_cdf(n, x));
        rows.push(
            StatRow::new(name, n, cfg.seed, "ks_coord_sq", d)
                .at_t(t)
                .with_reference(crit, "KS critical value at alpha = 1e-3"),
        );
    }

    if cfg.per_replica {
        let last = grid.len() - 1;
        for (r, tr) in traces.iter().enumerate() {
            rows.push(
                StatRow::new(name, n, cfg.seed, "coord_sq_final", tr.coord_sq_at_grid[last])
                    .at_t(grid[last])
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
    fn one_step_circle_is_uniform() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Walk,
            n: 2,
            replicas: 50_000,
            seed: 12,
            ..Default::default()
        };
        let recs = walk_experiment(&cfg).unwrap();
        let row = recs[0].rows.iter().find(|r| r.stat == "angular_tv").unwrap();
        assert!(
            row.value <= row.reference.unwrap(),
            "TV {} above noise floor {}",
            row.value,
            row.reference.unwrap()
        );
    }

    #[test]
    fn point_mass_has_ks_near_one_at_t0() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Mixing,
            n: 3,
            t_grid: vec![0],
            replicas: 500,
            ..Default::default()
        };
        let recs = mixing_diagnostics(&cfg).unwrap();
        let row = recs[0].rows.iter().find(|r| r.stat == "ks_coord_sq").unwrap();
        assert!(row.value > 0.99, "KS at t = 0 should be ~1, got {}", row.value);
    }

    #[test]
    fn long_run_passes_ks_smoke() {
        let n = 6;
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Mixing,
            n,
            t_grid: vec![mixed_time(n)],
            replicas: 4_000,
            seed: 9,
            ..Default::default()
        };
        let recs = mixing_diagnostics(&cfg).unwrap();
        let row = recs[0]
            .rows
            .iter()
            .filter(|r| r.stat == "ks_coord_sq")
            .last()
            .unwrap();
        assert!(
            row.value < row.reference.unwrap(),
            "KS {} above critical {}",
            row.value,
            row.reference.unwrap()
        );
    }

    #[test]
    fn discriminator_matches_oracle_smoke() {
        let cfg = ExperimentConfig {
            kind: ExperimentKind::Mixing,
            n: 10,
            t_grid: vec![5],
            replicas: 20_000,
            seed: 21,
            ..Default::default()
        };
        let recs = mixing_diagnostics(&cfg).unwrap();
        let row = recs[0].rows.iter().find(|r| r.stat == "uncovered_at_t1").unwrap();
        let exact = row.reference.unwrap();
        let se = row.stderr.unwrap();
        assert!(
            (row.value - exact).abs() <= 4.0 * se,
            "discriminator {} vs exact {exact}",
            row.value
        );
    }
}
