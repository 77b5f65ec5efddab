//! Distribution-level integration tests: the Haar sampler against an
//! independent Gaussian-ratio oracle, the walk's convergence to the Beta
//! marginal, and order-stability of the replica aggregation.

use kac_walk::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use kac_walk::rng::RngStream;
use kac_walk::stats;
use kac_walk::walk::{run_walk, sample_uniform_sphere, SphereState};

/// Two-sample KS distance (sorted-merge sweep).
fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while ia < a.len() && ib < b.len() {
        if a[ia] <= b[ib] {
            ia += 1;
        } else {
            ib += 1;
        }
        d = d.max((ia as f64 / a.len() as f64 - ib as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn haar_squared_coordinate_matches_gaussian_ratio_oracle() {
    // Independent oracle: zeta_1^2 / sum_k zeta_k^2 for i.i.d. standard
    // normals, compared against the sampler's coords[0]^2 by two-sample KS.
    let n = 6;
    let draws = 20_000usize;
    let mut rng = RngStream::new(42, 0);
    let sampler: Vec<f64> = (0..draws)
        .map(|_| {
            let x = sample_uniform_sphere(n, &mut rng).unwrap();
            x.coords()[0] * x.coords()[0]
        })
        .collect();
    let mut oracle_rng = RngStream::new(43, 0);
    let oracle: Vec<f64> = (0..draws)
        .map(|_| {
            let zs: Vec<f64> = (0..n).map(|_| oracle_rng.standard_normal()).collect();
            let total: f64 = zs.iter().map(|z| z * z).sum();
            zs[0] * zs[0] / total
        })
        .collect();
    let d = two_sample_ks(&sampler, &oracle);
    let eff = draws as f64 / 2.0;
    let crit = (-(1e-3f64 / 2.0).ln() / 2.0).sqrt() / eff.sqrt();
    assert!(d < crit, "two-sample KS {d} above critical {crit}");
}

#[test]
fn haar_squared_coordinate_matches_beta_cdf() {
    // One-sample KS against Beta(1/2, (n-1)/2) at n = 5, alpha = 1e-3.
    let n = 5;
    let draws = 100_000usize;
    let mut rng = RngStream::new(44, 0);
    let samples: Vec<f64> = (0..draws)
        .map(|_| {
            let x = sample_uniform_sphere(n, &mut rng).unwrap();
            x.coords()[0] * x.coords()[0]
        })
        .collect();
    let d = stats::ks_distance(&samples, |x| stats::squared_coordinate_cdf(n, x));
    let crit = stats::ks_critical(1e-3, draws);
    assert!(d < crit, "KS {d} above critical {crit}");
}

#[test]
fn walk_converges_to_beta_marginal_n3() {
    // From the point mass at e1, ceil(200 * 3 * ln 3) = 660 steps suffice
    // for the squared first coordinate to match Beta(1/2, 1).
    let n = 3;
    let steps = (200.0 * 3.0 * 3f64.ln()).ceil() as u64;
    assert_eq!(steps, 660);
    let draws = 10_000usize;
    let start = SphereState::basis(n, 0).unwrap();
    let samples: Vec<f64> = (0..draws)
        .map(|r| {
            let mut rng = RngStream::new(45, r as u64);
            let end = run_walk(&start, steps, &mut rng).unwrap();
            end.coords()[0] * end.coords()[0]
        })
        .collect();
    let d = stats::ks_distance(&samples, |x| stats::squared_coordinate_cdf(n, x));
    let crit = stats::ks_critical(1e-3, draws);
    assert!(d < crit, "KS {d} above critical {crit}");
}

#[test]
fn aggregation_is_replica_order_stable() {
    // Partial results merge at replica granularity by concatenation, so any
    // chunking reproduces the single-worker aggregate exactly. Exercised
    // through a real experiment at several thread counts.
    let base = ExperimentConfig {
        kind: ExperimentKind::Contract,
        n: 5,
        t_grid: vec![1, 8],
        replicas: 2_000,
        seed: 46,
        ..Default::default()
    };
    let mut reference: Option<Vec<kac_walk::experiments::StatRow>> = None;
    for threads in [1usize, 2, 7] {
        let mut cfg = base.clone();
        cfg.threads = threads;
        let rows = run_experiment(&cfg).unwrap()[0].rows.clone();
        match &reference {
            None => reference = Some(rows),
            Some(want) => assert_eq!(&rows, want, "rows changed at {threads} threads"),
        }
    }
}
