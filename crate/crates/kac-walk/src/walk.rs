//! Kac's walk on the unit sphere: state, single-step dynamics, long runs,
//! and the stationary (Haar) sampler.
//!
//! The chain lives on `S^{n-1} = { x in R^n : sum_i x[i]^2 = 1 }`. One step
//! picks an ordered coordinate pair `i < j` and an angle `theta`, both
//! uniform, and applies the planar rotation by `theta` to `(x[i], x[j])`,
//! leaving every other coordinate untouched. Rotations preserve the norm to
//! machine precision; long runs renormalize periodically to cap drift.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Relative tolerance on `|norm^2 - 1|` at externally visible points.
pub const NORM_TOL: f64 = 1e-9;

/// Long runs renormalize every this many steps. Rotation drift accumulates
/// like sqrt(steps) * eps, so this keeps drift orders of magnitude under
/// [`NORM_TOL`].
pub const RENORM_INTERVAL: u64 = 10_000;

/// A point on the sphere `S^{n-1}`, the walk's state.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SphereState {
    coords: Vec<f64>,
}

impl SphereState {
    /// Wraps coordinates that already satisfy the norm invariant.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall(coords.len()));
        }
        let norm_sq: f64 = coords.iter().map(|c| c * c).sum();
        if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NormOutOfTolerance { norm_sq, tol: NORM_TOL });
        }
        Ok(Self { coords })
    }

    /// Normalizes arbitrary (nonzero, finite) coordinates onto the sphere.
    pub fn from_unnormalized(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall(coords.len()));
        }
        let mut state = Self { coords };
        renormalize_in_place(&mut state)?;
        Ok(state)
    }

    /// The standard basis vector `e_k` (0-based `k`).
    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if k >= n {
            return Err(Error::InvalidIndices { i: k + 1, j: k + 1, n });
        }
        let mut coords = vec![0.0; n];
        coords[k] = 1.0;
        Ok(Self { coords })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    /// The squared-coordinate view of this state (each entry `x[i]^2`).
    pub fn squared(&self) -> Vec<f64> {
        self.coords.iter().map(|c| c * c).collect()
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }
}

/// One step's randomness: the coordinate pair and the rotation angle.
///
/// Indices are stored 0-based; the 1-based convention used in prose and CLI
/// output converts at this boundary via [`UpdateTriple::from_one_based`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UpdateTriple {
    i: usize,
    j: usize,
    theta: f64,
}

impl UpdateTriple {
    /// Builds from 0-based indices. `theta` is reduced modulo `2*pi`.
    pub fn new(i: usize, j: usize, theta: f64) -> Result<Self> {
        if i >= j {
            return Err(Error::InvalidIndices { i: i + 1, j: j + 1, n: 0 });
        }
        Ok(Self { i, j, theta: reduce_angle(theta) })
    }

    /// Builds from the 1-based convention used in documentation.
    pub fn from_one_based(i: usize, j: usize, theta: f64) -> Result<Self> {
        if i == 0 || j == 0 {
            return Err(Error::InvalidIndices { i, j, n: 0 });
        }
        Self::new(i - 1, j - 1, theta)
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Reduces an angle to `[0, 2*pi)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut t = theta % tau;
    if t < 0.0 {
        t += tau;
    }
    // `%` can round to tau itself for inputs just below a multiple of tau.
    if t >= tau {
        t = 0.0;
    }
    t
}

/// Rotates `(coords[i], coords[j])` by `theta` in place.
pub(crate) fn rotate_pair(coords: &mut [f64], i: usize, j: usize, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    let (a, b) = (coords[i], coords[j]);
    coords[i] = c * a - s * b;
    coords[j] = s * a + c * b;
}

/// Places `(coords[i], coords[j])` at polar angle `phi`, preserving the pair
/// radius. Equivalent to some rotation of the pair, so it is a valid walk
/// update whenever `phi` is uniform.
pub(crate) fn place_pair(coords: &mut [f64], i: usize, j: usize, phi: f64) {
    let r = coords[i].hypot(coords[j]);
    coords[i] = r * phi.cos();
    coords[j] = r * phi.sin();
}

/// Applies one walk step `F(i, j, theta, state)`.
///
/// Coordinates `i`, `j` are replaced by their rotation by `theta`; all other
/// coordinates are bit-identical to the input.
pub fn kac_step(state: &SphereState, u: &UpdateTriple) -> Result<SphereState> {
    if u.j >= state.n() {
        return Err(Error::InvalidIndices { i: u.i + 1, j: u.j + 1, n: state.n() });
    }
    let mut out = state.clone();
    rotate_pair(out.coords_mut(), u.i, u.j, u.theta);
    Ok(out)
}

/// Draws one update: the pair uniform over the `n(n-1)/2` unordered pairs,
/// the angle uniform on `[0, 2*pi)`, independently.
pub fn sample_update(n: usize, rng: &mut RngStream) -> Result<UpdateTriple> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let (i, j) = sample_pair(n, rng);
    Ok(UpdateTriple { i, j, theta: rng.angle() })
}

/// Uniform ordered pair `(i, j)` with `i < j < n` (0-based).
pub(crate) fn sample_pair(n: usize, rng: &mut RngStream) -> (usize, usize) {
    let a = rng.below(n);
    let mut b = rng.below(n - 1);
    if b >= a {
        b += 1;
    }
    (a.min(b), a.max(b))
}

/// Runs the walk for `steps` steps with fresh uniform updates, renormalizing
/// every [`RENORM_INTERVAL`] steps.
pub fn run_walk(initial: &SphereState, steps: u64, rng: &mut RngStream) -> Result<SphereState> {
    let n = initial.n();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let mut state = initial.clone();
    for step in 0..steps {
        let (i, j) = sample_pair(n, rng);
        let theta = rng.angle();
        rotate_pair(state.coords_mut(), i, j, theta);
        if (step + 1) % RENORM_INTERVAL == 0 {
            renormalize_in_place(&mut state)?;
        }
    }
    Ok(state)
}

/// Draws a Haar-distributed point: `n` independent standard normals,
/// normalized to unit length. Redraws the (astronomically unlikely) zero
/// vector.
pub fn sample_uniform_sphere(n: usize, rng: &mut RngStream) -> Result<SphereState> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    loop {
        let coords: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let norm_sq: f64 = coords.iter().map(|c| c * c).sum();
        if norm_sq > 0.0 && norm_sq.is_finite() {
            let inv = 1.0 / norm_sq.sqrt();
            return Ok(SphereState { coords: coords.into_iter().map(|c| c * inv).collect() });
        }
    }
}

/// Rescales the state to unit norm.
pub fn renormalize(state: &SphereState) -> Result<SphereState> {
    let mut out = state.clone();
    renormalize_in_place(&mut out)?;
    Ok(out)
}

pub(crate) fn renormalize_in_place(state: &mut SphereState) -> Result<()> {
    let norm_sq = state.norm_sq();
    if norm_sq <= 0.0 || !norm_sq.is_finite() {
        return Err(Error::DegenerateVector);
    }
    let inv = 1.0 / norm_sq.sqrt();
    for c in state.coords.iter_mut() {
        *c *= inv;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {a} ~ {b} within {tol}");
    }

    #[test]
    fn zero_angle_is_identity() {
        let x = SphereState::from_unnormalized(vec![0.3, -0.4, 0.5, 0.7]).unwrap();
        let u = UpdateTriple::new(0, 1, 0.0).unwrap();
        let y = kac_step(&x, &u).unwrap();
        assert_eq!(x.coords(), y.coords());
    }

    #[test]
    fn quarter_turn_moves_basis_vector() {
        let x = SphereState::basis(3, 0).unwrap();
        let u = UpdateTriple::new(0, 1, FRAC_PI_2).unwrap();
        let y = kac_step(&x, &u).unwrap();
        assert_close(y.coords()[0], 0.0, 1e-15);
        assert_close(y.coords()[1], 1.0, 1e-15);
        assert_eq!(y.coords()[2], 0.0);
    }

    #[test]
    fn rotation_preserves_norm_over_many_angles() {
        let x = SphereState::new(vec![0.6, 0.8]).unwrap();
        let mut rng = RngStream::new(11, 0);
        for _ in 0..1_000_000 {
            let u = UpdateTriple::new(0, 1, rng.angle()).unwrap();
            let y = kac_step(&x, &u).unwrap();
            assert_close(y.norm_sq(), 1.0, 1e-12);
        }
    }

    #[test]
    fn untouched_coordinates_are_bit_identical() {
        let mut rng = RngStream::new(5, 0);
        let x = sample_uniform_sphere(6, &mut rng).unwrap();
        let u = UpdateTriple::new(1, 4, 1.234).unwrap();
        let y = kac_step(&x, &u).unwrap();
        for k in [0usize, 2, 3, 5] {
            assert_eq!(x.coords()[k].to_bits(), y.coords()[k].to_bits());
        }
    }

    #[test]
    fn invalid_indices_rejected() {
        let x = SphereState::basis(3, 0).unwrap();
        assert!(UpdateTriple::new(2, 1, 0.0).is_err());
        assert!(UpdateTriple::new(1, 1, 0.0).is_err());
        let u = UpdateTriple::new(1, 3, 0.0).unwrap();
        assert!(kac_step(&x, &u).is_err());
        assert!(UpdateTriple::from_one_based(1, 2, 0.0).is_ok());
        assert!(UpdateTriple::from_one_based(0, 2, 0.0).is_err());
    }

    #[test]
    fn pair_sampling_n2_is_the_only_pair() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            let u = sample_update(2, &mut rng).unwrap();
            assert_eq!((u.i(), u.j()), (0, 1));
        }
    }

    #[test]
    fn pair_sampling_uniform_over_pairs_n4() {
        // Multinomial oracle: each of the 6 pairs has p = 1/6; allow 4 sigma.
        let mut rng = RngStream::new(2024, 0);
        let draws = 1_000_000usize;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..draws {
            let u = sample_update(4, &mut rng).unwrap();
            *counts.entry((u.i(), u.j())).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        let p = 1.0 / 6.0;
        let sigma = (p * (1.0 - p) / draws as f64).sqrt();
        for (_, c) in counts {
            let freq = c as f64 / draws as f64;
            assert_close(freq, p, 4.0 * sigma);
        }
    }

    #[test]
    fn angle_mean_matches_uniform_law() {
        // theta ~ Unif[0, 2pi): mean pi, sd 2pi/sqrt(12).
        let mut rng = RngStream::new(3, 0);
        let draws = 1_000_000usize;
        let mean = (0..draws)
            .map(|_| sample_update(3, &mut rng).unwrap().theta())
            .sum::<f64>()
            / draws as f64;
        let se = TAU / 12f64.sqrt() / (draws as f64).sqrt();
        assert_close(mean, PI, 4.0 * se);
    }

    #[test]
    fn run_walk_zero_steps_returns_input() {
        let x = SphereState::from_unnormalized(vec![1.0, 2.0, 3.0]).unwrap();
        let mut rng = RngStream::new(9, 0);
        let y = run_walk(&x, 0, &mut rng).unwrap();
        assert_eq!(x.coords(), y.coords());
    }

    #[test]
    fn run_walk_is_bit_reproducible() {
        let x = SphereState::basis(5, 0).unwrap();
        let a = run_walk(&x, 2_000, &mut RngStream::new(42, 17)).unwrap();
        let b = run_walk(&x, 2_000, &mut RngStream::new(42, 17)).unwrap();
        for (u, v) in a.coords().iter().zip(b.coords()) {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn long_run_stays_normalized() {
        let x = SphereState::basis(4, 0).unwrap();
        let y = run_walk(&x, 25_000, &mut RngStream::new(8, 0)).unwrap();
        assert_close(y.norm_sq(), 1.0, NORM_TOL);
    }

    #[test]
    fn haar_sampler_norm_and_symmetry() {
        let mut rng = RngStream::new(6, 0);
        let draws = 100_000usize;
        let mut sum_first = 0.0;
        for _ in 0..draws {
            let x = sample_uniform_sphere(5, &mut rng).unwrap();
            assert_close(x.norm_sq(), 1.0, 1e-12);
            sum_first += x.coords()[0];
        }
        // E[x_1] = 0 with Var = 1/n; allow 4 sigma.
        let se = (1.0 / 5.0f64).sqrt() / (draws as f64).sqrt();
        assert_close(sum_first / draws as f64, 0.0, 4.0 * se);
    }

    #[test]
    fn renormalize_examples() {
        let unit = SphereState::new(vec![1.0, 0.0]).unwrap();
        let again = renormalize(&unit).unwrap();
        assert_close(again.coords()[0], 1.0, f64::EPSILON);

        let scaled = renormalize(&SphereState { coords: vec![2.0, 0.0, 0.0] }).unwrap();
        assert_eq!(scaled.coords(), &[1.0, 0.0, 0.0]);

        let mut drifted = SphereState::basis(3, 1).unwrap();
        drifted.coords_mut()[1] = (1.0f64 + 1e-10).sqrt();
        let fixed = renormalize(&drifted).unwrap();
        assert_close(fixed.norm_sq(), 1.0, 1e-15);

        assert!(renormalize(&SphereState { coords: vec![0.0, 0.0] }).is_err());
    }

    #[test]
    fn state_constructor_enforces_invariants() {
        assert!(SphereState::new(vec![1.0]).is_err());
        assert!(SphereState::new(vec![0.9, 0.1]).is_err());
        assert!(SphereState::new(vec![0.6, 0.8]).is_ok());
    }

    proptest! {
        #[test]
        fn prop_step_norm_drift_below_tolerance(
            seed in 0u64..1_000_000,
            theta in -100.0f64..100.0,
            n in 2usize..12,
        ) {
            let mut rng = RngStream::new(seed, 0);
            let x = sample_uniform_sphere(n, &mut rng).unwrap();
            let (i, j) = sample_pair(n, &mut rng);
            let u = UpdateTriple::new(i, j, theta).unwrap();
            let y = kac_step(&x, &u).unwrap();
            prop_assert!((y.norm_sq() - x.norm_sq()).abs() <= 1e-14);
        }

        #[test]
        fn prop_angle_reduction_lands_in_range(theta in proptest::num::f64::NORMAL) {
            let t = reduce_angle(theta);
            prop_assert!((0.0..TAU).contains(&t));
        }
    }
}
