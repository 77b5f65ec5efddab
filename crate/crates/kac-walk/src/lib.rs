//! Simulation library for Kac's random walk on the unit sphere.
//!
//! The walk updates one uniformly random coordinate pair by a uniformly
//! random planar rotation each step; its stationary law is the Haar measure.
//! This crate provides:
//!
//! * the walk itself ([`walk`]): single steps, long runs, and a Haar sampler,
//!   all driven by deterministic splittable RNG streams ([`rng`]);
//! * the backward partition-merge process over a fixed pair schedule
//!   ([`partition`]), built on a union-find with a merge journal;
//! * two couplings of a pair of walks ([`coupling`]): the one-step
//!   proportional coupling and the schedule-fixing non-Markovian coupling
//!   with maximally coupled arcsine block statistics at merge times;
//! * reproducible Monte Carlo experiments ([`experiments`]) that measure
//!   contraction rates, coupon-collector coverage, small-coordinate
//!   probabilities, partition connectivity, coalescence rates, and mixing
//!   diagnostics, with closed-form reference values printed next to every
//!   estimate;
//! * a flat key-value config format ([`config`]) and JSONL/CSV output
//!   ([`output`]) for the `kac-walk` CLI.
//!
//! Everything downstream of a seed is bit-reproducible: replicas draw from
//! per-replica RNG streams and results aggregate in replica order, so output
//! does not depend on the worker-thread count.

pub mod config;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod output;
pub mod partition;
pub mod rng;
pub mod stats;
pub mod walk;

pub use coupling::{
    arcsine_block_params, maximal_arcsine_coupling, nonmarkovian_coupling_run, overlap_integral,
    proportional_step, two_phase_coupling, ArcsineParams, CoupledPair, CouplingOutcome,
    CouplingTuning,
};
pub use error::{Error, Result};
pub use partition::{
    build_partitions, connectivity_probability, is_fully_merged, PairSchedule, PartitionSequence,
};
pub use rng::RngStream;
pub use walk::{
    kac_step, renormalize, run_walk, sample_uniform_sphere, sample_update, SphereState,
    UpdateTriple,
};
