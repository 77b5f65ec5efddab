//! The backward-in-time partition-merge process over a fixed pair schedule.
//!
//! Given the pairs `(i_t, j_t)` for `t0 <= t < t_end`, start from the
//! discrete partition of `{1..n}` at `t_end` and walk backward: at each time
//! whose pair endpoints lie in distinct blocks, merge those blocks. Walked
//! forward, blocks split at exactly the recorded merge times. The process is
//! equivalent to connectivity of the multigraph with the schedule's pairs as
//! edges: the earliest partition is a single block iff that graph is
//! connected.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stats;
use crate::walk::sample_pair;

/// Union-find with union by size and path compression.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    components: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), size: vec![1; n], components: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets containing `a` and `b`; returns false if already one.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.components -= 1;
        true
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// The fixed coordinate-pair schedule shared by both chains of a coupling.
///
/// `pairs[k]` is the (0-based, ordered) pair used at time `t0 + k`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PairSchedule {
    n: usize,
    t0: u64,
    pairs: Vec<(usize, usize)>,
}

impl PairSchedule {
    pub fn new(n: usize, t0: u64, pairs: Vec<(usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        for &(i, j) in &pairs {
            if i >= j || j >= n {
                return Err(Error::InvalidSchedule(format!(
                    "pair ({}, {}) invalid for n = {n} (0-based, need i < j < n)",
                    i, j
                )));
            }
        }
        Ok(Self { n, t0, pairs })
    }

    /// Draws a uniform schedule for times `t0 <= t < t_end`.
    pub fn sample(n: usize, t0: u64, t_end: u64, rng: &mut RngStream) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall(n));
        }
        if t_end < t0 {
            return Err(Error::InvalidSchedule(format!("t_end {t_end} < t0 {t0}")));
        }
        let pairs = (0..t_end - t0).map(|_| sample_pair(n, rng)).collect();
        Ok(Self { n, t0, pairs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn t_end(&self) -> u64 {
        self.t0 + self.pairs.len() as u64
    }

    pub fn pair_at(&self, t: u64) -> (usize, usize) {
        self.pairs[(t - self.t0) as usize]
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
}

/// One merge of the backward construction: at `time`, the blocks of the
/// partition at `time + 1` containing `i` and `j` fuse.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct MergeEvent {
    pub time: u64,
    pub i: usize,
    pub j: usize,
    /// Members of the block containing `i` in the partition at `time + 1`.
    pub block_i: Vec<usize>,
    /// Members of the block containing `j` in the partition at `time + 1`.
    pub block_j: Vec<usize>,
}

/// The full partition sequence, stored as a merge journal.
///
/// Partitions only coarsen going backward in time, so the journal (ordered by
/// time) reconstructs the partition at any `t` on demand: apply every merge
/// with `time >= t` to the discrete partition.
#[derive(Debug, Clone)]
pub struct PartitionSequence {
    n: usize,
    t0: u64,
    t_end: u64,
    /// Merge events in increasing time order.
    merges: Vec<MergeEvent>,
}

impl PartitionSequence {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t0(&self) -> u64 {
        self.t0
    }

    pub fn t_end(&self) -> u64 {
        self.t_end
    }

    /// The ordered merge times (ascending).
    pub fn merge_times(&self) -> Vec<u64> {
        self.merges.iter().map(|m| m.time).collect()
    }

    pub fn merges(&self) -> &[MergeEvent] {
        &self.merges
    }

    pub fn merge_count(&self) -> usize {
        self.merges.len()
    }

    /// Block count at time `t` (`t0 <= t <= t_end`). Each merge at time
    /// `s >= t` reduces the count at `t` by one.
    pub fn block_count_at(&self, t: u64) -> usize {
        let merged = self.merges.iter().filter(|m| m.time >= t).count();
        self.n - merged
    }

    /// Materializes the partition at time `t` as blocks of sorted members,
    /// ordered by smallest member.
    pub fn blocks_at(&self, t: u64) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.n);
        for m in self.merges.iter().filter(|m| m.time >= t) {
            uf.union(m.i, m.j);
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        let mut members: Vec<(usize, usize)> = (0..self.n).map(|v| (uf.find(v), v)).collect();
        members.sort();
        for (root, v) in members {
            by_root.entry(root).or_default().push(v);
        }
        let mut blocks: Vec<Vec<usize>> = by_root.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        blocks
    }

    /// JSON-serializable summary row (merge count, earliest block count,
    /// merge times) for downstream experiment output.
    pub fn summary(&self) -> PartitionSummary {
        PartitionSummary {
            n: self.n,
            t0: self.t0,
            t_end: self.t_end,
            merge_count: self.merge_count(),
            earliest_block_count: self.block_count_at(self.t0),
            fully_merged: is_fully_merged(self),
            merge_times: self.merge_times(),
        }
    }
}

/// Compact serialized view of a [`PartitionSequence`].
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct PartitionSummary {
    pub n: usize,
    pub t0: u64,
    pub t_end: u64,
    pub merge_count: usize,
    pub earliest_block_count: usize,
    pub fully_merged: bool,
    pub merge_times: Vec<u64>,
}

/// Builds the partition sequence for a schedule by processing pairs from
/// `t_end - 1` down to `t0`.
///
/// Each merge record captures the two blocks of the partition at `time + 1`
/// as they were just before fusing, which is exactly what the forward
/// coupling pass needs at its merge times.
pub fn build_partitions(schedule: &PairSchedule) -> PartitionSequence {
    let n = schedule.n();
    let mut uf = UnionFind::new(n);
    // members[r] holds the block of the current (time t+1) partition whose
    // union-find root is r.
    let mut members: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut merges = Vec::new();

    for offset in (0..schedule.pairs.len()).rev() {
        let (i, j) = schedule.pairs[offset];
        let (ri, rj) = (uf.find(i), uf.find(j));
        if ri == rj {
            continue;
        }
        let time = schedule.t0 + offset as u64;
        let mut block_i = members[ri].clone();
        let mut block_j = members[rj].clone();
        block_i.sort_unstable();
        block_j.sort_unstable();
        merges.push(MergeEvent { time, i, j, block_i, block_j });

        uf.union(i, j);
        let root = uf.find(i);
        let other = if root == ri { rj } else { ri };
        let moved = std::mem::take(&mut members[other]);
        members[root].extend(moved);
    }

    merges.reverse();
    PartitionSequence { n, t0: schedule.t0, t_end: schedule.t_end(), merges }
}

/// True iff the earliest partition is the single block `{1..n}`.
pub fn is_fully_merged(p: &PartitionSequence) -> bool {
    p.merge_count() == p.n - 1
}

/// A Monte Carlo connectivity estimate with its Wilson 99% interval.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct ConnectivityEstimate {
    pub n: usize,
    pub edges: u64,
    pub replicas: u64,
    pub connected: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Estimates the probability that `m` uniform (possibly repeated) edges
/// connect `n` vertices.
pub fn connectivity_probability(
    n: usize,
    m: u64,
    replicas: u64,
    rng: &mut RngStream,
) -> Result<ConnectivityEstimate> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if replicas == 0 {
        return Err(Error::InvalidExperiment("connectivity needs replicas >= 1".into()));
    }
    let mut connected = 0u64;
    for _ in 0..replicas {
        let mut uf = UnionFind::new(n);
        for _ in 0..m {
            let (i, j) = sample_pair(n, rng);
            uf.union(i, j);
            if uf.components() == 1 {
                break;
            }
        }
        if uf.components() == 1 {
            connected += 1;
        }
    }
    let estimate = connected as f64 / replicas as f64;
    let (ci_low, ci_high) = stats::wilson_interval(connected, replicas, stats::Z_99);
    Ok(ConnectivityEstimate { n, edges: m, replicas, connected, estimate, ci_low, ci_high })
}
