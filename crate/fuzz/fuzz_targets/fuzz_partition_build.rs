//! Fuzzes the backward partition builder over arbitrary pair schedules:
//! construction must never panic and the structural invariants must hold,
//! including agreement with an independent BFS connectivity oracle.

#![no_main]

use arbitrary::Arbitrary;
use kac_walk::partition::{build_partitions, is_fully_merged, PairSchedule};
use libfuzzer_sys::fuzz_target;

#[derive(Arbitrary, Debug)]
struct Input {
    n: u8,
    t0: u16,
    raw_pairs: Vec<(u8, u8)>,
}

fn bfs_connected(n: usize, pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in pairs {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

fuzz_target!(|input: Input| {
    let n = 2 + (input.n as usize % 31);
    let pairs: Vec<(usize, usize)> = input
        .raw_pairs
        .iter()
        .take(512)
        .map(|&(a, b)| {
            let i = a as usize % n;
            let mut j = b as usize % (n - 1);
            if j >= i {
                j += 1;
            }
            (i.min(j), i.max(j))
        })
        .collect();

    let schedule =
        PairSchedule::new(n, input.t0 as u64, pairs.clone()).expect("pairs valid by construction");
    let p = build_partitions(&schedule);

    assert_eq!(p.merge_count(), n - p.block_count_at(p.t0()));
    assert_eq!(is_fully_merged(&p), bfs_connected(n, &pairs));

    let blocks = p.blocks_at(p.t0());
    let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..n).collect::<Vec<_>>(), "blocks must partition the coordinates");

    // Out-of-range and non-ordered pairs are rejected, not mishandled.
    assert!(PairSchedule::new(n, 0, vec![(0, n)]).is_err());
    assert!(PairSchedule::new(n, 0, vec![(1, 1)]).is_err());
});
