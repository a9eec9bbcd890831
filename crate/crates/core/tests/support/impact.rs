//! Reachability oracle for `Model::impact_set`. Shared with the acceptance
//! suite.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use workbench_core::{Direction, Model, TraceKind, Uid};

/// Reachability by repeated relaxation over an adjacency matrix until nothing
/// changes. Deliberately shares no code with the production traversal.
pub fn closure_oracle(
    n: usize,
    edges: &[(usize, TraceKind, usize)],
    kinds: &BTreeSet<TraceKind>,
    dir: Direction,
    start: usize,
) -> BTreeSet<usize> {
    let mut adj = vec![vec![false; n]; n];
    for &(s, k, d) in edges {
        if !kinds.contains(&k) {
            continue;
        }
        match dir {
            Direction::Forward => adj[s][d] = true,
            Direction::Backward => adj[d][s] = true,
            Direction::Both => {
                adj[s][d] = true;
                adj[d][s] = true;
            }
        }
    }
    let mut reach = vec![false; n];
    reach[start] = true;
    loop {
        let mut changed = false;
        for u in 0..n {
            if !reach[u] {
                continue;
            }
            for v in 0..n {
                if adj[u][v] && !reach[v] {
                    reach[v] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (0..n).filter(|&v| v != start && reach[v]).collect()
}

/// `trials` random graphs of at most `max_nodes` nodes; the first mismatch
/// is returned.
pub fn check_impact_sets(seed: u64, trials: usize, max_nodes: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let n = rng.gen_range(1..=max_nodes);
        let mut model = Model::new();
        let nodes: Vec<Uid> = (0..n)
            .map(|i| model.register_uid(["req", "cmp"][i % 2]).unwrap())
            .collect();
        let mut edges = Vec::new();
        for _ in 0..rng.gen_range(0..=n * 2) {
            let s = rng.gen_range(0..n);
            let d = rng.gen_range(0..n);
            let k = TraceKind::ALL[rng.gen_range(0..6)];
            if model.add_trace(&nodes[s], k, &nodes[d]).is_ok() {
                edges.push((s, k, d));
            }
        }
        let kinds: BTreeSet<TraceKind> = TraceKind::ALL.into_iter().filter(|_| rng.gen_bool(0.6)).collect();
        let dir = [Direction::Forward, Direction::Backward, Direction::Both][rng.gen_range(0..3)];
        let start = rng.gen_range(0..n);
        let got = model
            .impact_set(&nodes[start], &kinds, dir)
            .map_err(|e| e.to_string())?;
        let want: BTreeSet<Uid> = closure_oracle(n, &edges, &kinds, dir, start)
            .into_iter()
            .map(|i| nodes[i].clone())
            .collect();
        if got != want {
            return Err(format!("trial {trial}: impact_set {got:?} but oracle {want:?}"));
        }
    }
    Ok(())
}
