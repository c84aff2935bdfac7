//! Seeded synthetic co-expression networks with planted modules.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphError, Network, NodeSpec, Result};

/// Target share of edges placed inside a module.
pub const INTRA_FRACTION: f64 = 0.8;

/// Module of node `i` when `n` nodes are split into `k` contiguous blocks.
fn block_of(i: usize, n: usize, k: usize) -> usize {
    i * k / n
}

fn pairs(s: u64) -> u64 {
    s * s.saturating_sub(1) / 2
}

/// Draws `count` distinct unordered pairs from a candidate class.
///
/// Sparse classes use rejection sampling; dense ones enumerate candidates
/// and take a uniform sample, so the cost stays bounded near capacity.
fn draw_pairs<R: Rng>(
    rng: &mut R,
    count: usize,
    capacity: u64,
    mut propose: impl FnMut(&mut R) -> (u32, u32),
    enumerate: impl FnOnce() -> Vec<(u32, u32)>,
    taken: &mut HashSet<(u32, u32)>,
) -> Vec<(u32, u32)> {
    if count == 0 {
        return Vec::new();
    }
    if (count as u64) * 2 <= capacity {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let (a, b) = propose(rng);
            let key = (a.min(b), a.max(b));
            if taken.insert(key) {
                out.push(key);
            }
        }
        out
    } else {
        let all = enumerate();
        let picked = sample(rng, all.len(), count);
        let out: Vec<_> = picked.into_iter().map(|i| all[i]).collect();
        taken.extend(out.iter().copied());
        out
    }
}

/// Generates `n` genes in `k` modules joined by `m` weighted edges.
///
/// Nodes are split into contiguous, near-equal blocks. Roughly 80% of edges
/// fall inside a module and 20% between modules; a class that cannot hold
/// its share spills the remainder into the other. Weights are uniform in
/// `(0, 1]`. Output is fully determined by `(n, m, k, seed)`.
pub fn generate_synthetic(n: usize, m: usize, k: usize, seed: u64) -> Result<Network> {
    if k == 0 {
        return Err(GraphError::NoModules);
    }
    let max = pairs(n as u64);
    if m as u64 > max {
        return Err(GraphError::InfeasibleEdgeCount { nodes: n, edges: m, max });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Module boundaries: module j owns nodes starts[j]..starts[j + 1].
    let mut starts = vec![0usize; k + 1];
    for i in 0..n {
        starts[block_of(i, n, k) + 1] += 1;
    }
    for j in 0..k {
        starts[j + 1] += starts[j];
    }
    let sizes: Vec<u64> = (0..k).map(|j| (starts[j + 1] - starts[j]) as u64).collect();
    let intra_cap: u64 = sizes.iter().map(|&s| pairs(s)).sum();
    let inter_cap = max - intra_cap;

    let mut intra = ((m as f64) * INTRA_FRACTION).round() as u64;
    let mut inter = m as u64 - intra;
    if intra > intra_cap {
        inter += intra - intra_cap;
        intra = intra_cap;
    }
    if inter > inter_cap {
        intra += inter - inter_cap;
        inter = inter_cap;
    }

    // Cumulative intra-pair counts choose a module proportionally to its pairs.
    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0u64;
    for &s in &sizes {
        acc += pairs(s);
        cumulative.push(acc);
    }

    let mut taken = HashSet::with_capacity(m);
    let mut pairs_out = draw_pairs(
        &mut rng,
        intra as usize,
        intra_cap,
        |rng| {
            let r = rng.random_range(0..intra_cap);
            let j = cumulative.partition_point(|&c| c <= r);
            let (lo, hi) = (starts[j], starts[j + 1]);
            let a = rng.random_range(lo..hi);
            let mut b = rng.random_range(lo..hi - 1);
            if b >= a {
                b += 1;
            }
            (a as u32, b as u32)
        },
        || {
            let mut all = Vec::with_capacity(intra_cap as usize);
            for j in 0..k {
                for a in starts[j]..starts[j + 1] {
                    for b in a + 1..starts[j + 1] {
                        all.push((a as u32, b as u32));
                    }
                }
            }
            all
        },
        &mut taken,
    );
    let inter_pairs = draw_pairs(
        &mut rng,
        inter as usize,
        inter_cap,
        |rng| loop {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if block_of(a, n, k) != block_of(b, n, k) {
                return (a as u32, b as u32);
            }
        },
        || {
            let mut all = Vec::with_capacity(inter_cap as usize);
            for a in 0..n {
                for b in starts[block_of(a, n, k) + 1]..n {
                    all.push((a as u32, b as u32));
                }
            }
            all
        },
        &mut taken,
    );
    pairs_out.extend(inter_pairs);
    pairs_out.sort_unstable();

    let width = n.saturating_sub(1).to_string().len().max(4);
    let nodes = (0..n)
        .map(|i| NodeSpec::new(format!("G{i:0width$}"), block_of(i, n, k) as u32))
        .collect();
    let edges = pairs_out
        .into_iter()
        .map(|(a, b)| (a as usize, b as usize, 1.0 - rng.random::<f64>()))
        .collect();
    Network::with_module_count(nodes, edges, k)
}
