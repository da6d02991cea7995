//! Reference implementations and fixtures for tests.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridMap, NodeId, PathCost};

/// Plain Dijkstra over the grid edges from `source`. Blocked and unreachable
/// cells map to `None`.
pub fn ucs_distances(map: &GridMap, source: NodeId) -> Vec<Option<PathCost>> {
    let mut dist: Vec<Option<PathCost>> = vec![None; map.cell_count()];
    if !map.is_passable(source) {
        return dist;
    }
    let mut heap = BinaryHeap::new();
    dist[map.index(source)] = Some(PathCost::ZERO);
    heap.push(Reverse((PathCost::ZERO, source)));
    while let Some(Reverse((d, n))) = heap.pop() {
        if dist[map.index(n)].is_some_and(|best| best < d) {
            continue;
        }
        for (m, c) in map.neighbors_unchecked(n) {
            let nd = d + c;
            let slot = &mut dist[map.index(m)];
            if slot.is_none_or(|old| nd < old) {
                *slot = Some(nd);
                heap.push(Reverse((nd, m)));
            }
        }
    }
    dist
}

/// Seeded random map: each cell blocked with probability `density`.
pub fn random_map(width: u32, height: u32, density: f64, seed: u64) -> GridMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passable = vec![true; (width * height) as usize];
    for p in passable.iter_mut() {
        *p = !rng.random_bool(density);
    }
    GridMap::new(format!("random-{width}x{height}-{seed}"), width, height, passable)
}

/// Two distinct passable cells in one component, chosen with `seed`.
pub fn random_pair(map: &GridMap, seed: u64) -> Option<(NodeId, NodeId)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = map.components();
    let cells: Vec<NodeId> = map.passable_cells().collect();
    for _ in 0..1000 {
        let a = cells[rng.random_range(0..cells.len())];
        let b = cells[rng.random_range(0..cells.len())];
        if a != b && labels[map.index(a)] == labels[map.index(b)] {
            return Some((a, b));
        }
    }
    None
}
