//! Priority-queue plumbing and the plain A* used by the planners.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::{HashMap, HashSet};

use crate::grid::{octile_cost, EdgeCost, NodeId, PathCost};
use crate::planner::Deadline;

/// `f64` with a total order, for heap keys.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Eq for Real {}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Heap entry popped in ascending `key` order from a `BinaryHeap`.
#[derive(Clone, Debug)]
pub struct MinEntry<K, V> {
    pub key: K,
    pub value: V,
}

impl<K: Ord, V> PartialEq for MinEntry<K, V> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl<K: Ord, V> Eq for MinEntry<K, V> {}

impl<K: Ord, V> Ord for MinEntry<K, V> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.cmp(&self.key)
    }
}

impl<K: Ord, V> PartialOrd for MinEntry<K, V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* from `start` to `goal` under the octile heuristic.
///
/// `successors(n, out)` must push the outgoing edges of `n`; they must be a
/// subset of the octile-cost grid edges so the heuristic stays consistent.
/// Returns the node sequence including both endpoints. Ties are broken by
/// smaller h, then by `NodeId`.
pub fn astar<F>(
    start: NodeId,
    goal: NodeId,
    mut successors: F,
    deadline: &Deadline<'_>,
) -> Option<(Vec<NodeId>, PathCost)>
where
    F: FnMut(NodeId, &mut Vec<(NodeId, EdgeCost)>),
{
    let mut open = BinaryHeap::new();
    let mut g: HashMap<NodeId, PathCost> = HashMap::new();
    let mut parent: HashMap<NodeId, NodeId> = HashMap::new();
    let mut closed: HashSet<NodeId> = HashSet::new();
    let mut buf = Vec::with_capacity(8);

    g.insert(start, PathCost::ZERO);
    let h0 = octile_cost(start, goal);
    open.push(MinEntry { key: (h0, h0, start), value: PathCost::ZERO });

    while let Some(MinEntry { key: (_, _, n), value: gn }) = open.pop() {
        if !closed.insert(n) {
            continue;
        }
        if n == goal {
            let mut path = Vec::new();
            let mut cur = n;
            path.push(cur);
            while let Some(&p) = parent.get(&cur) {
                path.push(p);
                cur = p;
            }
            path.reverse();
            return Some((path, gn));
        }
        if deadline.expired() {
            return None;
        }
        buf.clear();
        successors(n, &mut buf);
        for &(m, c) in &buf {
            if closed.contains(&m) {
                continue;
            }
            let gm = gn + c;
            if g.get(&m).is_some_and(|old| *old <= gm) {
                continue;
            }
            g.insert(m, gm);
            parent.insert(m, n);
            let h = octile_cost(m, goal);
            open.push(MinEntry { key: (gm + h, h, m), value: gm });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMap;

    #[test]
    fn min_entry_pops_smallest_key() {
        let mut heap = BinaryHeap::new();
        for k in [3, 1, 2] {
            heap.push(MinEntry { key: k, value: () });
        }
        let order: Vec<i32> = core::iter::from_fn(|| heap.pop().map(|e| e.key)).collect();
        assert_eq!(order, [1, 2, 3]);
    }

    #[test]
    fn real_orders_totally() {
        assert!(Real(1.0) < Real(2.0));
        assert_eq!(Real(0.5).cmp(&Real(0.5)), Ordering::Equal);
    }

    #[test]
    fn astar_around_wall() {
        let map = GridMap::from_ascii("w", &["...", ".@.", "..."]);
        let (path, cost) = astar(
            NodeId::new(0, 1),
            NodeId::new(2, 1),
            |n, out| out.extend(map.neighbors_unchecked(n)),
            &Deadline::unlimited(),
        )
        .unwrap();
        assert_eq!(path.first(), Some(&NodeId::new(0, 1)));
        assert_eq!(path.last(), Some(&NodeId::new(2, 1)));
        // (0,1) -> (0,0) -> (1,0) -> (2,0) -> (2,1): diagonals would cut the wall corner.
        assert_eq!(cost, PathCost::new(4, 0));
    }

    #[test]
    fn astar_unreachable() {
        let map = GridMap::from_ascii("w", &[".@."]);
        let r = astar(
            NodeId::new(0, 0),
            NodeId::new(2, 0),
            |n, out| out.extend(map.neighbors_unchecked(n)),
            &Deadline::unlimited(),
        );
        assert!(r.is_none());
    }
}
