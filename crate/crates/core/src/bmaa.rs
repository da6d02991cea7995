//! Bounded Multi-Agent A*.
//!
//! Every agent runs its own real-time search: a lookahead-bounded A* with the
//! other agents as static obstacles, an RTAA*-style update of the expanded
//! nodes' heuristics, then movement along the partial path. Agents resting on
//! somebody else's goal are asked to step aside.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::{HashMap, HashSet};

use crate::grid::{octile_h, GridMap, NodeId};
use crate::labels::Algorithm;
use crate::planner::{Deadline, Planner, PlannerError, StepContext};
use crate::search::{MinEntry, Real};
use crate::sim::AgentState;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BmaaConfig {
    /// Maximum expansions per search.
    pub lookahead: u32,
    /// Only `false` is supported.
    pub flow_annotations: bool,
}

impl Default for BmaaConfig {
    fn default() -> Self {
        BmaaConfig { lookahead: 32, flow_annotations: false }
    }
}

impl BmaaConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.lookahead == 0 {
            return Err(PlannerError("BMAA* lookahead must be at least 1".into()));
        }
        if self.flow_annotations {
            return Err(PlannerError("BMAA* with flow annotations is not supported".into()));
        }
        Ok(())
    }
}

/// One agent's private heuristic: octile distance to its goal, raised where
/// learning has raised it.
#[derive(Clone, Debug)]
pub struct HeuristicTable {
    goal: NodeId,
    learned: HashMap<NodeId, f64>,
}

impl HeuristicTable {
    pub fn new(goal: NodeId) -> Self {
        HeuristicTable { goal, learned: HashMap::new() }
    }

    pub fn goal(&self) -> NodeId {
        self.goal
    }

    pub fn get(&self, n: NodeId) -> f64 {
        self.learned.get(&n).copied().unwrap_or_else(|| octile_h(n, self.goal))
    }

    /// Raises `h(n)` to `value` if that is an increase.
    pub fn raise(&mut self, n: NodeId, value: f64) {
        if n != self.goal && value > self.get(n) {
            self.learned.insert(n, value);
        }
    }

    pub fn learned_len(&self) -> usize {
        self.learned.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundedSearch {
    /// Nodes to walk, excluding the start.
    pub path: Vec<NodeId>,
    /// Expanded nodes with their g-values.
    pub closed: Vec<(NodeId, f64)>,
    /// f of the node the path leads to; `None` if the open list ran dry.
    pub f_best: Option<f64>,
    pub reached_goal: bool,
}

/// Lookahead-bounded A* from `start` toward the table's goal.
///
/// Nodes in `occupied` are impassable, except the goal itself. The search
/// stops when the goal is selected for expansion, when `lookahead` nodes have
/// been expanded, or at the deadline; the path then leads to the best node on
/// the open list.
pub fn bounded_search(
    map: &GridMap,
    start: NodeId,
    htab: &HeuristicTable,
    occupied: &HashSet<NodeId>,
    lookahead: u32,
    deadline: &Deadline<'_>,
) -> BoundedSearch {
    let goal = htab.goal();
    let mut open = BinaryHeap::new();
    let mut g: HashMap<NodeId, f64> = HashMap::new();
    let mut parent: HashMap<NodeId, NodeId> = HashMap::new();
    let mut closed_set: HashSet<NodeId> = HashSet::new();
    let mut closed = Vec::new();

    g.insert(start, 0.0);
    let h0 = htab.get(start);
    open.push(MinEntry { key: (Real(h0), Real(h0), start), value: 0.0 });

    let mut best = None;
    while let Some(MinEntry { key: (Real(f), _, n), value: gn }) = open.pop() {
        if closed_set.contains(&n) || g.get(&n).is_some_and(|&old| old < gn) {
            continue;
        }
        let stop = n == goal || closed.len() >= lookahead as usize || (!closed.is_empty() && deadline.expired());
        if stop {
            best = Some((n, f));
            break;
        }
        closed_set.insert(n);
        closed.push((n, gn));
        for (m, c) in map.neighbors_unchecked(n) {
            if closed_set.contains(&m) || (m != goal && occupied.contains(&m)) {
                continue;
            }
            let gm = gn + c.value();
            if g.get(&m).is_some_and(|&old| old <= gm) {
                continue;
            }
            g.insert(m, gm);
            parent.insert(m, n);
            let h = htab.get(m);
            open.push(MinEntry { key: (Real(gm + h), Real(h), m), value: gm });
        }
    }

    let Some((target, f_best)) = best else {
        return BoundedSearch { path: Vec::new(), closed, f_best: None, reached_goal: false };
    };
    let mut path = Vec::new();
    let mut cur = target;
    while cur != start {
        path.push(cur);
        cur = parent[&cur];
    }
    path.reverse();
    BoundedSearch { path, closed, f_best: Some(f_best), reached_goal: target == goal }
}

/// RTAA* update: `h(n) = max(h(n), f_best - g(n))` over the expanded nodes.
pub fn update_heuristics(htab: &mut HeuristicTable, search: &BoundedSearch) {
    let Some(f_best) = search.f_best else { return };
    for &(n, g) in &search.closed {
        htab.raise(n, f_best - g);
    }
}

/// BMAA* as a [`Planner`].
pub struct BmaaPlanner {
    cfg: BmaaConfig,
    tables: Vec<HeuristicTable>,
    paths: Vec<VecDeque<NodeId>>,
    last_pos: Vec<Option<NodeId>>,
    /// Number of bounded searches run.
    pub searches: u64,
}

impl BmaaPlanner {
    pub fn new(cfg: BmaaConfig) -> Self {
        BmaaPlanner { cfg, tables: Vec::new(), paths: Vec::new(), last_pos: Vec::new(), searches: 0 }
    }

    pub fn table(&self, agent: usize) -> &HeuristicTable {
        &self.tables[agent]
    }

    pub fn path(&self, agent: usize) -> &VecDeque<NodeId> {
        &self.paths[agent]
    }

    pub fn bmaa_step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) {
        let map = ctx.map;
        let mut at_rest = vec![false; agents.len()];
        for (i, a) in agents.iter().enumerate() {
            match self.last_pos[i] {
                Some(p) if p != a.current => {
                    if self.paths[i].front() == Some(&a.current) {
                        self.paths[i].pop_front();
                    } else {
                        self.paths[i].clear();
                    }
                }
                _ => at_rest[i] = true,
            }
            self.last_pos[i] = Some(a.current);
        }

        let occupant: HashMap<NodeId, usize> = agents.iter().map(|a| (a.current, a.id)).collect();
        let occupied: HashSet<NodeId> = occupant.keys().copied().collect();
        let mut vacate = vec![false; agents.len()];
        for a in agents.iter().filter(|a| !a.at_goal()) {
            if let Some(&j) = occupant.get(&a.goal) {
                if at_rest[j] {
                    vacate[j] = true;
                }
            }
        }

        let mut claimed: HashSet<NodeId> = HashSet::new();
        for i in 0..agents.len() {
            agents[i].plan.clear();
            let cur = agents[i].current;
            if vacate[i] {
                let mut free: Vec<NodeId> = map
                    .neighbors_unchecked(cur)
                    .map(|(m, _)| m)
                    .filter(|m| !occupied.contains(m) && !claimed.contains(m))
                    .collect();
                free.sort_unstable();
                if let Some(&m) = free.first() {
                    self.paths[i].clear();
                    claimed.insert(m);
                    agents[i].plan.push_back((cur, m));
                    continue;
                }
            }
            if agents[i].at_goal() {
                self.paths[i].clear();
                continue;
            }
            let next_blocked = self.paths[i].front().is_some_and(|n| occupied.contains(n));
            if self.paths[i].is_empty() || next_blocked {
                let search = bounded_search(
                    map,
                    cur,
                    &self.tables[i],
                    &occupied,
                    self.cfg.lookahead,
                    &ctx.agent_deadline(),
                );
                self.searches += 1;
                update_heuristics(&mut self.tables[i], &search);
                self.paths[i] = search.path.into();
            }
            if let Some(&next) = self.paths[i].front() {
                claimed.insert(next);
                agents[i].plan.push_back((cur, next));
            }
        }
    }
}

impl Planner for BmaaPlanner {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Bmaa
    }

    fn init(&mut self, _map: &GridMap, agents: &[AgentState], _seed: u64) -> Result<(), PlannerError> {
        self.cfg.validate().map_err(|e| PlannerError(format!("{e}")))?;
        self.tables = agents.iter().map(|a| HeuristicTable::new(a.goal)).collect();
        self.paths = vec![VecDeque::new(); agents.len()];
        self.last_pos = vec![None; agents.len()];
        self.searches = 0;
        Ok(())
    }

    fn step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) -> Result<(), PlannerError> {
        self.bmaa_step(ctx, agents);
        Ok(())
    }
}
