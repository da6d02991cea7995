//! Windowed Hierarchical Cooperative A*.
//!
//! Every agent searches `(node, time)` space up to a fixed window against a
//! shared [`ReservationTable`], guided by the exact agent-free distance to
//! its goal from a resumable backward search ([`RraHeuristic`]). Agents
//! follow their window and shift it every `replan_interval` steps, in a
//! priority order that rotates by one every replanning wave.

use alloc::collections::{BinaryHeap, VecDeque};
use alloc::format;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::grid::{octile_cost, EdgeCost, GridMap, NodeId, PathCost};
use crate::labels::Algorithm;
use crate::planner::{Deadline, Planner, PlannerError, StepContext};
use crate::search::MinEntry;
use crate::sim::{AgentState, Timestep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WhcaConfig {
    /// Search depth in timesteps.
    pub window: u32,
    /// Steps between window shifts: an agent replans once it has executed
    /// this many steps of its current window.
    pub replan_interval: u32,
}

impl Default for WhcaConfig {
    fn default() -> Self {
        WhcaConfig { window: 8, replan_interval: 4 }
    }
}

impl WhcaConfig {
    /// Config with the default replan interval of `window / 2` (at least 1).
    pub fn with_window(window: u32) -> Self {
        WhcaConfig { window, replan_interval: (window / 2).max(1) }
    }

    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.window == 0 || self.replan_interval == 0 || self.replan_interval > self.window {
            return Err(PlannerError(format!(
                "WHCA* needs window >= 1 and 1 <= replan interval <= window, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Vertex(NodeId, Timestep),
    Edge(NodeId, NodeId, Timestep),
}

/// Shared `(node, time)` and `(edge, time)` claims.
///
/// An edge reservation `(u, v, t)` means the owner moves `u -> v` between
/// `t` and `t + 1`; it forbids other agents the reverse traversal at `t`.
#[derive(Clone, Debug, Default)]
pub struct ReservationTable {
    owners: HashMap<Key, u32>,
    by_agent: Vec<Vec<Key>>,
}

impl ReservationTable {
    pub fn new(n_agents: usize) -> Self {
        ReservationTable { owners: HashMap::new(), by_agent: alloc::vec![Vec::new(); n_agents] }
    }

    fn reserve(&mut self, key: Key, agent: u32) -> bool {
        match self.owners.get(&key) {
            Some(&o) => o == agent,
            None => {
                self.owners.insert(key, agent);
                self.by_agent[agent as usize].push(key);
                true
            }
        }
    }

    /// Claims `(node, t)`; false if another agent holds it.
    pub fn reserve_vertex(&mut self, node: NodeId, t: Timestep, agent: u32) -> bool {
        self.reserve(Key::Vertex(node, t), agent)
    }

    pub fn reserve_edge(&mut self, from: NodeId, to: NodeId, t: Timestep, agent: u32) -> bool {
        self.reserve(Key::Edge(from, to, t), agent)
    }

    pub fn vertex_owner(&self, node: NodeId, t: Timestep) -> Option<u32> {
        self.owners.get(&Key::Vertex(node, t)).copied()
    }

    /// True if moving `from -> to` at `t` would reverse another agent's move.
    pub fn blocks_edge(&self, from: NodeId, to: NodeId, t: Timestep, agent: u32) -> bool {
        self.owners.get(&Key::Edge(to, from, t)).is_some_and(|&o| o != agent)
    }

    fn vertex_blocked(&self, node: NodeId, t: Timestep, agent: u32) -> bool {
        self.vertex_owner(node, t).is_some_and(|o| o != agent)
    }

    /// Drops every reservation of `agent` at time `t` or later.
    pub fn release_from(&mut self, agent: u32, t: Timestep) {
        let keys = core::mem::take(&mut self.by_agent[agent as usize]);
        let mut kept = Vec::with_capacity(keys.len());
        for key in keys {
            let kt = match key {
                Key::Vertex(_, kt) | Key::Edge(_, _, kt) => kt,
            };
            if kt >= t {
                self.owners.remove(&key);
            } else {
                kept.push(key);
            }
        }
        self.by_agent[agent as usize] = kept;
    }

    /// Forgets reservations strictly before `t`.
    pub fn purge_before(&mut self, t: Timestep) {
        self.owners.retain(|key, _| match *key {
            Key::Vertex(_, kt) | Key::Edge(_, _, kt) => kt >= t,
        });
        for keys in &mut self.by_agent {
            keys.retain(|key| match *key {
                Key::Vertex(_, kt) | Key::Edge(_, _, kt) => kt >= t,
            });
        }
    }

    /// All vertex reservations as `(node, t, agent)`, for audits.
    pub fn vertex_reservations(&self) -> impl Iterator<Item = (NodeId, Timestep, u32)> + '_ {
        self.owners.iter().filter_map(|(k, &a)| match *k {
            Key::Vertex(n, t) => Some((n, t, a)),
            Key::Edge(..) => None,
        })
    }
}

/// Reverse Resumable A*: a backward search from the goal, aimed at the
/// agent's start, that is resumed on demand. Closed nodes carry exact
/// agent-free distances to the goal.
#[derive(Clone, Debug)]
pub struct RraHeuristic {
    goal: NodeId,
    origin: NodeId,
    open: BinaryHeap<MinEntry<(PathCost, NodeId), PathCost>>,
    g: HashMap<NodeId, PathCost>,
    closed: HashMap<NodeId, PathCost>,
    exhausted: bool,
}

impl RraHeuristic {
    pub fn new(goal: NodeId, origin: NodeId) -> Self {
        let mut open = BinaryHeap::new();
        open.push(MinEntry { key: (octile_cost(goal, origin), goal), value: PathCost::ZERO });
        let mut g = HashMap::new();
        g.insert(goal, PathCost::ZERO);
        RraHeuristic { goal, origin, open, g, closed: HashMap::new(), exhausted: false }
    }

    pub fn goal(&self) -> NodeId {
        self.goal
    }

    /// Exact distance from `n` to the goal ignoring agents, or `None` if
    /// `n` cannot reach the goal.
    pub fn query(&mut self, map: &GridMap, n: NodeId) -> Option<PathCost> {
        if let Some(&d) = self.closed.get(&n) {
            return Some(d);
        }
        while !self.exhausted {
            let Some(MinEntry { key: (_, m), value: gm }) = self.open.pop() else {
                self.exhausted = true;
                break;
            };
            if self.closed.contains_key(&m) {
                continue;
            }
            self.closed.insert(m, gm);
            for (k, c) in map.neighbors_unchecked(m) {
                if self.closed.contains_key(&k) {
                    continue;
                }
                let gk = gm + c;
                if self.g.get(&k).is_some_and(|old| *old <= gk) {
                    continue;
                }
                self.g.insert(k, gk);
                self.open.push(MinEntry { key: (gk + octile_cost(k, self.origin), k), value: gk });
            }
            if m == n {
                return Some(gm);
            }
        }
        None
    }

    /// [`RraHeuristic::query`] as a real number; unreachable is infinity.
    pub fn distance(&mut self, map: &GridMap, n: NodeId) -> f64 {
        self.query(map, n).map_or(f64::INFINITY, PathCost::value)
    }

    pub fn closed_len(&self) -> usize {
        self.closed.len()
    }
}

/// One planned action with the time it starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimedAction {
    pub from: NodeId,
    pub to: NodeId,
    pub t: Timestep,
}

/// Plans one window for `agent` from `(agent.current, now)`, reserving the
/// result. The agent's reservations from `now` on must already be released.
///
/// Waiting costs 1 per step away from the goal and 0 on it. Among the
/// deepest reachable states the one with the smallest `f` wins, ties going
/// to smaller `h` and then the smaller node. If no successor survives the
/// reservations the agent plans a single wait.
pub fn plan_window(
    map: &GridMap,
    agent: &AgentState,
    rra: &mut RraHeuristic,
    table: &mut ReservationTable,
    cfg: &WhcaConfig,
    now: Timestep,
    deadline: &Deadline<'_>,
) -> Vec<TimedAction> {
    let me = agent.id as u32;
    let start = agent.current;
    let Some(h0) = rra.query(map, start) else {
        return reserve_plan(table, me, start, now, &[start]);
    };

    type State = (NodeId, u32);
    // key: (f, h, node, depth), value: g
    let mut open: BinaryHeap<MinEntry<(PathCost, PathCost, NodeId, u32), PathCost>> = BinaryHeap::new();
    let mut best_g: HashMap<State, PathCost> = HashMap::new();
    let mut parent: HashMap<State, State> = HashMap::new();
    let mut closed: hashbrown::HashSet<State> = hashbrown::HashSet::new();
    // (depth, f, h, node) of the best state popped so far
    let mut best: Option<(u32, PathCost, PathCost, NodeId)> = None;

    open.push(MinEntry { key: (h0, h0, start, 0), value: PathCost::ZERO });
    best_g.insert((start, 0), PathCost::ZERO);

    while let Some(MinEntry { key: (f, h, n, d), value: g }) = open.pop() {
        if !closed.insert((n, d)) {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bf, bh, bn)) => d > bd || (d == bd && (f, h, n) < (bf, bh, bn)),
        };
        if better {
            best = Some((d, f, h, n));
        }
        if d == cfg.window || deadline.expired() {
            break;
        }
        let t = now + d;
        let wait_cost = if n == agent.goal { EdgeCost::Zero } else { EdgeCost::Cardinal };
        let moves = core::iter::once((n, wait_cost)).chain(map.neighbors_unchecked(n));
        for (m, c) in moves {
            let state = (m, d + 1);
            if closed.contains(&state) || table.vertex_blocked(m, t + 1, me) {
                continue;
            }
            if m != n && table.blocks_edge(n, m, t, me) {
                continue;
            }
            let Some(hm) = rra.query(map, m) else { continue };
            let gm = g + c;
            if best_g.get(&state).is_some_and(|old| *old <= gm) {
                continue;
            }
            best_g.insert(state, gm);
            parent.insert(state, (n, d));
            open.push(MinEntry { key: (gm + hm, hm, m, d + 1), value: gm });
        }
    }

    let (depth, _, _, node) = best.unwrap_or((0, h0, h0, start));
    if depth == 0 {
        return reserve_plan(table, me, start, now, &[start, start]);
    }
    let mut nodes = Vec::with_capacity(depth as usize + 1);
    let mut cur = (node, depth);
    nodes.push(node);
    while let Some(&p) = parent.get(&cur) {
        nodes.push(p.0);
        cur = p;
    }
    nodes.reverse();
    reserve_plan(table, me, start, now, &nodes)
}

/// Reserves the node sequence starting at `(start, now)` and turns it into
/// timed actions. Keys already held by other agents are skipped.
fn reserve_plan(
    table: &mut ReservationTable,
    me: u32,
    start: NodeId,
    now: Timestep,
    nodes: &[NodeId],
) -> Vec<TimedAction> {
    debug_assert_eq!(nodes.first(), Some(&start));
    table.reserve_vertex(start, now, me);
    let mut actions = Vec::with_capacity(nodes.len().saturating_sub(1));
    for (k, pair) in nodes.windows(2).enumerate() {
        let t = now + k as Timestep;
        table.reserve_vertex(pair[1], t + 1, me);
        if pair[0] != pair[1] {
            table.reserve_edge(pair[0], pair[1], t, me);
        }
        actions.push(TimedAction { from: pair[0], to: pair[1], t });
    }
    actions
}

/// WHCA* as a [`Planner`].
pub struct WhcaPlanner {
    cfg: WhcaConfig,
    table: ReservationTable,
    heuristics: Vec<RraHeuristic>,
    plans: Vec<VecDeque<TimedAction>>,
    planned_at: Vec<Timestep>,
    wave: usize,
}

impl WhcaPlanner {
    pub fn new(cfg: WhcaConfig) -> Self {
        WhcaPlanner { cfg, table: ReservationTable::default(), heuristics: Vec::new(), plans: Vec::new(), planned_at: Vec::new(), wave: 0 }
    }

    pub fn table(&self) -> &ReservationTable {
        &self.table
    }

    pub fn timed_plan(&self, agent: usize) -> &VecDeque<TimedAction> {
        &self.plans[agent]
    }

    /// One WHCA* step: refresh stale or short plans, then expose every
    /// agent's timed plan as its action list.
    pub fn whca_step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) {
        let now = ctx.now;
        self.table.purge_before(now);
        let n = agents.len();
        let mut needs = Vec::new();
        for (i, a) in agents.iter().enumerate() {
            let plan = &mut self.plans[i];
            while plan.front().is_some_and(|s| s.t < now) {
                plan.pop_front();
            }
            let valid = plan.front().is_some_and(|s| s.t == now && s.from == a.current);
            if !valid || now - self.planned_at[i] >= self.cfg.replan_interval {
                needs.push(i);
            }
        }
        if !needs.is_empty() {
            let offset = self.wave % n;
            self.wave += 1;
            needs.sort_by_key(|&i| (i + n - offset) % n);
            for i in needs {
                self.table.release_from(i as u32, now);
                let deadline = ctx.agent_deadline();
                let actions =
                    plan_window(ctx.map, &agents[i], &mut self.heuristics[i], &mut self.table, &self.cfg, now, &deadline);
                self.plans[i] = actions.into();
                self.planned_at[i] = now;
            }
        }
        for (a, plan) in agents.iter_mut().zip(&self.plans) {
            a.plan.clear();
            a.plan.extend(plan.iter().map(|s| (s.from, s.to)));
        }
    }
}

impl Planner for WhcaPlanner {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Whca
    }

    fn init(&mut self, _map: &GridMap, agents: &[AgentState], _seed: u64) -> Result<(), PlannerError> {
        self.cfg.validate()?;
        self.table = ReservationTable::new(agents.len());
        self.heuristics = agents.iter().map(|a| RraHeuristic::new(a.goal, a.start)).collect();
        self.plans = alloc::vec![VecDeque::new(); agents.len()];
        self.planned_at = alloc::vec![0; agents.len()];
        self.wave = 0;
        Ok(())
    }

    fn step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) -> Result<(), PlannerError> {
        self.whca_step(ctx, agents);
        Ok(())
    }
}
