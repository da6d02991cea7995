//! Flow Annotation Replanning.
//!
//! The map is turned into a directed "highway" graph by row and column
//! parity. Agents plan complete paths on it, reserve a few steps ahead, wait
//! while they cannot reserve, and are forced off their node when they sit in
//! a wait-for cycle for too long.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{GridMap, NodeId};
use crate::labels::Algorithm;
use crate::planner::{Deadline, Planner, PlannerError, StepContext};
use crate::search::astar;
use crate::sim::{AgentState, Timestep};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FarConfig {
    /// Steps reserved ahead of the agent.
    pub reservation_length: u32,
    /// Consecutive waits before an agent takes part in deadlock handling.
    pub wait_threshold: u32,
}

impl Default for FarConfig {
    fn default() -> Self {
        FarConfig { reservation_length: 3, wait_threshold: 5 }
    }
}

impl FarConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.reservation_length == 0 || self.wait_threshold == 0 {
            return Err(PlannerError(format!("FAR needs positive reservation length and wait threshold, got {self:?}")));
        }
        Ok(())
    }
}

/// Outgoing direction bits of a flow cell.
pub mod dir {
    pub const NORTH: u8 = 1;
    pub const EAST: u8 = 2;
    pub const SOUTH: u8 = 4;
    pub const WEST: u8 = 8;
    pub const ALL: [(u8, i32, i32); 4] = [(NORTH, 0, -1), (EAST, 1, 0), (SOUTH, 0, 1), (WEST, -1, 0)];
}

fn opposite(d: u8) -> u8 {
    match d {
        dir::NORTH => dir::SOUTH,
        dir::SOUTH => dir::NORTH,
        dir::EAST => dir::WEST,
        _ => dir::EAST,
    }
}

/// Directed cardinal edges over the passable cells of a map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowGraph {
    width: u32,
    height: u32,
    out: Vec<u8>,
}

impl FlowGraph {
    /// Outgoing direction bits of `n`.
    pub fn out_dirs(&self, n: NodeId) -> u8 {
        self.out[n.y as usize * self.width as usize + n.x as usize]
    }

    pub fn has_edge(&self, from: NodeId, to: NodeId) -> bool {
        let bits = self.out_dirs(from);
        dir::ALL.iter().any(|&(d, dx, dy)| {
            bits & d != 0 && from.x as i64 + dx as i64 == to.x as i64 && from.y as i64 + dy as i64 == to.y as i64
        })
    }

    /// Flow successors of `n`; all edges have cardinal cost.
    pub fn successors(&self, n: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let bits = self.out_dirs(n);
        dir::ALL.iter().filter(move |(d, _, _)| bits & d != 0).map(move |&(_, dx, dy)| {
            NodeId::new((n.x as i64 + dx as i64) as u32, (n.y as i64 + dy as i64) as u32)
        })
    }

    /// Text dump: one line per row, one token per cell. A token lists the
    /// outgoing directions as `NESW` with `.` for absent ones; blocked cells
    /// are `####`.
    pub fn dump(&self, map: &GridMap) -> String {
        let mut s = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                if x > 0 {
                    s.push(' ');
                }
                let n = NodeId::new(x, y);
                if !map.is_passable(n) {
                    s.push_str("####");
                    continue;
                }
                let bits = self.out_dirs(n);
                for (d, ch) in [(dir::NORTH, 'N'), (dir::EAST, 'E'), (dir::SOUTH, 'S'), (dir::WEST, 'W')] {
                    s.push(if bits & d != 0 { ch } else { '.' });
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Builds the flow graph.
///
/// Even rows flow west and odd rows east; even columns flow north and odd
/// columns south. Cells on one-cell-wide corridors keep both directions along
/// the corridor. Any cell left without an outgoing edge regains all its
/// cardinal edges in both directions.
pub fn annotate(map: &GridMap) -> FlowGraph {
    let (w, h) = (map.width(), map.height());
    let mut out = vec![0u8; map.cell_count()];
    let passable_at = |n: NodeId, dx: i32, dy: i32| map.offset(n, dx, dy).filter(|m| map.is_passable(*m));

    for n in map.passable_cells() {
        let i = map.index(n);
        let horizontal = if n.y % 2 == 0 { (dir::WEST, -1) } else { (dir::EAST, 1) };
        let vertical = if n.x % 2 == 0 { (dir::NORTH, -1) } else { (dir::SOUTH, 1) };
        if passable_at(n, horizontal.1, 0).is_some() {
            out[i] |= horizontal.0;
        }
        if passable_at(n, 0, vertical.1).is_some() {
            out[i] |= vertical.0;
        }
        let horizontal_corridor = passable_at(n, 0, -1).is_none() && passable_at(n, 0, 1).is_none();
        let vertical_corridor = passable_at(n, -1, 0).is_none() && passable_at(n, 1, 0).is_none();
        for &(d, dx, dy) in &dir::ALL {
            let along = if dy == 0 { horizontal_corridor } else { vertical_corridor };
            if along && passable_at(n, dx, dy).is_some() {
                out[i] |= d;
            }
        }
    }

    let stranded: Vec<NodeId> = map.passable_cells().filter(|n| out[map.index(*n)] == 0).collect();
    for n in stranded {
        for &(d, dx, dy) in &dir::ALL {
            if let Some(m) = passable_at(n, dx, dy) {
                out[map.index(n)] |= d;
                out[map.index(m)] |= opposite(d);
            }
        }
    }
    FlowGraph { width: w, height: h, out }
}

/// Path from `from` to `goal` as a node list including both ends: A* on the
/// flow graph, or on the undirected map if the flow graph cannot reach the
/// goal. `None` only if the map itself cannot.
pub fn far_plan(map: &GridMap, flow: &FlowGraph, from: NodeId, goal: NodeId) -> Option<Vec<NodeId>> {
    let unlimited = Deadline::unlimited();
    let on_flow = astar(
        from,
        goal,
        |n, out| out.extend(flow.successors(n).map(|m| (m, crate::grid::EdgeCost::Cardinal))),
        &unlimited,
    );
    on_flow
        .or_else(|| astar(from, goal, |n, out| out.extend(map.neighbors_unchecked(n)), &unlimited))
        .map(|(path, _)| path)
}

#[derive(Clone, Debug, Default)]
struct FarAgent {
    /// Upcoming nodes, excluding the current one.
    path: VecDeque<NodeId>,
    planned: bool,
    unsolvable: bool,
    /// How many of the upcoming nodes are reserved.
    reserved: usize,
    waits: u32,
    last_pos: Option<NodeId>,
    proposed: Option<NodeId>,
    /// `(forced off, forced onto)` while a displacement is in flight.
    forced: Option<(NodeId, NodeId)>,
    blocked_by: Option<u32>,
}

/// FAR as a [`Planner`].
pub struct FarPlanner {
    cfg: FarConfig,
    flow: Option<FlowGraph>,
    reservations: HashMap<(NodeId, Timestep), u32>,
    agents: Vec<FarAgent>,
    rng: ChaCha8Rng,
    /// Agents displaced by deadlock handling, as `(step, agent)`.
    pub forced_log: Vec<(Timestep, u32)>,
}

impl FarPlanner {
    pub fn new(cfg: FarConfig) -> Self {
        FarPlanner {
            cfg,
            flow: None,
            reservations: HashMap::new(),
            agents: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            forced_log: Vec::new(),
        }
    }

    pub fn flow(&self) -> Option<&FlowGraph> {
        self.flow.as_ref()
    }

    pub fn wait_counter(&self, agent: usize) -> u32 {
        self.agents[agent].waits
    }

    /// Owner of `(node, t)`, if reserved.
    pub fn reservation(&self, node: NodeId, t: Timestep) -> Option<u32> {
        self.reservations.get(&(node, t)).copied()
    }

    fn release(&mut self, agent: u32) {
        self.reservations.retain(|_, a| *a != agent);
        self.agents[agent as usize].reserved = 0;
    }

    fn claim(&mut self, node: NodeId, t: Timestep, agent: u32) -> bool {
        match self.reservations.get(&(node, t)) {
            Some(&o) => o == agent,
            None => {
                self.reservations.insert((node, t), agent);
                true
            }
        }
    }

    /// Reconciles planner state with where the executor actually put agents.
    fn observe(&mut self, map: &GridMap, agents: &[AgentState]) {
        let flow = self.flow.as_ref().expect("init not called");
        for (i, a) in agents.iter().enumerate() {
            let st = &mut self.agents[i];
            let moved = st.last_pos.is_some_and(|p| p != a.current);
            if let Some((origin, target)) = st.forced.take() {
                if a.current == target {
                    let back = far_plan(map, flow, target, origin);
                    match back {
                        Some(back) => {
                            for &n in back.iter().skip(1).rev() {
                                st.path.push_front(n);
                            }
                        }
                        None => st.planned = false,
                    }
                    st.waits = 0;
                }
            } else if moved {
                if st.path.front() == Some(&a.current) {
                    st.path.pop_front();
                    st.reserved = st.reserved.saturating_sub(1);
                } else {
                    st.planned = false;
                }
                st.waits = 0;
            } else if st.proposed.is_some_and(|p| p != a.current) {
                // The executor refused the reserved move.
                st.reserved = 0;
                st.waits += 1;
                self.reservations.retain(|_, o| *o as usize != i);
            }
            let st = &mut self.agents[i];
            st.last_pos = Some(a.current);
            st.proposed = None;
            st.blocked_by = None;
        }
    }

    /// Reservation-driven proposals for every agent, in id order.
    pub fn far_step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) {
        let now = ctx.now;
        self.reservations.retain(|(_, t), _| *t >= now);
        self.observe(ctx.map, agents);

        let mut occupant: HashMap<NodeId, u32> = HashMap::with_capacity(agents.len());
        for a in agents.iter() {
            occupant.insert(a.current, a.id as u32);
        }
        let len = self.cfg.reservation_length as usize;

        #[allow(clippy::needless_range_loop)]
        for i in 0..agents.len() {
            let me = i as u32;
            let cur = agents[i].current;
            let goal = agents[i].goal;
            if !self.agents[i].planned {
                let flow = self.flow.as_ref().expect("init not called");
                match far_plan(ctx.map, flow, cur, goal) {
                    Some(p) => {
                        self.agents[i].path = p.into_iter().skip(1).collect();
                        self.agents[i].unsolvable = false;
                    }
                    None => {
                        self.agents[i].path.clear();
                        self.agents[i].unsolvable = true;
                    }
                }
                self.agents[i].planned = true;
                self.agents[i].reserved = 0;
            }

            agents[i].plan.clear();
            if self.agents[i].path.is_empty() {
                // At goal (or stranded): hold the cell.
                for k in 1..=len {
                    self.claim(cur, now + k as Timestep, me);
                }
                continue;
            }

            if self.agents[i].reserved == 0 {
                let steps: Vec<NodeId> = self.agents[i].path.iter().take(len).copied().collect();
                let mut conflict = occupant.get(&steps[0]).copied().filter(|&o| o != me);
                if conflict.is_none() {
                    conflict = steps.iter().enumerate().find_map(|(k, &n)| {
                        self.reservation(n, now + 1 + k as Timestep).filter(|&o| o != me)
                    });
                }
                match conflict {
                    Some(owner) => {
                        self.agents[i].waits += 1;
                        self.agents[i].blocked_by = Some(owner);
                        self.claim(cur, now + 1, me);
                        continue;
                    }
                    None => {
                        for (k, &n) in steps.iter().enumerate() {
                            self.claim(n, now + 1 + k as Timestep, me);
                        }
                        self.agents[i].reserved = steps.len();
                    }
                }
            }

            let st = &mut self.agents[i];
            let mut from = cur;
            for &n in st.path.iter().take(st.reserved) {
                agents[i].plan.push_back((from, n));
                from = n;
            }
            st.proposed = st.path.front().copied();
        }
    }

    /// Forces agents out of wait-for cycles, and stationary agents out of the
    /// way of agents that have waited too long.
    pub fn break_deadlock(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) {
        let threshold = self.cfg.wait_threshold;
        let over = |st: &FarAgent| st.waits >= threshold && st.forced.is_none();
        let mut to_force: Vec<u32> = Vec::new();
        for i in 0..agents.len() {
            if !over(&self.agents[i]) {
                continue;
            }
            // Walk the wait-for chain from i.
            let mut chain: Vec<u32> = vec![i as u32];
            let mut cur = i as u32;
            while let Some(next) = self.agents[cur as usize].blocked_by {
                if let Some(pos) = chain.iter().position(|&c| c == next) {
                    let cycle = &chain[pos..];
                    // Report each cycle once, from its lowest member.
                    if cycle.iter().min() == Some(&(i as u32)) {
                        to_force.push(i as u32);
                    }
                    break;
                }
                let st = &self.agents[next as usize];
                if over(st) {
                    chain.push(next);
                    cur = next;
                    continue;
                }
                let stationary = st.path.is_empty() && st.forced.is_none();
                if stationary && agents[next as usize].at_goal() && cur == i as u32 {
                    to_force.push(next);
                }
                break;
            }
        }
        to_force.sort_unstable();
        to_force.dedup();
        for agent in to_force {
            self.force(ctx, agents, agent);
        }
    }

    fn force(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState], agent: u32) {
        let i = agent as usize;
        let cur = agents[i].current;
        let now = ctx.now;
        let occupied = |n: NodeId| agents.iter().any(|a| a.id as u32 != agent && (a.current == n || a.proposal() == n));
        let candidates: Vec<NodeId> = dir::ALL
            .iter()
            .filter_map(|&(_, dx, dy)| ctx.map.offset(cur, dx, dy))
            .filter(|&n| ctx.map.is_passable(n) && !occupied(n))
            .filter(|&n| self.reservation(n, now + 1).is_none_or(|o| o == agent))
            .collect();
        if candidates.is_empty() {
            return;
        }
        let target = candidates[self.rng.random_range(0..candidates.len())];
        self.release(agent);
        self.claim(target, now + 1, agent);
        let st = &mut self.agents[i];
        st.forced = Some((cur, target));
        st.proposed = Some(target);
        agents[i].plan.clear();
        agents[i].plan.push_back((cur, target));
        self.forced_log.push((now, agent));
    }
}

impl Planner for FarPlanner {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Far
    }

    fn init(&mut self, map: &GridMap, agents: &[AgentState], seed: u64) -> Result<(), PlannerError> {
        self.cfg.validate()?;
        self.flow = Some(annotate(map));
        self.reservations.clear();
        self.agents = vec![FarAgent::default(); agents.len()];
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.forced_log.clear();
        Ok(())
    }

    fn step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) -> Result<(), PlannerError> {
        self.far_step(ctx, agents);
        self.break_deadlock(ctx, agents);
        Ok(())
    }
}
