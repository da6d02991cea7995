//! Discrete-time execution of one MAPF instance.
//!
//! Each step the planner updates agent plans, every agent proposes the head
//! action of its plan (or waits), and [`commit_moves`] resolves the
//! proposals under the vertex and swap rules. The resulting
//! [`ExecutionTrace`] is the only input to [`compute_metrics`].

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use hashbrown::{HashMap, HashSet};

use crate::grid::{EdgeCost, GridMap, NodeId, PathCost};
use crate::labels::MetricsTriple;
use crate::planner::{Clock, Planner, PlannerError, StepContext};

pub type Timestep = u32;

/// Default step cap in step-count mode.
pub const DEFAULT_MAX_STEPS: u32 = 512;
/// Default time limit in seconds.
pub const DEFAULT_TIME_LIMIT: f64 = 30.0;

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub id: usize,
    pub start: NodeId,
    pub goal: NodeId,
    pub current: NodeId,
    /// Pending `(from, to)` actions; the head is executed next.
    pub plan: VecDeque<(NodeId, NodeId)>,
    /// Simulated time of the latest arrival at the goal while still there.
    pub arrived_time: Option<f64>,
}

impl AgentState {
    pub fn new(id: usize, start: NodeId, goal: NodeId) -> Self {
        AgentState { id, start, goal, current: start, plan: VecDeque::new(), arrived_time: None }
    }

    pub fn at_goal(&self) -> bool {
        self.current == self.goal
    }

    /// Target of the plan's action for the current node, or the current node.
    pub fn proposal(&self) -> NodeId {
        match self.plan.front() {
            Some(&(from, to)) if from == self.current => to,
            _ => self.current,
        }
    }
}

/// Builds agent states from `(start, goal)` pairs, ids in order.
pub fn agents_from_pairs(pairs: &[(NodeId, NodeId)]) -> Vec<AgentState> {
    pairs.iter().enumerate().map(|(i, &(s, g))| AgentState::new(i, s, g)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    /// Real elapsed time; the default mode.
    WallClock { limit: f64 },
    /// Deterministic mode: `max_steps` steps, each worth `step_duration` seconds.
    StepCount { max_steps: u32, step_duration: f64 },
}

impl Budget {
    pub fn wall_clock(limit: f64) -> Self {
        Budget::WallClock { limit }
    }

    /// Step-count budget whose steps add up to `time_limit` seconds.
    pub fn steps(max_steps: u32, time_limit: f64) -> Self {
        Budget::StepCount { max_steps, step_duration: time_limit / max_steps as f64 }
    }

    pub fn time_limit(&self) -> f64 {
        match *self {
            Budget::WallClock { limit } => limit,
            Budget::StepCount { max_steps, step_duration } => max_steps as f64 * step_duration,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match *self {
            Budget::WallClock { limit } => limit > 0.0 && limit.is_finite(),
            Budget::StepCount { max_steps, step_duration } => {
                max_steps > 0 && step_duration > 0.0 && step_duration.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::Setup(format!("budget limits must be positive: {self:?}")))
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::wall_clock(DEFAULT_TIME_LIMIT)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Budget::WallClock { limit } => write!(f, "wall:{limit}"),
            Budget::StepCount { max_steps, .. } => write!(f, "steps:{max_steps}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommittedMove {
    pub agent: u32,
    pub from: NodeId,
    pub to: NodeId,
    pub cost: EdgeCost,
}

/// A proposal that was not a legal edge and was turned into a wait.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rejection {
    pub step: Timestep,
    pub agent: u32,
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    AllAtGoal,
    BudgetExhausted,
    PlannerFailed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecutionTrace {
    pub starts: Vec<NodeId>,
    /// One entry per agent per step, waits included, in agent order.
    pub steps: Vec<Vec<CommittedMove>>,
    pub final_positions: Vec<NodeId>,
    /// Last goal-arrival time for agents at their goal at termination.
    pub arrival_times: Vec<Option<f64>>,
    pub elapsed: f64,
    pub termination: Termination,
    pub rejected: Vec<Rejection>,
}

impl ExecutionTrace {
    pub fn total_cost(&self) -> PathCost {
        let mut total = PathCost::ZERO;
        for m in self.steps.iter().flatten() {
            total += m.cost;
        }
        total
    }

    /// Replays the trace from the recorded starts and checks chaining, edge
    /// legality, edge costs, the vertex rule and the swap rule.
    pub fn validate(&self, map: &GridMap) -> Result<(), TraceViolation> {
        let mut pos = self.starts.clone();
        for (step, moves) in self.steps.iter().enumerate() {
            let step = step as Timestep;
            if moves.len() != pos.len() {
                return Err(TraceViolation::MissingAgents { step });
            }
            let mut targets = HashSet::with_capacity(moves.len());
            let mut edges = HashSet::new();
            for m in moves {
                let a = m.agent as usize;
                if a >= pos.len() || m.from != pos[a] {
                    return Err(TraceViolation::Discontinuous { step, agent: m.agent });
                }
                if map.edge_cost(m.from, m.to) != Some(m.cost) {
                    return Err(TraceViolation::IllegalEdge { step, agent: m.agent });
                }
                if !targets.insert(m.to) {
                    return Err(TraceViolation::VertexConflict { step, node: m.to });
                }
                if m.from != m.to {
                    if edges.contains(&(m.to, m.from)) {
                        return Err(TraceViolation::Swap { step, agent: m.agent });
                    }
                    edges.insert((m.from, m.to));
                }
            }
            for m in moves {
                pos[m.agent as usize] = m.to;
            }
        }
        if pos != self.final_positions {
            return Err(TraceViolation::FinalPositions);
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceViolation {
    MissingAgents { step: Timestep },
    Discontinuous { step: Timestep, agent: u32 },
    IllegalEdge { step: Timestep, agent: u32 },
    VertexConflict { step: Timestep, node: NodeId },
    Swap { step: Timestep, agent: u32 },
    FinalPositions,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceViolation::MissingAgents { step } => write!(f, "step {step}: not every agent has a record"),
            TraceViolation::Discontinuous { step, agent } => {
                write!(f, "step {step}: agent {agent} does not start where it ended")
            }
            TraceViolation::IllegalEdge { step, agent } => write!(f, "step {step}: agent {agent} used an illegal edge"),
            TraceViolation::VertexConflict { step, node } => write!(f, "step {step}: two agents end on {node}"),
            TraceViolation::Swap { step, agent } => write!(f, "step {step}: agent {agent} swapped with another agent"),
            TraceViolation::FinalPositions => f.write_str("final positions do not match the replay"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimError {
    Setup(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Setup(msg) => write!(f, "invalid instance: {msg}"),
        }
    }
}

impl core::error::Error for SimError {}

/// Result of [`run_instance`]. A planner failure still yields a trace; its
/// metrics are forced to zero completion.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub trace: ExecutionTrace,
    pub metrics: MetricsTriple,
    pub failure: Option<PlannerError>,
}

/// Resolves one step of proposals.
///
/// Agents are processed in ascending index order. A move commits iff its
/// target is unoccupied at that moment (agents that already moved this step
/// have vacated their source) and it does not reverse a move already
/// committed this step. Everything else becomes a wait. `occupancy` maps cell
/// index to agent and is updated in place.
pub fn commit_moves(
    map: &GridMap,
    proposals: &[(NodeId, NodeId)],
    occupancy: &mut [Option<u32>],
    rejected: &mut Vec<(u32, NodeId, NodeId)>,
) -> Vec<CommittedMove> {
    let mut out = Vec::with_capacity(proposals.len());
    // source cell -> committed target, for the swap rule
    let mut moved_from: HashMap<NodeId, NodeId> = HashMap::new();
    for (i, &(from, to)) in proposals.iter().enumerate() {
        let agent = i as u32;
        let wait = CommittedMove { agent, from, to: from, cost: EdgeCost::Zero };
        if from == to {
            out.push(wait);
            continue;
        }
        let cost = match map.edge_cost(from, to) {
            Some(c) => c,
            None => {
                rejected.push((agent, from, to));
                out.push(wait);
                continue;
            }
        };
        let free = occupancy[map.index(to)].is_none();
        let swap = moved_from.get(&to) == Some(&from);
        if !free || swap {
            out.push(wait);
            continue;
        }
        occupancy[map.index(from)] = None;
        occupancy[map.index(to)] = Some(agent);
        moved_from.insert(from, to);
        out.push(CommittedMove { agent, from, to, cost });
    }
    out
}

/// Metrics of a finished trace.
///
/// Completion counts agents at their goal at termination; distance sums every
/// committed edge, finished or not; goal achievement time averages the last
/// arrival time, using `time_limit` for agents not at their goal.
pub fn compute_metrics(trace: &ExecutionTrace, n_agents: usize, time_limit: f64) -> MetricsTriple {
    if n_agents == 0 {
        return MetricsTriple { completion_rate: 0.0, total_distance: 0.0, goal_achievement_time: time_limit };
    }
    let done = trace.arrival_times.iter().filter(|t| t.is_some()).count();
    let gat: f64 = trace.arrival_times.iter().map(|t| t.map_or(time_limit, |t| t.min(time_limit))).sum();
    MetricsTriple {
        completion_rate: done as f64 / n_agents as f64,
        total_distance: trace.total_cost().value(),
        goal_achievement_time: gat / n_agents as f64,
    }
}

fn validate_agents(map: &GridMap, agents: &[AgentState]) -> Result<(), SimError> {
    if agents.is_empty() {
        return Err(SimError::Setup("no agents".into()));
    }
    let mut starts = HashSet::new();
    for (i, a) in agents.iter().enumerate() {
        if a.id != i {
            return Err(SimError::Setup(format!("agent at position {i} has id {}", a.id)));
        }
        if !map.is_passable(a.start) || !map.is_passable(a.goal) {
            return Err(SimError::Setup(format!("agent {i}: start or goal is not a passable cell")));
        }
        if a.current != a.start {
            return Err(SimError::Setup(format!("agent {i}: current node differs from start")));
        }
        if !starts.insert(a.start) {
            return Err(SimError::Setup(format!("agent {i}: start {} is shared", a.start)));
        }
    }
    // Connectivity is cheaper through one labelling than per-agent searches.
    let labels = map.components();
    for a in agents {
        if labels[map.index(a.start)] != labels[map.index(a.goal)] {
            return Err(SimError::Setup(format!("agent {}: goal {} unreachable from start", a.id, a.goal)));
        }
    }
    Ok(())
}

/// Runs `planner` on one instance until every agent is at its goal or the
/// budget is spent.
///
/// In wall-clock mode `clock` measures both the termination limit and the
/// arrival times, and the remaining time is split evenly across agents as
/// each step's planning budget. In step-count mode the clock is ignored.
pub fn run_instance(
    map: &GridMap,
    mut agents: Vec<AgentState>,
    planner: &mut dyn Planner,
    budget: &Budget,
    seed: u64,
    clock: &dyn Clock,
) -> Result<RunOutcome, SimError> {
    budget.validate()?;
    validate_agents(map, &agents)?;
    let n = agents.len();
    let time_limit = budget.time_limit();

    let mut occupancy = vec![None; map.cell_count()];
    for a in &agents {
        occupancy[map.index(a.current)] = Some(a.id as u32);
    }
    for a in agents.iter_mut() {
        a.arrived_time = a.at_goal().then_some(0.0);
    }

    let mut trace = ExecutionTrace {
        starts: agents.iter().map(|a| a.start).collect(),
        steps: Vec::new(),
        final_positions: Vec::new(),
        arrival_times: Vec::new(),
        elapsed: 0.0,
        termination: Termination::BudgetExhausted,
        rejected: Vec::new(),
    };

    let mut failure = planner.init(map, &agents, seed).err();
    let mut step: Timestep = 0;
    let mut now_secs = 0.0;
    let mut rejected = Vec::new();
    while failure.is_none() {
        if agents.iter().all(AgentState::at_goal) {
            trace.termination = Termination::AllAtGoal;
            break;
        }
        let per_agent = match *budget {
            Budget::StepCount { max_steps, .. } => {
                if step >= max_steps {
                    break;
                }
                None
            }
            Budget::WallClock { limit } => {
                let elapsed = clock.elapsed();
                if elapsed >= limit {
                    break;
                }
                Some((limit - elapsed) / n as f64)
            }
        };

        let ctx = StepContext::new(map, step, clock, per_agent);
        if let Err(e) = planner.step(&ctx, &mut agents) {
            failure = Some(e);
            break;
        }

        let proposals: Vec<(NodeId, NodeId)> = agents.iter().map(|a| (a.current, a.proposal())).collect();
        rejected.clear();
        let committed = commit_moves(map, &proposals, &mut occupancy, &mut rejected);
        trace.rejected.extend(
            rejected.iter().map(|&(agent, from, to)| Rejection { step, agent, from, to }),
        );

        step += 1;
        now_secs = match *budget {
            Budget::StepCount { step_duration, .. } => step as f64 * step_duration,
            Budget::WallClock { limit } => clock.elapsed().min(limit),
        };
        for (a, m) in agents.iter_mut().zip(&committed) {
            if a.plan.front() == Some(&(m.from, m.to)) {
                a.plan.pop_front();
            }
            a.current = m.to;
            if a.at_goal() {
                if m.from != m.to || a.arrived_time.is_none() {
                    a.arrived_time = Some(now_secs);
                }
            } else {
                a.arrived_time = None;
            }
        }
        trace.steps.push(committed);
    }

    trace.elapsed = match *budget {
        Budget::StepCount { .. } => now_secs,
        Budget::WallClock { limit } => clock.elapsed().min(limit),
    };
    trace.final_positions = agents.iter().map(|a| a.current).collect();
    trace.arrival_times = agents.iter().map(|a| a.arrived_time).collect();

    let metrics = if failure.is_some() {
        trace.termination = Termination::PlannerFailed;
        MetricsTriple {
            completion_rate: 0.0,
            total_distance: trace.total_cost().value(),
            goal_achievement_time: time_limit,
        }
    } else {
        compute_metrics(&trace, n, time_limit)
    };
    Ok(RunOutcome { trace, metrics, failure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::Algorithm;
    use crate::planner::{FrozenClock, PortfolioConfig};

    fn n(x: u32, y: u32) -> NodeId {
        NodeId::new(x, y)
    }

    fn occupancy_for(map: &GridMap, proposals: &[(NodeId, NodeId)]) -> Vec<Option<u32>> {
        let mut occ = vec![None; map.cell_count()];
        for (i, (from, _)) in proposals.iter().enumerate() {
            occ[map.index(*from)] = Some(i as u32);
        }
        occ
    }

    fn commit(map: &GridMap, proposals: &[(NodeId, NodeId)]) -> Vec<NodeId> {
        let mut occ = occupancy_for(map, proposals);
        let mut rej = Vec::new();
        commit_moves(map, proposals, &mut occ, &mut rej).iter().map(|m| m.to).collect()
    }

    #[test]
    fn head_on_swap_is_refused() {
        let map = GridMap::open("o", 4, 1);
        let to = commit(&map, &[(n(0, 0), n(1, 0)), (n(1, 0), n(0, 0))]);
        assert_eq!(to, [n(0, 0), n(1, 0)]);
    }

    #[test]
    fn occupied_target_waits() {
        let map = GridMap::open("o", 4, 1);
        let to = commit(&map, &[(n(0, 0), n(1, 0)), (n(1, 0), n(1, 0))]);
        assert_eq!(to, [n(0, 0), n(1, 0)]);
    }

    #[test]
    fn train_with_leader_first() {
        let map = GridMap::open("o", 4, 1);
        let to = commit(&map, &[(n(1, 0), n(2, 0)), (n(0, 0), n(1, 0))]);
        assert_eq!(to, [n(2, 0), n(1, 0)]);
        // Leader with the higher id: the follower is processed first and waits.
        let to = commit(&map, &[(n(0, 0), n(1, 0)), (n(1, 0), n(2, 0))]);
        assert_eq!(to, [n(0, 0), n(2, 0)]);
    }

    #[test]
    fn illegal_proposal_is_rejected() {
        let map = GridMap::open("o", 4, 1);
        let proposals = [(n(0, 0), n(2, 0))];
        let mut occ = occupancy_for(&map, &proposals);
        let mut rej = Vec::new();
        let out = commit_moves(&map, &proposals, &mut occ, &mut rej);
        assert_eq!(out[0].to, n(0, 0));
        assert_eq!(rej, [(0, n(0, 0), n(2, 0))]);
    }

    #[test]
    fn occupancy_tracks_commits() {
        let map = GridMap::open("o", 3, 1);
        let proposals = [(n(0, 0), n(1, 0))];
        let mut occ = occupancy_for(&map, &proposals);
        commit_moves(&map, &proposals, &mut occ, &mut Vec::new());
        assert_eq!(occ, [None, Some(0), None]);
    }

    #[test]
    fn single_agent_reaches_goal_with_every_planner() {
        let map = GridMap::open("o", 8, 8);
        let cfg = PortfolioConfig::default();
        for alg in Algorithm::ALL {
            let mut planner = cfg.build(alg);
            let agents = agents_from_pairs(&[(n(0, 0), n(7, 5))]);
            let out =
                run_instance(&map, agents, planner.as_mut(), &Budget::steps(64, 30.0), 1, &FrozenClock).unwrap();
            assert_eq!(out.trace.termination, Termination::AllAtGoal, "{alg:?}");
            assert_eq!(out.metrics.completion_rate, 1.0);
            out.trace.validate(&map).unwrap();
        }
    }

    #[test]
    fn agents_at_goal_terminate_immediately() {
        let map = GridMap::open("o", 4, 4);
        let mut planner = PortfolioConfig::default().build(Algorithm::Whca);
        let agents = agents_from_pairs(&[(n(0, 0), n(0, 0)), (n(3, 3), n(3, 3))]);
        let out = run_instance(&map, agents, planner.as_mut(), &Budget::steps(10, 30.0), 0, &FrozenClock).unwrap();
        assert_eq!(out.trace.termination, Termination::AllAtGoal);
        assert!(out.trace.steps.is_empty());
        assert_eq!(out.metrics.total_distance, 0.0);
        assert_eq!(out.metrics.completion_rate, 1.0);
    }

    #[test]
    fn setup_errors() {
        let map = GridMap::from_ascii("w", &[".@."]);
        let mut planner = PortfolioConfig::default().build(Algorithm::Bmaa);
        let budget = Budget::steps(10, 30.0);
        let unreachable = agents_from_pairs(&[(n(0, 0), n(2, 0))]);
        assert!(run_instance(&map, unreachable, planner.as_mut(), &budget, 0, &FrozenClock).is_err());
        let shared = agents_from_pairs(&[(n(0, 0), n(0, 0)), (n(0, 0), n(0, 0))]);
        assert!(run_instance(&map, shared, planner.as_mut(), &budget, 0, &FrozenClock).is_err());
        let blocked = agents_from_pairs(&[(n(1, 0), n(0, 0))]);
        assert!(run_instance(&map, blocked, planner.as_mut(), &budget, 0, &FrozenClock).is_err());
    }

    struct Failing;
    impl Planner for Failing {
        fn algorithm(&self) -> Algorithm {
            Algorithm::Far
        }
        fn init(&mut self, _: &GridMap, _: &[AgentState], _: u64) -> Result<(), PlannerError> {
            Ok(())
        }
        fn step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) -> Result<(), PlannerError> {
            if ctx.now == 1 {
                return Err(PlannerError("boom".into()));
            }
            let a = &mut agents[0];
            a.plan.push_back((a.current, NodeId::new(a.current.x + 1, 0)));
            Ok(())
        }
    }

    #[test]
    fn planner_failure_zeroes_completion() {
        let map = GridMap::open("o", 4, 1);
        let agents = agents_from_pairs(&[(n(0, 0), n(1, 0)), (n(3, 0), n(2, 0))]);
        let out = run_instance(&map, agents, &mut Failing, &Budget::steps(10, 30.0), 0, &FrozenClock).unwrap();
        assert_eq!(out.trace.termination, Termination::PlannerFailed);
        assert_eq!(out.metrics.completion_rate, 0.0);
        assert_eq!(out.metrics.goal_achievement_time, 30.0);
        assert_eq!(out.metrics.total_distance, 1.0);
        assert!(out.failure.is_some());
    }

    /// Scripted planner: replays fixed per-agent node sequences.
    struct Scripted(Vec<Vec<NodeId>>);
    impl Planner for Scripted {
        fn algorithm(&self) -> Algorithm {
            Algorithm::Far
        }
        fn init(&mut self, _: &GridMap, _: &[AgentState], _: u64) -> Result<(), PlannerError> {
            Ok(())
        }
        fn step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) -> Result<(), PlannerError> {
            for (a, script) in agents.iter_mut().zip(&self.0) {
                a.plan.clear();
                if let Some(&next) = script.get(ctx.now as usize) {
                    a.plan.push_back((a.current, next));
                }
            }
            Ok(())
        }
    }

    #[test]
    fn goal_time_is_recalculated_on_return() {
        // One step = 1 s. Reach the goal at t=4, leave at t=5, return at t=9.
        // A second agent on its own row keeps the run going until t=14.
        let map = GridMap::open("o", 6, 2);
        let mut first: Vec<NodeId> = (1..=4).map(|x| n(x, 0)).collect();
        first.extend([n(5, 0), n(5, 0), n(5, 0), n(5, 0), n(4, 0)]);
        let mut second = vec![n(0, 1); 9];
        second.extend((1..=5).map(|x| n(x, 1)));
        let agents = agents_from_pairs(&[(n(0, 0), n(4, 0)), (n(0, 1), n(5, 1))]);
        let budget = Budget::steps(20, 20.0);
        let out = run_instance(&map, agents, &mut Scripted(vec![first, second]), &budget, 0, &FrozenClock).unwrap();
        assert_eq!(out.trace.termination, Termination::AllAtGoal);
        assert_eq!(out.trace.arrival_times, [Some(9.0), Some(14.0)]);
        assert_eq!(out.metrics.goal_achievement_time, 11.5);
        out.trace.validate(&map).unwrap();
    }

    #[test]
    fn unfinished_agent_contributes_the_limit() {
        let map = GridMap::open("o", 6, 1);
        let agents = agents_from_pairs(&[(n(0, 0), n(5, 0)), (n(1, 0), n(1, 0))]);
        let budget = Budget::steps(10, 30.0);
        let out = run_instance(&map, agents, &mut Scripted(vec![vec![], vec![]]), &budget, 0, &FrozenClock).unwrap();
        assert_eq!(out.trace.termination, Termination::BudgetExhausted);
        assert_eq!(out.metrics.completion_rate, 0.5);
        // Agent 1 started on its goal (time 0), agent 0 never arrived (30 s).
        assert_eq!(out.metrics.goal_achievement_time, 15.0);
        assert_eq!(out.metrics.total_distance, 0.0);
    }

    #[test]
    fn completion_ratio() {
        let trace = ExecutionTrace {
            starts: vec![],
            steps: vec![],
            final_positions: vec![],
            arrival_times: (0..300).map(|i| (i < 240).then_some(1.0)).collect(),
            elapsed: 30.0,
            termination: Termination::BudgetExhausted,
            rejected: vec![],
        };
        let m = compute_metrics(&trace, 300, 30.0);
        assert_eq!(m.completion_rate, 0.8);
        assert!((m.goal_achievement_time - (240.0 + 60.0 * 30.0) / 300.0).abs() < 1e-12);
    }

    #[test]
    fn validate_catches_conflicts() {
        let map = GridMap::open("o", 3, 1);
        let mk = |agent, from, to| CommittedMove {
            agent,
            from,
            to,
            cost: if from == to { EdgeCost::Zero } else { EdgeCost::Cardinal },
        };
        let mut trace = ExecutionTrace {
            starts: vec![n(0, 0), n(1, 0)],
            steps: vec![vec![mk(0, n(0, 0), n(1, 0)), mk(1, n(1, 0), n(0, 0))]],
            final_positions: vec![n(1, 0), n(0, 0)],
            arrival_times: vec![None, None],
            elapsed: 0.0,
            termination: Termination::BudgetExhausted,
            rejected: vec![],
        };
        assert!(matches!(trace.validate(&map), Err(TraceViolation::Swap { .. })));
        trace.steps = vec![vec![mk(0, n(0, 0), n(1, 0)), mk(1, n(1, 0), n(1, 0))]];
        trace.final_positions = vec![n(1, 0), n(1, 0)];
        assert!(matches!(trace.validate(&map), Err(TraceViolation::VertexConflict { .. })));
    }
}
