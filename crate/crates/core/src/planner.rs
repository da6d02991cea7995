//! The interface between the executor and the portfolio planners.

use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::bmaa::{BmaaConfig, BmaaPlanner};
use crate::far::{FarConfig, FarPlanner};
use crate::grid::GridMap;
use crate::labels::Algorithm;
use crate::sim::{AgentState, Timestep};
use crate::whca::{WhcaConfig, WhcaPlanner};

/// Source of elapsed wall-clock seconds since the start of a run.
pub trait Clock {
    fn elapsed(&self) -> f64;
}

/// A clock that never advances. Used in step-count mode.
#[derive(Clone, Copy, Debug, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn elapsed(&self) -> f64 {
        0.0
    }
}

/// Point in clock time after which a search should stop expanding.
#[derive(Clone, Copy)]
pub struct Deadline<'a> {
    inner: Option<(&'a dyn Clock, f64)>,
}

impl<'a> Deadline<'a> {
    pub fn unlimited() -> Self {
        Deadline { inner: None }
    }

    pub fn at(clock: &'a dyn Clock, seconds: f64) -> Self {
        Deadline { inner: Some((clock, seconds)) }
    }

    pub fn expired(&self) -> bool {
        self.inner.is_some_and(|(clock, at)| clock.elapsed() >= at)
    }
}

/// Per-step information handed to a planner.
pub struct StepContext<'a> {
    pub map: &'a GridMap,
    pub now: Timestep,
    clock: &'a dyn Clock,
    /// Seconds of compute each agent may spend this step; `None` means only
    /// structural limits (window, lookahead) apply.
    per_agent: Option<f64>,
}

impl<'a> StepContext<'a> {
    pub fn new(map: &'a GridMap, now: Timestep, clock: &'a dyn Clock, per_agent: Option<f64>) -> Self {
        StepContext { map, now, clock, per_agent }
    }

    /// Deadline for one agent's planning, measured from the moment of the call.
    pub fn agent_deadline(&self) -> Deadline<'a> {
        match self.per_agent {
            Some(secs) => Deadline::at(self.clock, self.clock.elapsed() + secs),
            None => Deadline::unlimited(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannerError(pub String);

impl fmt::Display for PlannerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl core::error::Error for PlannerError {}

/// A MAPF planner driven one timestep at a time.
///
/// Each step the planner rewrites `AgentState::plan` for the agents it wants
/// to move. The executor then takes the head action of every plan whose
/// source is the agent's current node; anything else is a wait.
pub trait Planner {
    fn algorithm(&self) -> Algorithm;

    /// Called once before the first step.
    fn init(&mut self, map: &GridMap, agents: &[AgentState], seed: u64) -> Result<(), PlannerError>;

    fn step(&mut self, ctx: &StepContext<'_>, agents: &mut [AgentState]) -> Result<(), PlannerError>;
}

/// Parameters for all three portfolio members.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PortfolioConfig {
    pub whca: WhcaConfig,
    pub far: FarConfig,
    pub bmaa: BmaaConfig,
}

impl PortfolioConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        self.whca.validate()?;
        self.far.validate()?;
        self.bmaa.validate()
    }

    pub fn build(&self, algorithm: Algorithm) -> Box<dyn Planner + Send> {
        match algorithm {
            Algorithm::Bmaa => Box::new(BmaaPlanner::new(self.bmaa.clone())),
            Algorithm::Far => Box::new(FarPlanner::new(self.far.clone())),
            Algorithm::Whca => Box::new(WhcaPlanner::new(self.whca.clone())),
        }
    }
}
