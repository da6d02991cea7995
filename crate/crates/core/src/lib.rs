//! Real-time multi-agent pathfinding portfolio.
//!
//! This crate holds the allocation-only algorithmic core: the grid model,
//! the discrete-time executor, the three portfolio planners (WHCA*, FAR and
//! BMAA*), scenario generation, portfolio labelling, instance image encoding
//! and selector evaluation. File formats, wall clocks and the CLI live in the
//! `mapf-bench` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod bmaa;
pub mod encode;
pub mod far;
pub mod grid;
pub mod labels;
pub mod planner;
pub mod scenario;
pub mod search;
pub mod selector;
pub mod sim;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
pub mod whca;

pub use grid::{octile_h, EdgeCost, GridMap, NodeId, PathCost};
pub use labels::{Algorithm, Label, MetricsTriple, PortfolioResult};
pub use planner::{Planner, PortfolioConfig};
pub use scenario::{ProblemInstance, ScenarioType};
pub use sim::{AgentState, Budget, ExecutionTrace};
