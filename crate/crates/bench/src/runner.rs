//! Portfolio execution across instances.

use std::time::Instant;

use mapf_core::labels::AlgorithmRun;
use mapf_core::planner::{Clock, FrozenClock};
use mapf_core::sim::{agents_from_pairs, run_instance, ExecutionTrace};
use mapf_core::{Algorithm, Budget, GridMap, MetricsTriple, PortfolioConfig, PortfolioResult, ProblemInstance, ScenarioType};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

/// Wall clock started at construction.
pub struct StdClock(Instant);

impl StdClock {
    pub fn start() -> Self {
        StdClock(Instant::now())
    }
}

impl Clock for StdClock {
    fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Per-instance seed: the first eight bytes of
/// `SHA-256(seed || map || type || index)`.
pub fn instance_seed(seed: u64, map: &str, scenario: ScenarioType, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((map.len() as u64).to_le_bytes());
    h.update(map.as_bytes());
    h.update(scenario.name().as_bytes());
    h.update((index as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Outcome of one algorithm on one instance.
pub struct AlgorithmOutcome {
    pub run: AlgorithmRun,
    pub trace: Option<ExecutionTrace>,
    pub error: Option<String>,
}

pub fn run_algorithm(
    map: &GridMap,
    inst: &ProblemInstance,
    portfolio: &PortfolioConfig,
    alg: Algorithm,
    budget: &Budget,
) -> AlgorithmOutcome {
    let mut planner = portfolio.build(alg);
    let agents = agents_from_pairs(&inst.agents);
    let outcome = match budget {
        Budget::WallClock { .. } => run_instance(map, agents, planner.as_mut(), budget, inst.seed, &StdClock::start()),
        Budget::StepCount { .. } => run_instance(map, agents, planner.as_mut(), budget, inst.seed, &FrozenClock),
    };
    let record = |metrics, failed| AlgorithmRun { metrics, seed: inst.seed, budget: budget.to_string(), failed };
    match outcome {
        Ok(out) => AlgorithmOutcome {
            run: record(out.metrics, out.failure.is_some()),
            error: out.failure.map(|e| e.to_string()),
            trace: Some(out.trace),
        },
        Err(e) => {
            let zero = MetricsTriple {
                completion_rate: 0.0,
                total_distance: 0.0,
                goal_achievement_time: budget.time_limit(),
            };
            AlgorithmOutcome { run: record(zero, true), trace: None, error: Some(e.to_string()) }
        }
    }
}

/// All three algorithms on one instance, in canonical order.
pub fn run_portfolio(
    map: &GridMap,
    inst: &ProblemInstance,
    portfolio: &PortfolioConfig,
    budget: &Budget,
) -> (PortfolioResult, [AlgorithmOutcome; 3]) {
    let outcomes = Algorithm::ALL.map(|alg| run_algorithm(map, inst, portfolio, alg, budget));
    let runs = [0, 1, 2].map(|i| outcomes[i].run.clone());
    (PortfolioResult { instance_id: inst.id.clone(), runs }, outcomes)
}

/// Runs `f` over `items` on `jobs` threads (0 = all CPUs), keeping input order.
pub fn parallel_map<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Runtime(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}
