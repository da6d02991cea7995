//! End-to-end properties of the portfolio through the public API.

use mapf_core::labels::label;
use mapf_core::planner::FrozenClock;
use mapf_core::scenario::generate;
use mapf_core::sim::{agents_from_pairs, run_instance, Termination};
use mapf_core::{Algorithm, Budget, GridMap, PortfolioConfig, ScenarioType};
use proptest::prelude::*;

const WAREHOUSE: [&str; 14] = [
    "..................",
    ".@@@.@@@.@@@.@@@..",
    "..................",
    ".@@@.@@@.@@@.@@@..",
    "..................",
    ".@@@.@@@.@@@.@@@..",
    "..................",
    "..................",
    ".@@@.@@@.@@@.@@@..",
    "..................",
    ".@@@.@@@.@@@.@@@..",
    "..................",
    ".@@@.@@@.@@@.@@@..",
    "..................",
];

fn warehouse() -> GridMap {
    GridMap::from_ascii("warehouse", &WAREHOUSE)
}

#[test]
fn every_scenario_runs_on_every_planner() {
    let map = warehouse();
    let budget = Budget::steps(200, 30.0);
    for t in ScenarioType::ALL {
        let inst = generate(&map, t, 10, 7).unwrap();
        for alg in Algorithm::ALL {
            let mut p = PortfolioConfig::default().build(alg);
            let out = run_instance(&map, agents_from_pairs(&inst.agents), p.as_mut(), &budget, inst.seed, &FrozenClock)
                .unwrap();
            out.trace.validate(&map).unwrap();
            assert!(out.failure.is_none(), "{t} {alg}: {:?}", out.failure);
            let m = out.metrics;
            assert!((0.0..=1.0).contains(&m.completion_rate));
            assert!((0.0..=30.0).contains(&m.goal_achievement_time));
            if out.trace.termination == Termination::AllAtGoal {
                assert_eq!(m.completion_rate, 1.0);
            }
        }
    }
}

#[test]
fn runs_are_reproducible() {
    let map = warehouse();
    let inst = generate(&map, ScenarioType::SwapSides, 12, 99).unwrap();
    for alg in Algorithm::ALL {
        let run = || {
            let mut p = PortfolioConfig::default().build(alg);
            run_instance(&map, agents_from_pairs(&inst.agents), p.as_mut(), &Budget::steps(150, 30.0), 5, &FrozenClock)
                .unwrap()
        };
        assert_eq!(run(), run(), "{alg}");
    }
}

#[test]
fn zero_budget_is_rejected() {
    let map = warehouse();
    let inst = generate(&map, ScenarioType::Random, 3, 1).unwrap();
    let mut p = PortfolioConfig::default().build(Algorithm::Far);
    let bad = Budget::wall_clock(0.0);
    assert!(run_instance(&map, agents_from_pairs(&inst.agents), p.as_mut(), &bad, 0, &FrozenClock).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn label_is_consistent_with_metrics(seed in any::<u64>(), kind in 0usize..7, n in 2usize..14) {
        let map = warehouse();
        let inst = generate(&map, ScenarioType::ALL[kind], n, seed).unwrap();
        let budget = Budget::steps(60, 30.0);
        let runs = Algorithm::ALL.map(|alg| {
            let mut p = PortfolioConfig::default().build(alg);
            run_instance(&map, agents_from_pairs(&inst.agents), p.as_mut(), &budget, seed, &FrozenClock).unwrap().metrics
        });
        let result = mapf_core::PortfolioResult {
            instance_id: inst.id.clone(),
            runs: runs.map(|metrics| mapf_core::labels::AlgorithmRun {
                metrics,
                seed,
                budget: budget.to_string(),
                failed: false,
            }),
        };
        let l = label(&result);
        let best = runs[l.best.index()].completion_rate;
        let worst = runs[l.worst.index()].completion_rate;
        prop_assert!(runs.iter().all(|m| m.completion_rate <= best && m.completion_rate >= worst));
    }
}
