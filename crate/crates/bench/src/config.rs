//! Benchmark configuration: a flat TOML document whose keys mirror the CLI
//! flags. Command-line flags override file values.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use mapf_core::bmaa::BmaaConfig;
use mapf_core::far::FarConfig;
use mapf_core::sim::{DEFAULT_TIME_LIMIT, DEFAULT_MAX_STEPS};
use mapf_core::whca::WhcaConfig;
use mapf_core::{Budget, PortfolioConfig, ScenarioType};
use serde::Deserialize;

use crate::error::{read_to_string, BenchError, Result};

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub maps: Vec<PathBuf>,
    /// Scenario type names; empty means all seven.
    pub types: Vec<String>,
    pub agents: usize,
    /// Instances per (map, type).
    pub count: usize,
    pub seed: u64,
    /// `wall:SECONDS` or `steps:N`.
    pub budget: String,
    pub whca_window: u32,
    pub whca_replan_interval: Option<u32>,
    pub far_reservation: u32,
    pub far_wait_threshold: u32,
    pub bmaa_lookahead: u32,
    pub bmaa_flows: bool,
    pub out: PathBuf,
    /// Worker threads; 0 picks the number of CPUs.
    pub jobs: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        let whca = WhcaConfig::default();
        let far = FarConfig::default();
        let bmaa = BmaaConfig::default();
        BenchmarkConfig {
            maps: Vec::new(),
            types: Vec::new(),
            agents: 300,
            count: 20,
            seed: 0,
            budget: format!("wall:{DEFAULT_TIME_LIMIT}"),
            whca_window: whca.window,
            whca_replan_interval: None,
            far_reservation: far.reservation_length,
            far_wait_threshold: far.wait_threshold,
            bmaa_lookahead: bmaa.lookahead,
            bmaa_flows: bmaa.flow_annotations,
            out: PathBuf::from("out"),
            jobs: 0,
        }
    }
}

impl BenchmarkConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        toml::from_str(&text).map_err(|e| BenchError::data(path, e.to_string()))
    }

    pub fn scenario_types(&self) -> Result<Vec<ScenarioType>> {
        if self.types.is_empty() {
            return Ok(ScenarioType::ALL.to_vec());
        }
        self.types.iter().map(|t| t.parse().map_err(|e: mapf_core::scenario::UnknownScenario| BenchError::Usage(e.to_string()))).collect()
    }

    pub fn parsed_budget(&self) -> Result<Budget> {
        parse_budget(&self.budget)
    }

    pub fn portfolio(&self) -> Result<PortfolioConfig> {
        let mut whca = WhcaConfig::with_window(self.whca_window);
        if let Some(k) = self.whca_replan_interval {
            whca.replan_interval = k;
        }
        let cfg = PortfolioConfig {
            whca,
            far: FarConfig { reservation_length: self.far_reservation, wait_threshold: self.far_wait_threshold },
            bmaa: BmaaConfig { lookahead: self.bmaa_lookahead, flow_annotations: self.bmaa_flows },
        };
        cfg.validate().map_err(|e| BenchError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

/// `wall:SECONDS` or `steps:N`. A bare `steps` uses the default step count.
pub fn parse_budget(s: &str) -> Result<Budget> {
    let bad = || BenchError::Usage(format!("invalid budget `{s}` (expected wall:SECONDS or steps:N)"));
    let (mode, value) = s.split_once(':').unwrap_or((s, ""));
    let budget = match mode {
        "wall" => Budget::wall_clock(f64::from_str(value).map_err(|_| bad())?),
        "steps" if value.is_empty() => Budget::steps(DEFAULT_MAX_STEPS, DEFAULT_TIME_LIMIT),
        "steps" => Budget::steps(u32::from_str(value).map_err(|_| bad())?, DEFAULT_TIME_LIMIT),
        _ => return Err(bad()),
    };
    budget.validate().map_err(|_| bad())?;
    Ok(budget)
}
