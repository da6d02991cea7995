//! On-disk formats: maps, instance files, results, labels, dataset manifest,
//! predictions, per-split summaries and trace dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use mapf_core::labels::{label, AlgorithmRun};
use mapf_core::sim::ExecutionTrace;
use mapf_core::{Algorithm, GridMap, MetricsTriple, NodeId, PortfolioResult, ProblemInstance, ScenarioType};
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, write, BenchError, Result};

/// Reads a MovingAI map; its name is the file stem.
pub fn read_map(path: &Path) -> Result<GridMap> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("map").to_string();
    let text = read_to_string(path)?;
    GridMap::parse_movingai(name, &text).map_err(|e| BenchError::data(path, e.to_string()))
}

/// MovingAI text for `map`, blocked cells as `@`.
pub fn movingai_text(map: &GridMap) -> String {
    let mut s = format!("type octile\nheight {}\nwidth {}\nmap\n", map.height(), map.width());
    for y in 0..map.height() {
        for x in 0..map.width() {
            s.push(if map.is_passable(NodeId::new(x, y)) { '.' } else { '@' });
        }
        s.push('\n');
    }
    s
}

/// Instance file text: a header then one `sx sy gx gy` line per agent.
pub fn instance_text(inst: &ProblemInstance) -> String {
    let mut s = String::new();
    writeln!(s, "instance {}", inst.id).unwrap();
    writeln!(s, "map {}", inst.map_name).unwrap();
    writeln!(s, "type {}", inst.scenario).unwrap();
    writeln!(s, "seed {}", inst.seed).unwrap();
    writeln!(s, "agents {}", inst.agents.len()).unwrap();
    for (st, g) in &inst.agents {
        writeln!(s, "{} {} {} {}", st.x, st.y, g.x, g.y).unwrap();
    }
    s
}

pub fn parse_instance(path: &Path, text: &str) -> Result<ProblemInstance> {
    let err = |line: usize, m: String| BenchError::data(path, format!("line {line}: {m}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines.next().ok_or_else(|| err(0, format!("missing `{key}` header")))?;
        match line.split_once(char::is_whitespace) {
            Some((k, v)) if k == key => Ok((no, v.trim().to_string())),
            _ => Err(err(no, format!("expected `{key} <value>`"))),
        }
    };
    let id = header("instance")?.1;
    let map_name = header("map")?.1;
    let (no, t) = header("type")?;
    let scenario: ScenarioType = t.parse().map_err(|e: mapf_core::scenario::UnknownScenario| err(no, e.to_string()))?;
    let (no, s) = header("seed")?;
    let seed: u64 = s.parse().map_err(|_| err(no, format!("bad seed `{s}`")))?;
    let (no, n) = header("agents")?;
    let n: usize = n.parse().map_err(|_| err(no, format!("bad agent count `{n}`")))?;
    let mut agents = Vec::with_capacity(n);
    for (no, line) in lines {
        let v: Vec<u32> = line
            .split_whitespace()
            .map(|t| t.parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(no, format!("expected `sx sy gx gy`, got `{line}`")))?;
        if v.len() != 4 {
            return Err(err(no, format!("expected 4 coordinates, got {}", v.len())));
        }
        agents.push((NodeId::new(v[0], v[1]), NodeId::new(v[2], v[3])));
    }
    if agents.len() != n {
        return Err(BenchError::data(path, format!("header says {n} agents, found {}", agents.len())));
    }
    Ok(ProblemInstance { id, map_name, scenario, seed, agents })
}

pub fn read_instance(path: &Path) -> Result<ProblemInstance> {
    parse_instance(path, &read_to_string(path)?)
}

/// All `*.inst` files in `dir`, sorted by instance id.
pub fn read_instance_dir(dir: &Path) -> Result<Vec<ProblemInstance>> {
    let entries = std::fs::read_dir(dir).map_err(|e| BenchError::io(dir, e))?;
    let mut out = Vec::new();
    for e in entries {
        let path = e.map_err(|e| BenchError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "inst") {
            out.push(read_instance(&path)?);
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> BenchError {
    let line = e.position().map(|p| format!("line {}: ", p.line())).unwrap_or_default();
    BenchError::data(path, format!("{line}{e}"))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Runtime(e.to_string()))?;
    write(path, bytes)
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn parse_algorithm(path: &Path, s: &str) -> Result<Algorithm> {
    s.parse().map_err(|e: mapf_core::labels::UnknownAlgorithm| BenchError::data(path, e.to_string()))
}

/// One line of the results file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub map: String,
    pub scenario: String,
    pub algorithm: String,
    pub completion_rate: f64,
    pub total_distance: f64,
    pub goal_achievement_time: f64,
    pub seed: u64,
    pub budget: String,
    pub failed: bool,
}

/// Portfolio results with the map and scenario type of each instance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultSet {
    /// Sorted by instance id.
    pub results: Vec<PortfolioResult>,
    pub meta: BTreeMap<String, (String, ScenarioType)>,
}

impl ResultSet {
    pub fn rows(&self) -> Vec<ResultRow> {
        let mut rows = Vec::new();
        for r in &self.results {
            let (map, scenario) = &self.meta[&r.instance_id];
            for alg in Algorithm::ALL {
                let run = &r.runs[alg.index()];
                rows.push(ResultRow {
                    instance_id: r.instance_id.clone(),
                    map: map.clone(),
                    scenario: scenario.to_string(),
                    algorithm: alg.to_string(),
                    completion_rate: run.metrics.completion_rate,
                    total_distance: run.metrics.total_distance,
                    goal_achievement_time: run.metrics.goal_achievement_time,
                    seed: run.seed,
                    budget: run.budget.clone(),
                    failed: run.failed,
                });
            }
        }
        rows
    }

    pub fn scenario(&self, id: &str) -> Option<ScenarioType> {
        self.meta.get(id).map(|m| m.1)
    }

    /// The subset whose ids satisfy `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> ResultSet {
        let results: Vec<PortfolioResult> = self.results.iter().filter(|r| keep(&r.instance_id)).cloned().collect();
        let meta = results.iter().map(|r| (r.instance_id.clone(), self.meta[&r.instance_id].clone())).collect();
        ResultSet { results, meta }
    }
}

pub fn write_results(path: &Path, set: &ResultSet) -> Result<()> {
    write_csv(path, set.rows())
}

pub fn read_results(path: &Path) -> Result<ResultSet> {
    let rows: Vec<ResultRow> = read_csv(path)?;
    let mut grouped: BTreeMap<String, (String, ScenarioType, [Option<AlgorithmRun>; 3])> = BTreeMap::new();
    for row in rows {
        let alg = parse_algorithm(path, &row.algorithm)?;
        let scenario: ScenarioType = row
            .scenario
            .parse()
            .map_err(|e: mapf_core::scenario::UnknownScenario| BenchError::data(path, e.to_string()))?;
        let entry = grouped.entry(row.instance_id.clone()).or_insert_with(|| (row.map.clone(), scenario, [None, None, None]));
        let slot = &mut entry.2[alg.index()];
        if slot.is_some() {
            return Err(BenchError::data(path, format!("duplicate {alg} row for {}", row.instance_id)));
        }
        *slot = Some(AlgorithmRun {
            metrics: MetricsTriple {
                completion_rate: row.completion_rate,
                total_distance: row.total_distance,
                goal_achievement_time: row.goal_achievement_time,
            },
            seed: row.seed,
            budget: row.budget,
            failed: row.failed,
        });
    }
    let mut set = ResultSet::default();
    for (id, (map, scenario, runs)) in grouped {
        if runs.iter().any(Option::is_none) {
            return Err(BenchError::data(path, format!("instance {id} lacks a row for every algorithm")));
        }
        set.results.push(PortfolioResult { instance_id: id.clone(), runs: runs.map(Option::unwrap) });
        set.meta.insert(id, (map, scenario));
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub instance_id: String,
    pub best: String,
    pub worst: String,
}

pub fn label_rows(set: &ResultSet) -> Vec<LabelRow> {
    set.results
        .iter()
        .map(|r| {
            let l = label(r);
            LabelRow { instance_id: r.instance_id.clone(), best: l.best.to_string(), worst: l.worst.to_string() }
        })
        .collect()
}

pub fn write_labels(path: &Path, rows: &[LabelRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let rows: Vec<LabelRow> = read_csv(path)?;
    for r in &rows {
        parse_algorithm(path, &r.best)?;
        parse_algorithm(path, &r.worst)?;
    }
    Ok(rows)
}

/// One dataset entry. Image paths are relative to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub instance_id: String,
    pub map: String,
    pub scenario: String,
    pub seed: u64,
    pub image: String,
    pub best: String,
    pub worst: String,
    pub bmaa_completion_rate: f64,
    pub bmaa_total_distance: f64,
    pub bmaa_goal_achievement_time: f64,
    pub far_completion_rate: f64,
    pub far_total_distance: f64,
    pub far_goal_achievement_time: f64,
    pub whca_completion_rate: f64,
    pub whca_total_distance: f64,
    pub whca_goal_achievement_time: f64,
}

impl ManifestRow {
    pub fn new(inst: &ProblemInstance, image: String, result: &PortfolioResult) -> Self {
        let l = label(result);
        let m = |a: Algorithm| *result.metrics(a);
        let (b, f, w) = (m(Algorithm::Bmaa), m(Algorithm::Far), m(Algorithm::Whca));
        ManifestRow {
            instance_id: inst.id.clone(),
            map: inst.map_name.clone(),
            scenario: inst.scenario.to_string(),
            seed: inst.seed,
            image,
            best: l.best.to_string(),
            worst: l.worst.to_string(),
            bmaa_completion_rate: b.completion_rate,
            bmaa_total_distance: b.total_distance,
            bmaa_goal_achievement_time: b.goal_achievement_time,
            far_completion_rate: f.completion_rate,
            far_total_distance: f.total_distance,
            far_goal_achievement_time: f.goal_achievement_time,
            whca_completion_rate: w.completion_rate,
            whca_total_distance: w.total_distance,
            whca_goal_achievement_time: w.goal_achievement_time,
        }
    }
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>> {
    read_csv(path)
}

/// Label index order: one algorithm name per line.
pub fn portfolio_text() -> String {
    Algorithm::ALL.iter().map(|a| format!("{a}\n")).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRow {
    instance_id: String,
    predicted_algorithm: String,
}

pub fn read_predictions(path: &Path) -> Result<BTreeMap<String, Algorithm>> {
    let rows: Vec<PredictionRow> = read_csv(path)?;
    let mut out = BTreeMap::new();
    for r in rows {
        let alg = parse_algorithm(path, &r.predicted_algorithm)?;
        if out.insert(r.instance_id.clone(), alg).is_some() {
            return Err(BenchError::data(path, format!("duplicate prediction for {}", r.instance_id)));
        }
    }
    Ok(out)
}

pub fn write_predictions(path: &Path, predictions: &BTreeMap<String, Algorithm>) -> Result<()> {
    write_csv(
        path,
        predictions.iter().map(|(id, a)| PredictionRow { instance_id: id.clone(), predicted_algorithm: a.to_string() }),
    )
}

/// One selector's aggregate on one train/test split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub split: u32,
    /// `oracle`, `learned`, `fixed:<name>` or `worst`.
    pub selector: String,
    pub completion_rate: f64,
    pub total_distance: f64,
    pub goal_achievement_time: f64,
    /// Learned-selector accuracy; only on `learned` rows.
    pub accuracy: Option<f64>,
}

pub fn read_splits(path: &Path) -> Result<Vec<SplitRow>> {
    read_csv(path)
}

pub fn write_splits(path: &Path, rows: &[SplitRow]) -> Result<()> {
    write_csv(path, rows)
}

/// Text dump of a run: start positions, then one `t agent fx fy tx ty` line
/// per committed move including waits.
pub fn trace_text(instance_id: &str, alg: Algorithm, trace: &ExecutionTrace) -> String {
    let mut s = format!("# instance {instance_id} algorithm {alg} termination {:?}\n", trace.termination);
    for (i, n) in trace.starts.iter().enumerate() {
        writeln!(s, "start {i} {} {}", n.x, n.y).unwrap();
    }
    for (t, moves) in trace.steps.iter().enumerate() {
        for m in moves {
            writeln!(s, "{t} {} {} {} {} {}", m.agent, m.from.x, m.from.y, m.to.x, m.to.y).unwrap();
        }
    }
    s
}

/// Moves of a trace dump as `(t, agent, from, to)`.
pub fn parse_trace_moves(path: &Path, text: &str) -> Result<Vec<(u32, u32, NodeId, NodeId)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.starts_with("start") || line.trim().is_empty() {
            continue;
        }
        let v: Vec<u32> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| BenchError::data(path, format!("line {}: bad move `{line}`", no + 1)))?;
        if v.len() != 6 {
            return Err(BenchError::data(path, format!("line {}: expected 6 fields", no + 1)));
        }
        out.push((v[0], v[1], NodeId::new(v[2], v[3]), NodeId::new(v[4], v[5])));
    }
    Ok(out)
}
