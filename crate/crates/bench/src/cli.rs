//! Command-line interface.
//!
//! All artifacts live under the output directory:
//!
//! ```text
//! maps/<name>.map          copies of the input maps
//! instances/<id>.inst      generated problems
//! results.csv              one row per (instance, algorithm)
//! traces/<id>.<alg>.trace  optional move dumps
//! flows/<map>.txt          optional flow-annotation dumps
//! labels.csv               best/worst algorithm per instance
//! dataset/                 images, manifest.csv, portfolio.txt
//! evaluation.csv           selector aggregates
//! report.txt, report_*.csv tables
//! ```

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand};
use mapf_core::far::annotate;
use mapf_core::scenario::generate;
use mapf_core::selector::{accuracy, SelectorKind};
use mapf_core::{Algorithm, GridMap, ProblemInstance};

use crate::config::BenchmarkConfig;
use crate::dataset::export_dataset;
use crate::error::{read_to_string, write, BenchError, Result};
use crate::formats::*;
use crate::report::{render_table1, render_table2, split_rows, table1, table1_csv, table2, table2_csv};
use crate::runner::{instance_seed, parallel_map, run_portfolio};

#[derive(Debug, Parser)]
#[command(name = "mapf-bench", version, about = "Multi-agent pathfinding portfolio benchmark")]
pub struct Cli {
    /// Flat TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// `wall:SECONDS` or `steps:N`.
    #[arg(long, global = true)]
    budget: Option<String>,
    #[arg(long, global = true)]
    whca_window: Option<u32>,
    #[arg(long, global = true)]
    whca_replan_interval: Option<u32>,
    #[arg(long, global = true)]
    far_reservation: Option<u32>,
    #[arg(long, global = true)]
    far_wait_threshold: Option<u32>,
    #[arg(long, global = true)]
    bmaa_lookahead: Option<u32>,
    #[arg(long, global = true, action = ArgAction::Set)]
    bmaa_flows: Option<bool>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate problem instances for every (map, type, index).
    Generate {
        /// MovingAI map file; repeatable.
        #[arg(long)]
        map: Vec<PathBuf>,
        /// Scenario type; repeatable. Defaults to all seven.
        #[arg(long = "type")]
        types: Vec<String>,
        #[arg(long)]
        agents: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Instances per (map, type).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Run every portfolio algorithm on every instance.
    Run {
        /// Also write each map's flow annotation.
        #[arg(long)]
        dump_flows: bool,
        /// Also write a move dump per (instance, algorithm).
        #[arg(long)]
        traces: bool,
    },
    /// Compute best/worst labels from the results.
    Label,
    /// Encode instances as images and write the dataset manifest.
    Encode,
    /// Aggregate selectors: fixed:NAME, oracle, worst or learned:PATH.
    Evaluate {
        #[arg(long, required = true)]
        selector: Vec<String>,
    },
    /// Render the performance tables.
    Report {
        /// Predictions file of one split; repeatable.
        #[arg(long)]
        predictions: Vec<PathBuf>,
        /// Pre-aggregated per-split summaries instead of results.
        #[arg(long, conflicts_with = "predictions")]
        splits: Option<PathBuf>,
        /// Results file (default: <out>/results.csv).
        #[arg(long)]
        results: Option<PathBuf>,
    },
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn merged_config(cli: &Cli) -> Result<BenchmarkConfig> {
    let mut c = match &cli.config {
        Some(p) => BenchmarkConfig::load(p)?,
        None => BenchmarkConfig::default(),
    };
    macro_rules! set {
        ($($field:ident <- $flag:expr),* $(,)?) => {
            $(if let Some(v) = $flag.clone() { c.$field = v; })*
        };
    }
    set!(
        out <- cli.out,
        jobs <- cli.jobs,
        budget <- cli.budget,
        whca_window <- cli.whca_window,
        far_reservation <- cli.far_reservation,
        far_wait_threshold <- cli.far_wait_threshold,
        bmaa_lookahead <- cli.bmaa_lookahead,
        bmaa_flows <- cli.bmaa_flows,
    );
    if cli.whca_replan_interval.is_some() {
        c.whca_replan_interval = cli.whca_replan_interval;
    }
    if let Command::Generate { map, types, agents, seed, count } = &cli.command {
        if !map.is_empty() {
            c.maps = map.clone();
        }
        if !types.is_empty() {
            c.types = types.clone();
        }
        set!(agents <- agents, seed <- seed, count <- count);
    }
    Ok(c)
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = merged_config(&cli)?;
    match cli.command {
        Command::Generate { .. } => cmd_generate(&cfg),
        Command::Run { dump_flows, traces } => cmd_run(&cfg, dump_flows, traces),
        Command::Label => cmd_label(&cfg),
        Command::Encode => cmd_encode(&cfg),
        Command::Evaluate { selector } => cmd_evaluate(&cfg, &selector),
        Command::Report { predictions, splits, results } => cmd_report(&cfg, &predictions, splits.as_deref(), results),
    }
}

fn require(path: &Path, hint: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(BenchError::data(path, format!("not found; {hint}")))
    }
}

pub fn cmd_generate(cfg: &BenchmarkConfig) -> Result<()> {
    if cfg.maps.is_empty() {
        return Err(BenchError::Usage("no maps given (use --map or `maps` in the config)".into()));
    }
    let types = cfg.scenario_types()?;
    let mut maps = Vec::new();
    for path in &cfg.maps {
        let map = read_map(path)?;
        write(&cfg.out.join("maps").join(format!("{}.map", map.name())), read_to_string(path)?)?;
        maps.push(map);
    }
    let mut cells = Vec::new();
    for map in &maps {
        for &t in &types {
            for i in 0..cfg.count {
                cells.push((map, t, i));
            }
        }
    }
    let dir = cfg.out.join("instances");
    let outcomes = parallel_map(cfg.jobs, &cells, |&(map, t, i)| -> Result<std::result::Result<(), String>> {
        let seed = instance_seed(cfg.seed, map.name(), t, i);
        match generate(map, t, cfg.agents, seed) {
            Ok(mut inst) => {
                inst.id = format!("{}_{}_{:03}", map.name(), t, i);
                write(&dir.join(format!("{}.inst", inst.id)), instance_text(&inst))?;
                Ok(Ok(()))
            }
            Err(e) => Ok(Err(format!("{e} [index {i}]"))),
        }
    })?;
    let mut failed = 0;
    for o in outcomes {
        if let Err(msg) = o? {
            eprintln!("error: {msg}");
            failed += 1;
        }
    }
    println!("generated {} of {} instances in {}", cells.len() - failed, cells.len(), dir.display());
    if failed > 0 {
        return Err(BenchError::data(&dir, format!("{failed} instance(s) could not be generated")));
    }
    Ok(())
}

fn load_instances(cfg: &BenchmarkConfig) -> Result<Vec<ProblemInstance>> {
    let dir = cfg.out.join("instances");
    require(&dir, "run `generate` first")?;
    read_instance_dir(&dir)
}

fn load_maps(cfg: &BenchmarkConfig, instances: &[ProblemInstance]) -> Result<BTreeMap<String, GridMap>> {
    let mut maps = BTreeMap::new();
    for inst in instances {
        if !maps.contains_key(&inst.map_name) {
            let path = cfg.out.join("maps").join(format!("{}.map", inst.map_name));
            require(&path, "instance refers to a map that `generate` did not copy")?;
            maps.insert(inst.map_name.clone(), read_map(&path)?);
        }
    }
    Ok(maps)
}

fn file_stem(alg: Algorithm) -> &'static str {
    match alg {
        Algorithm::Bmaa => "bmaa",
        Algorithm::Far => "far",
        Algorithm::Whca => "whca",
    }
}

pub fn cmd_run(cfg: &BenchmarkConfig, dump_flows: bool, traces: bool) -> Result<()> {
    let budget = cfg.parsed_budget()?;
    let portfolio = cfg.portfolio()?;
    let instances = load_instances(cfg)?;
    let maps = load_maps(cfg, &instances)?;
    if dump_flows {
        for (name, map) in &maps {
            write(&cfg.out.join("flows").join(format!("{name}.txt")), annotate(map).dump(map))?;
        }
    }
    let runs = parallel_map(cfg.jobs, &instances, |inst| {
        let (result, outcomes) = run_portfolio(&maps[&inst.map_name], inst, &portfolio, &budget);
        let mut trace_files = Vec::new();
        let mut errors = Vec::new();
        for (alg, o) in Algorithm::ALL.into_iter().zip(outcomes) {
            if let Some(e) = o.error {
                errors.push(format!("{} {alg}: {e}", inst.id));
            }
            if let (true, Some(t)) = (traces, o.trace) {
                trace_files.push((format!("{}.{}.trace", inst.id, file_stem(alg)), trace_text(&inst.id, alg, &t)));
            }
        }
        (result, trace_files, errors)
    })?;
    let mut set = ResultSet::default();
    for (inst, (result, trace_files, errors)) in instances.iter().zip(runs) {
        for e in errors {
            eprintln!("warning: {e}");
        }
        for (name, text) in trace_files {
            write(&cfg.out.join("traces").join(name), text)?;
        }
        set.meta.insert(inst.id.clone(), (inst.map_name.clone(), inst.scenario));
        set.results.push(result);
    }
    let path = cfg.out.join("results.csv");
    write_results(&path, &set)?;
    println!("ran {} instances x 3 algorithms ({budget}) -> {}", set.results.len(), path.display());
    Ok(())
}

fn load_results(cfg: &BenchmarkConfig) -> Result<ResultSet> {
    let path = cfg.out.join("results.csv");
    require(&path, "run `run` first")?;
    read_results(&path)
}

pub fn cmd_label(cfg: &BenchmarkConfig) -> Result<()> {
    let set = load_results(cfg)?;
    let rows = label_rows(&set);
    let path = cfg.out.join("labels.csv");
    write_labels(&path, &rows)?;
    println!("labeled {} instances -> {}", rows.len(), path.display());
    Ok(())
}

pub fn cmd_encode(cfg: &BenchmarkConfig) -> Result<()> {
    let instances = load_instances(cfg)?;
    let maps = load_maps(cfg, &instances)?;
    let set = load_results(cfg)?;
    let dir = cfg.out.join("dataset");
    let rows = export_dataset(&instances, &set, &maps, &dir, cfg.jobs)?;
    println!("encoded {} instances -> {}", rows.len(), dir.join("manifest.csv").display());
    Ok(())
}

pub fn parse_selector(s: &str) -> Result<SelectorKind> {
    match s.split_once(':') {
        None if s == "oracle" => Ok(SelectorKind::Oracle),
        None if s == "worst" => Ok(SelectorKind::Worst),
        Some(("fixed", name)) => name.parse().map(SelectorKind::Fixed).map_err(|e| BenchError::Usage(format!("--selector {s}: {e}"))),
        Some(("learned", path)) => Ok(SelectorKind::Learned(read_predictions(Path::new(path))?)),
        _ => Err(BenchError::Usage(format!("--selector {s}: expected fixed:NAME, oracle, worst or learned:PATH"))),
    }
}

pub fn cmd_evaluate(cfg: &BenchmarkConfig, selectors: &[String]) -> Result<()> {
    let kinds = selectors.iter().map(|s| parse_selector(s)).collect::<Result<Vec<_>>>()?;
    let set = load_results(cfg)?;
    let path = cfg.out.join("evaluation.csv");
    let mut csv = String::from("selector,completion_rate,total_distance,goal_achievement_time,accuracy\n");
    for (arg, kind) in selectors.iter().zip(&kinds) {
        let m = kind.evaluate(&set.results).map_err(|e| BenchError::data(&cfg.out.join("results.csv"), format!("{arg}: {e}")))?;
        let acc = match kind {
            SelectorKind::Learned(p) => Some(accuracy(p, &set.results).map_err(|e| BenchError::Usage(e.to_string()))?),
            _ => None,
        };
        let acc_s = acc.map(|a| a.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{kind},{},{},{},{acc_s}\n",
            m.completion_rate, m.total_distance, m.goal_achievement_time
        ));
        print!(
            "{:<16} completion {:>6.2}%  distance {:>9.2}  gat {:>7.2}",
            kind.to_string(),
            100.0 * m.completion_rate,
            m.total_distance,
            m.goal_achievement_time
        );
        match acc {
            Some(a) => println!("  accuracy {:.2}%", 100.0 * a),
            None => println!(),
        }
    }
    write(&path, csv)?;
    Ok(())
}

pub fn cmd_report(
    cfg: &BenchmarkConfig,
    predictions: &[PathBuf],
    splits: Option<&Path>,
    results: Option<PathBuf>,
) -> Result<()> {
    let results_path = results.clone().unwrap_or_else(|| cfg.out.join("results.csv"));
    let set = if splits.is_none() || results.is_some() {
        require(&results_path, "run `run` first or pass --results")?;
        Some(read_results(&results_path)?)
    } else {
        None
    };
    let rows = match splits {
        Some(p) => read_splits(p)?,
        None => {
            let preds = predictions.iter().map(|p| read_predictions(p)).collect::<Result<Vec<_>>>()?;
            let set = set.as_ref().expect("results loaded");
            split_rows(set, &preds).map_err(|e| BenchError::data(&results_path, e.to_string()))?
        }
    };
    let t1 = table1(&rows);
    let mut text = render_table1(&t1);
    let mut t2_csv = None;
    if let Some(set) = &set {
        let t2 = table2(set);
        text.push('\n');
        text.push_str(&render_table2(&t2));
        t2_csv = Some(table2_csv(&t2));
    }
    write(&cfg.out.join("report.txt"), &text)?;
    write(&cfg.out.join("report_table1.csv"), table1_csv(&t1))?;
    if let Some(c) = t2_csv {
        write(&cfg.out.join("report_table2.csv"), c)?;
    }
    print!("{text}");
    Ok(())
}
