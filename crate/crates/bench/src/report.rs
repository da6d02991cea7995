//! Selector evaluation tables.

use std::collections::BTreeMap;

use mapf_core::labels::EvalError;
use mapf_core::selector::{accuracy, Predictions, SelectorKind};
use mapf_core::{Algorithm, ScenarioType};

use crate::formats::{ResultSet, SplitRow};

/// Mean with standard error over splits; `se` is `None` for a single split.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub se: Option<f64>,
}

impl Stat {
    /// Summary of `values`; the standard error uses the n - 1 sample deviation.
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        if values.len() < 2 {
            return Stat { mean, se: None };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Stat { mean, se: Some((var / n).sqrt()) }
    }

    fn scaled(self, k: f64) -> Stat {
        Stat { mean: self.mean * k, se: self.se.map(|s| s * k) }
    }

    pub fn render(&self) -> String {
        match self.se {
            Some(se) => format!("{:.1} ± {:.1}", self.mean, se),
            None => format!("{:.1}", self.mean),
        }
    }
}

/// Row keys of the per-split summaries, in table order.
pub const SELECTOR_KEYS: [&str; 6] = ["oracle", "learned", "fixed:BMAA*", "fixed:FAR", "fixed:WHCA*", "worst"];

fn display_name(key: &str) -> &str {
    match key {
        "oracle" => "π*",
        "learned" => "π",
        "worst" => "Worst",
        k => k.strip_prefix("fixed:").unwrap_or(k),
    }
}

fn fixed_selectors() -> impl Iterator<Item = SelectorKind> {
    Algorithm::ALL.into_iter().map(SelectorKind::Fixed)
}

/// Evaluates every selector on each split. Without predictions the whole
/// result set is one split and there is no learned row; otherwise split `k`
/// is the set of instances predicted by `predictions[k]`.
pub fn split_rows(set: &ResultSet, predictions: &[Predictions]) -> Result<Vec<SplitRow>, EvalError> {
    let mut rows = Vec::new();
    let mut push = |split: u32, kind: &SelectorKind, sub: &ResultSet, acc: Option<f64>| -> Result<(), EvalError> {
        let m = kind.evaluate(&sub.results)?;
        rows.push(SplitRow {
            split,
            selector: kind.to_string(),
            completion_rate: m.completion_rate,
            total_distance: m.total_distance,
            goal_achievement_time: m.goal_achievement_time,
            accuracy: acc,
        });
        Ok(())
    };
    if predictions.is_empty() {
        push(0, &SelectorKind::Oracle, set, None)?;
        for kind in fixed_selectors() {
            push(0, &kind, set, None)?;
        }
        push(0, &SelectorKind::Worst, set, None)?;
        return Ok(rows);
    }
    for (k, p) in predictions.iter().enumerate() {
        let sub = set.filter(|id| p.contains_key(id));
        let k = k as u32;
        push(k, &SelectorKind::Oracle, &sub, None)?;
        let acc = accuracy(p, &sub.results)?;
        push(k, &SelectorKind::Learned(p.clone()), &sub, Some(acc))?;
        for kind in fixed_selectors() {
            push(k, &kind, &sub, None)?;
        }
        push(k, &SelectorKind::Worst, &sub, None)?;
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1Row {
    pub name: String,
    /// Percent.
    pub completion: Stat,
    pub distance: Stat,
    /// Seconds.
    pub gat: Stat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table1 {
    pub splits: usize,
    pub rows: Vec<Table1Row>,
    /// Percent of instances where the learned selector matched the oracle.
    pub accuracy: Option<Stat>,
}

/// Aggregates per-split rows. Rows are ordered by split id first, so the
/// result does not depend on input order.
pub fn table1(rows: &[SplitRow]) -> Table1 {
    let mut by_key: BTreeMap<&str, Vec<&SplitRow>> = BTreeMap::new();
    for r in rows {
        by_key.entry(r.selector.as_str()).or_default().push(r);
    }
    let mut splits = 0;
    let mut out = Vec::new();
    let mut acc = None;
    for key in SELECTOR_KEYS {
        let Some(rs) = by_key.get_mut(key) else { continue };
        rs.sort_by_key(|r| r.split);
        splits = splits.max(rs.len());
        let col = |f: fn(&SplitRow) -> f64| Stat::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
        out.push(Table1Row {
            name: display_name(key).to_string(),
            completion: col(|r| r.completion_rate).scaled(100.0),
            distance: col(|r| r.total_distance),
            gat: col(|r| r.goal_achievement_time),
        });
        if key == "learned" {
            let a: Vec<f64> = rs.iter().filter_map(|r| r.accuracy).collect();
            if !a.is_empty() {
                acc = Some(Stat::of(&a).scaled(100.0));
            }
        }
    }
    Table1 { splits, rows: out, accuracy: acc }
}

fn bold(s: String, on: bool) -> String {
    if on {
        format!("**{s}**")
    } else {
        s
    }
}

/// Plain-text table with `|` separators, columns padded to equal width.
fn align(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width: Vec<usize> =
        (0..cols).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut s = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, v)| format!("{v}{}", " ".repeat(width[c] - v.chars().count())))
            .collect();
        s.push_str(cells.join(" | ").trim_end());
        s.push('\n');
    }
    s
}

fn best_index(values: impl Iterator<Item = f64>, maximize: bool) -> Option<f64> {
    values.fold(None, |acc: Option<f64>, v| match acc {
        Some(a) if (maximize && a >= v) || (!maximize && a <= v) => Some(a),
        _ => Some(v),
    })
}

pub fn render_table1(t: &Table1) -> String {
    let stat = if t.splits > 1 {
        format!("mean ± standard error over {} splits", t.splits)
    } else {
        "single split".to_string()
    };
    let mut s = format!("Algorithm performance on all problems ({stat}; best per column in **bold**)\n\n");
    let best_c = best_index(t.rows.iter().map(|r| r.completion.mean), true);
    let best_d = best_index(t.rows.iter().map(|r| r.distance.mean), false);
    let best_g = best_index(t.rows.iter().map(|r| r.gat.mean), false);
    let mut grid = vec![vec![
        "Selector".to_string(),
        "Completion Rate (%)".to_string(),
        "Distance".to_string(),
        "Goal Achievement Time (s)".to_string(),
    ]];
    for r in &t.rows {
        grid.push(vec![
            r.name.clone(),
            bold(r.completion.render(), Some(r.completion.mean) == best_c),
            bold(r.distance.render(), Some(r.distance.mean) == best_d),
            bold(r.gat.render(), Some(r.gat.mean) == best_g),
        ]);
    }
    s.push_str(&align(&grid));
    if let Some(a) = t.accuracy {
        s.push_str(&format!("\nLearned selector chose the oracle's algorithm on {}% of test instances\n", a.render()));
    }
    s
}

pub fn table1_csv(t: &Table1) -> String {
    let mut s = String::from(
        "selector,completion_pct,completion_se,distance,distance_se,goal_achievement_time,goal_achievement_time_se\n",
    );
    let se = |x: Stat| x.se.map(|v| format!("{v:.4}")).unwrap_or_default();
    for r in &t.rows {
        s.push_str(&format!(
            "{},{:.4},{},{:.4},{},{:.4},{}\n",
            r.name,
            r.completion.mean,
            se(r.completion),
            r.distance.mean,
            se(r.distance),
            r.gat.mean,
            se(r.gat)
        ));
    }
    if let Some(a) = t.accuracy {
        s.push_str(&format!("accuracy_pct,{:.4},{},,,,\n", a.mean, se(a)));
    }
    s
}

/// Completion percent per scenario type and algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct Table2 {
    pub rows: Vec<(ScenarioType, [f64; 3])>,
}

pub fn table2(set: &ResultSet) -> Table2 {
    let mut sums: BTreeMap<ScenarioType, ([f64; 3], usize)> = BTreeMap::new();
    for r in &set.results {
        let Some(t) = set.scenario(&r.instance_id) else { continue };
        let e = sums.entry(t).or_insert(([0.0; 3], 0));
        for a in Algorithm::ALL {
            e.0[a.index()] += r.metrics(a).completion_rate;
        }
        e.1 += 1;
    }
    Table2 { rows: sums.into_iter().map(|(t, (s, n))| (t, s.map(|v| 100.0 * v / n as f64))).collect() }
}

pub fn render_table2(t: &Table2) -> String {
    let mut grid = vec![vec!["Problem Type".to_string(), "BMAA*".to_string(), "FAR".to_string(), "WHCA*".to_string()]];
    for (ty, v) in &t.rows {
        let best = best_index(v.iter().copied(), true);
        let mut row = vec![ty.title().to_string()];
        row.extend(v.iter().map(|x| bold(format!("{x:.1}"), Some(*x) == best)));
        grid.push(row);
    }
    format!("Completion rate (%) by problem type (best per row in **bold**)\n\n{}", align(&grid))
}

pub fn table2_csv(t: &Table2) -> String {
    let mut s = String::from("scenario,BMAA*,FAR,WHCA*\n");
    for (ty, v) in &t.rows {
        s.push_str(&format!("{},{:.4},{:.4},{:.4}\n", ty, v[0], v[1], v[2]));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error_of_alternating_values() {
        // Ten values m ± a have sample deviation a·sqrt(10/9), so SE = a / 3.
        let v: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 12.4 } else { 7.6 }).collect();
        let s = Stat::of(&v);
        assert!((s.mean - 10.0).abs() < 1e-12);
        assert!((s.se.unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(Stat::of(&[3.0]).se, None);
    }

    #[test]
    fn alignment_counts_characters() {
        let out = align(&[vec!["π*".into(), "1".into()], vec!["Worst".into(), "2".into()]]);
        assert_eq!(out, "π*    | 1\nWorst | 2\n");
    }
}
