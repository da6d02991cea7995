//! Portfolio results, best/worst labels and selector aggregates.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

/// A member of the portfolio. Declaration order is the canonical order used
/// for label indices and for breaking exact ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Bmaa,
    Far,
    Whca,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Bmaa, Algorithm::Far, Algorithm::Whca];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bmaa => "BMAA*",
            Algorithm::Far => "FAR",
            Algorithm::Whca => "WHCA*",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownAlgorithm(pub String);

impl fmt::Display for UnknownAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown algorithm `{}` (expected BMAA*, FAR or WHCA*)", self.0)
    }
}

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    /// Accepts the display names, case-insensitively, with or without `*`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_end_matches('*');
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().trim_end_matches('*').eq_ignore_ascii_case(t))
            .ok_or_else(|| UnknownAlgorithm(s.into()))
    }
}

/// Completion rate plus the two tie-break values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsTriple {
    pub completion_rate: f64,
    pub total_distance: f64,
    pub goal_achievement_time: f64,
}

impl MetricsTriple {
    /// Lexicographic quality order: higher completion, then shorter distance,
    /// then smaller goal achievement time. `Greater` means better.
    pub fn quality_cmp(&self, other: &Self) -> Ordering {
        self.completion_rate
            .total_cmp(&other.completion_rate)
            .then_with(|| other.total_distance.total_cmp(&self.total_distance))
            .then_with(|| other.goal_achievement_time.total_cmp(&self.goal_achievement_time))
    }
}

/// One algorithm's run on one instance.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmRun {
    pub metrics: MetricsTriple,
    pub seed: u64,
    /// Budget description, e.g. `steps:512` or `wall:30`.
    pub budget: String,
    pub failed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PortfolioResult {
    pub instance_id: String,
    /// Indexed by [`Algorithm::index`].
    pub runs: [AlgorithmRun; 3],
}

impl PortfolioResult {
    pub fn metrics(&self, algorithm: Algorithm) -> &MetricsTriple {
        &self.runs[algorithm.index()].metrics
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Label {
    pub best: Algorithm,
    pub worst: Algorithm,
}

/// Best and worst portfolio members under the lexicographic quality order.
///
/// Exact ties go to the earlier algorithm in canonical order for `best` and
/// to the later one for `worst`.
pub fn label(result: &PortfolioResult) -> Label {
    let mut best = Algorithm::Bmaa;
    let mut worst = Algorithm::Whca;
    for alg in Algorithm::ALL {
        if result.metrics(alg).quality_cmp(result.metrics(best)) == Ordering::Greater {
            best = alg;
        }
    }
    for alg in Algorithm::ALL.into_iter().rev() {
        if result.metrics(alg).quality_cmp(result.metrics(worst)) == Ordering::Less {
            worst = alg;
        }
    }
    Label { best, worst }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    /// The selection has no algorithm for these instances.
    MissingSelection(Vec<String>),
    Empty,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::MissingSelection(ids) => write!(f, "no selection for instance(s): {}", ids.join(", ")),
            EvalError::Empty => f.write_str("no instances to evaluate"),
        }
    }
}

impl core::error::Error for EvalError {}

/// Mean triple of the algorithms picked by `selection` over `results`.
pub fn selector_quality<F>(mut selection: F, results: &[PortfolioResult]) -> Result<MetricsTriple, EvalError>
where
    F: FnMut(&PortfolioResult) -> Option<Algorithm>,
{
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut missing = Vec::new();
    let mut sum = [0.0f64; 3];
    for r in results {
        match selection(r) {
            Some(alg) => {
                let m = r.metrics(alg);
                sum[0] += m.completion_rate;
                sum[1] += m.total_distance;
                sum[2] += m.goal_achievement_time;
            }
            None => missing.push(r.instance_id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(EvalError::MissingSelection(missing));
    }
    let k = results.len() as f64;
    Ok(MetricsTriple { completion_rate: sum[0] / k, total_distance: sum[1] / k, goal_achievement_time: sum[2] / k })
}
