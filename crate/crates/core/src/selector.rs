//! Algorithm selectors: fixed, oracle, worst and learned from predictions.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::labels::{label, selector_quality, Algorithm, EvalError, MetricsTriple, PortfolioResult};

/// Predicted algorithm per instance id.
pub type Predictions = BTreeMap<String, Algorithm>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectorKind {
    Fixed(Algorithm),
    Oracle,
    Worst,
    Learned(Predictions),
}

impl SelectorKind {
    pub fn select(&self, result: &PortfolioResult) -> Option<Algorithm> {
        match self {
            SelectorKind::Fixed(a) => Some(*a),
            SelectorKind::Oracle => Some(label(result).best),
            SelectorKind::Worst => Some(label(result).worst),
            SelectorKind::Learned(p) => p.get(&result.instance_id).copied(),
        }
    }

    pub fn evaluate(&self, results: &[PortfolioResult]) -> Result<MetricsTriple, EvalError> {
        selector_quality(|r| self.select(r), results)
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectorKind::Fixed(a) => write!(f, "fixed:{a}"),
            SelectorKind::Oracle => f.write_str("oracle"),
            SelectorKind::Worst => f.write_str("worst"),
            SelectorKind::Learned(_) => f.write_str("learned"),
        }
    }
}

/// Fraction of `results` whose prediction equals the oracle label.
pub fn accuracy(predictions: &Predictions, results: &[PortfolioResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let missing: Vec<String> =
        results.iter().filter(|r| !predictions.contains_key(&r.instance_id)).map(|r| r.instance_id.clone()).collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingSelection(missing));
    }
    let hits = results.iter().filter(|r| predictions[&r.instance_id] == label(r).best).count();
    Ok(hits as f64 / results.len() as f64)
}
