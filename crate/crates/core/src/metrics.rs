//! Binary accuracy, calibration windows (CA) and constraint satisfaction
//! (CS), per depth and in total.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{query_id, AugmentedInstance, Constraint, ConstraintError};
use crate::datagen::Instance;
use crate::scalar::Scalar;

/// CA windows and CS thresholds, widest first.
pub const WINDOWS: [f64; 3] = [0.25, 0.10, 0.01];

/// Slack on the inclusive CA boundary so that e.g. |0.62 − 0.72| counts as
/// exactly 0.10.
const WINDOW_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("missing predictions for {} ids, first {}", .0.len(), .0[0])]
    Missing(Vec<String>),
    #[error("augmented record {0} has no instance in the dataset")]
    Orphan(String),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Constraint(#[from] ConstraintError),
}

/// Both sides of 0.5 agree; 0.5 itself counts as True.
pub fn binary_accuracy<T: Scalar>(pred: T, gold: T) -> bool {
    let half = T::of(0.5);
    (pred >= half) == (gold >= half)
}

/// `|pred − gold| ≤ window`.
pub fn ca_accuracy<T: Scalar>(pred: T, gold: T, window: T) -> bool {
    (pred - gold).abs() <= window + T::of(WINDOW_SLACK)
}

/// Percentage of constraints with violation strictly below `threshold`.
/// No constraints is vacuously 100%.
pub fn cs_rate<T: Scalar>(preds: &[T], constraints: &[Constraint], threshold: T) -> Result<f64, MetricsError> {
    if constraints.is_empty() {
        return Ok(100.0);
    }
    let mut hits = 0usize;
    for c in constraints {
        hits += usize::from(c.is_satisfied(preds, threshold)?);
    }
    Ok(100.0 * hits as f64 / constraints.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rate {
    pub hits: usize,
    pub total: usize,
}

impl Rate {
    fn add(&mut self, hit: bool) {
        self.hits += usize::from(hit);
        self.total += 1;
    }

    fn merge(&mut self, other: Rate) {
        self.hits += other.hits;
        self.total += other.total;
    }

    /// `None` when nothing was counted.
    pub fn percent(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.hits as f64 / self.total as f64)
    }
}

/// One row of the report; `depth` is `None` for the Total row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalCell {
    pub depth: Option<usize>,
    pub ba: Rate,
    /// Indexed like [`WINDOWS`]: CA25, CA10, CA1.
    pub ca: [Rate; 3],
    /// CS25, CS10, CS1.
    pub cs: [Rate; 3],
}

impl EvalCell {
    pub fn count(&self) -> usize {
        self.ba.total
    }

    fn merge(&mut self, other: &EvalCell) {
        self.ba.merge(other.ba);
        for k in 0..3 {
            self.ca[k].merge(other.ca[k]);
            self.cs[k].merge(other.cs[k]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub depths: Vec<EvalCell>,
    pub total: EvalCell,
}

impl EvalReport {
    pub fn is_empty(&self) -> bool {
        self.depths.is_empty()
    }

    pub fn cell(&self, depth: usize) -> Option<&EvalCell> {
        self.depths.iter().find(|c| c.depth == Some(depth))
    }
}

fn percent_cell(r: &Rate) -> String {
    r.percent().map_or_else(|| "-".to_string(), |p| format!("{p:.2}"))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<6} {:>6} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "Depth", "N", "BA", "CA25", "CA10", "CA1", "CS25", "CS10", "CS1"
        )?;
        for cell in self.depths.iter().chain([&self.total]) {
            let label = cell.depth.map_or_else(|| "Total".to_string(), |d| d.to_string());
            write!(f, "{label:<6} {:>6} {:>7}", cell.count(), percent_cell(&cell.ba))?;
            for r in cell.ca.iter().chain(&cell.cs) {
                write!(f, " {:>7}", percent_cell(r))?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Scores predictions keyed by instance id (main question) and by
/// [`query_id`] (augmented queries). Constraints are grouped under their
/// base instance's depth.
pub fn evaluate(
    preds: &BTreeMap<String, f64>,
    dataset: &[Instance],
    augmented: &[AugmentedInstance],
) -> Result<EvalReport, MetricsError> {
    let depth_of: BTreeMap<&str, usize> = dataset.iter().map(|i| (i.id.as_str(), i.depth)).collect();
    let mut missing: Vec<String> =
        dataset.iter().filter(|i| !preds.contains_key(&i.id)).map(|i| i.id.clone()).collect();
    for a in augmented {
        if !depth_of.contains_key(a.base_id.as_str()) {
            return Err(MetricsError::Orphan(a.base_id.clone()));
        }
        missing.extend((0..a.queries.len()).map(|k| query_id(&a.base_id, k)).filter(|id| !preds.contains_key(id)));
    }
    if !missing.is_empty() {
        return Err(MetricsError::Missing(missing));
    }

    let mut cells: BTreeMap<usize, EvalCell> = BTreeMap::new();
    for inst in dataset {
        let cell = cells.entry(inst.depth).or_default();
        let pred = preds[&inst.id];
        cell.ba.add(binary_accuracy(pred, inst.gold_probability));
        for (k, &w) in WINDOWS.iter().enumerate() {
            cell.ca[k].add(ca_accuracy(pred, inst.gold_probability, w));
        }
    }
    for a in augmented {
        let cell = cells.entry(depth_of[a.base_id.as_str()]).or_default();
        let p: Vec<f64> = (0..a.queries.len()).map(|k| preds[&query_id(&a.base_id, k)]).collect();
        for c in &a.constraints {
            let v = c.violation(&p)?;
            for (k, &t) in WINDOWS.iter().enumerate() {
                cell.cs[k].add(v < t);
            }
        }
    }
    let mut total = EvalCell::default();
    let depths = cells
        .into_iter()
        .map(|(d, mut cell)| {
            cell.depth = Some(d);
            total.merge(&cell);
            cell
        })
        .collect();
    Ok(EvalReport { depths, total })
}

#[derive(Serialize, Deserialize)]
struct PredictionLine {
    id: String,
    prob: f64,
}

/// Predictions as JSON lines of `{"id": ..., "prob": ...}`.
pub fn read_predictions(text: &str) -> Result<BTreeMap<String, f64>, MetricsError> {
    let mut out = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |message: String| MetricsError::Record { line: i + 1, message };
        let p: PredictionLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if !(0.0..=1.0).contains(&p.prob) {
            return Err(bad(format!("probability {} outside [0, 1]", p.prob)));
        }
        if !seen.insert(p.id.clone()) {
            return Err(bad(format!("duplicate id {}", p.id)));
        }
        out.insert(p.id, p.prob);
    }
    Ok(out)
}

pub fn write_predictions(preds: &BTreeMap<String, f64>) -> String {
    preds
        .iter()
        .map(|(id, &prob)| serde_json::to_string(&PredictionLine { id: id.clone(), prob }).expect("serializes") + "\n")
        .collect()
}
