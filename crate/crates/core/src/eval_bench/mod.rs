//! Evaluation against gold annotations, the latency bench, and the
//! synthetic knowledge-base generator used by both.

mod bench;
mod synth;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{
    bench, median, project_corpus_days, run_backend, Backend, BackendReport, CorpusProjection, LatencyReport,
    OnlineLatency, StageTimes,
};
pub use synth::{generate_synthetic_kb, GroundTruth, SynthParams, SyntheticKb, TierProfile};

use crate::kb_model::EntityId;
use crate::table_linker::{CellAnnotation, Outcome, TableAnnotation};

/// Expected annotation of one cell. Header cells use `row = -1`; a null
/// `expected` marks a literal / no-link cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldRecord {
    pub table_id: String,
    pub row: i64,
    pub col: usize,
    pub expected: Option<EntityId>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold cell {table_id}[{row},{col}] is not in any annotation")]
    GoldMismatch { table_id: String, row: i64, col: usize },
    #[error("gold cell {table_id}[{row},{col}] appears more than once")]
    DuplicateGold { table_id: String, row: i64, col: usize },
    #[error("table {0} is annotated more than once")]
    DuplicateAnnotation(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableCounts {
    pub cells_with_gold: usize,
    pub candidate_hits: usize,
    pub correct: usize,
    pub linked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub gold_records: usize,
    /// Gold cells with a non-null expected entity; the denominator of both metrics.
    pub cells_with_gold: usize,
    pub candidate_hits: usize,
    pub correct: usize,
    /// Gold cells where the linker emitted any link.
    pub linked: usize,
    pub candidate_recall: f64,
    pub precision: f64,
    /// `correct / linked`, the alternative reading of precision.
    pub precision_over_linked: f64,
    /// Set when `cells_with_gold == 0`; both metrics are then reported as 0.
    pub undefined: bool,
    pub per_table: BTreeMap<String, TableCounts>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Candidate recall and precision over gold cells with an expected entity.
pub fn evaluate(annotations: &[TableAnnotation], gold: &[GoldRecord]) -> Result<EvalReport, EvalError> {
    let mut cells: HashMap<(&str, i64, usize), &CellAnnotation> = HashMap::new();
    let mut seen_tables = std::collections::HashSet::new();
    for ann in annotations {
        if !seen_tables.insert(ann.table_id.as_str()) {
            return Err(EvalError::DuplicateAnnotation(ann.table_id.clone()));
        }
        for c in ann.all_cells() {
            cells.insert((ann.table_id.as_str(), c.row, c.col), c);
        }
    }

    let mut per_table: BTreeMap<String, TableCounts> = BTreeMap::new();
    let mut seen_gold = std::collections::HashSet::new();
    for g in gold {
        let key = (g.table_id.as_str(), g.row, g.col);
        if !seen_gold.insert(key) {
            return Err(EvalError::DuplicateGold { table_id: g.table_id.clone(), row: g.row, col: g.col });
        }
        let cell = cells.get(&key).ok_or_else(|| EvalError::GoldMismatch {
            table_id: g.table_id.clone(),
            row: g.row,
            col: g.col,
        })?;
        let Some(expected) = g.expected else { continue };
        let counts = per_table.entry(g.table_id.clone()).or_default();
        counts.cells_with_gold += 1;
        if cell.candidates.contains(&expected) {
            counts.candidate_hits += 1;
        }
        if let Outcome::Entity { id, .. } = cell.outcome {
            counts.linked += 1;
            if id == expected {
                counts.correct += 1;
            }
        }
    }

    let total = per_table.values().fold(TableCounts::default(), |acc, t| TableCounts {
        cells_with_gold: acc.cells_with_gold + t.cells_with_gold,
        candidate_hits: acc.candidate_hits + t.candidate_hits,
        correct: acc.correct + t.correct,
        linked: acc.linked + t.linked,
    });
    Ok(EvalReport {
        gold_records: gold.len(),
        cells_with_gold: total.cells_with_gold,
        candidate_hits: total.candidate_hits,
        correct: total.correct,
        linked: total.linked,
        candidate_recall: ratio(total.candidate_hits, total.cells_with_gold),
        precision: ratio(total.correct, total.cells_with_gold),
        precision_over_linked: ratio(total.correct, total.linked),
        undefined: total.cells_with_gold == 0,
        per_table,
    })
}
