//! Table-level linking: literal detection, orientation, and two-pass joint
//! inference over each header and a sample of its data cells.
//!
//! Pass 1 links every non-literal body cell in cell mode and every lane
//! header in header mode (context: caption plus the other headers). Pass 2
//! votes a dominant type per lane from the first `sample_size` non-literal
//! cells; when one wins, body candidates of that type and header candidates
//! whose label/description share a token with the type's label are boosted
//! and every winner is reselected.
//!
//! A "lane" is a column of a horizontal table. Vertical tables are handled
//! by transposing the full grid, so each original row becomes a lane whose
//! first cell is its header; annotations always carry original coordinates.

mod literal;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use literal::{detect_literal, LiteralKind};

use crate::kb_model::EntityId;
use crate::linker::{LinkRequest, LinkResult, Linker, Mode, ScoredCandidate};
use crate::text;
use crate::type_store::{has_type, TypeClosure};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("invalid table {table_id:?}: {reason}")]
    Invalid { table_id: String, reason: String },
    #[error("table parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub table_id: String,
    #[serde(default)]
    pub caption: String,
    #[serde(rename = "headers")]
    pub header_row: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn validate(&self) -> Result<(), TableError> {
        let invalid = |reason: String| TableError::Invalid { table_id: self.table_id.clone(), reason };
        if self.header_row.is_empty() || self.rows.is_empty() {
            return Err(invalid("table needs a header row and at least one body row".into()));
        }
        if let Some((i, row)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != self.header_row.len()) {
            return Err(invalid(format!("row {i} has {} cells, header has {}", row.len(), self.header_row.len())));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Table, TableError> {
        let t: Table = serde_json::from_str(s).map_err(|e| TableError::Parse(e.to_string()))?;
        t.validate()?;
        Ok(t)
    }

    /// Reads a CSV table. Without `has_header` every row is body and the
    /// headers are blank.
    pub fn from_csv(path: &Path, has_header: bool) -> Result<Table, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_path(path)
            .map_err(|e| TableError::Parse(e.to_string()))?;
        let mut grid: Vec<Vec<String>> = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| TableError::Parse(e.to_string()))?;
            grid.push(row.iter().map(str::to_owned).collect());
        }
        let table_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let header_row = if has_header && !grid.is_empty() {
            grid.remove(0)
        } else {
            vec![String::new(); grid.first().map_or(0, Vec::len)]
        };
        let t = Table { table_id, caption: String::new(), header_row, rows: grid };
        t.validate()?;
        Ok(t)
    }

    /// Transposes the full grid (header row included): the first column
    /// becomes the header row.
    pub fn transpose(&self) -> Table {
        let grid = self.full_grid();
        let cols = grid[0].len();
        let mut t: Vec<Vec<String>> = (0..cols).map(|c| grid.iter().map(|r| r[c].clone()).collect()).collect();
        let header_row = t.remove(0);
        Table { table_id: self.table_id.clone(), caption: self.caption.clone(), header_row, rows: t }
    }

    fn full_grid(&self) -> Vec<Vec<String>> {
        std::iter::once(self.header_row.clone()).chain(self.rows.iter().cloned()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Mean fraction of cells sharing their line's modal class, where a class
/// is a literal kind or "text".
fn homogeneity(lines: &[Vec<Option<LiteralKind>>]) -> f64 {
    if lines.is_empty() {
        return 0.0;
    }
    let total: f64 = lines
        .iter()
        .map(|line| {
            let mut counts: BTreeMap<Option<LiteralKind>, usize> = BTreeMap::new();
            for c in line {
                *counts.entry(*c).or_default() += 1;
            }
            *counts.values().max().unwrap_or(&0) as f64 / line.len() as f64
        })
        .sum();
    total / lines.len() as f64
}

pub fn classify_orientation_grid(body: &[Vec<String>]) -> Orientation {
    let classes: Vec<Vec<Option<LiteralKind>>> =
        body.iter().map(|r| r.iter().map(|c| detect_literal(c)).collect()).collect();
    let cols = classes.first().map_or(0, Vec::len);
    let columns: Vec<Vec<Option<LiteralKind>>> = (0..cols).map(|c| classes.iter().map(|r| r[c]).collect()).collect();
    if homogeneity(&classes) > homogeneity(&columns) {
        Orientation::Vertical
    } else {
        Orientation::Horizontal
    }
}

/// Greater column homogeneity (or a tie) means horizontal.
pub fn classify_orientation(table: &Table) -> Orientation {
    classify_orientation_grid(&table.rows)
}

/// Weighted type vote over sampled cells' candidate lists.
///
/// Every candidate adds its final score to each of its direct types; the
/// heaviest type wins (ties to the lowest id). The winner is returned only
/// if at least `threshold` of the sampled cells have some candidate of that
/// type, direct or inherited.
pub fn column_type_vote(
    candidate_sets: &[&[ScoredCandidate]],
    closure: &TypeClosure,
    threshold: f64,
) -> Option<EntityId> {
    if candidate_sets.is_empty() {
        return None;
    }
    let mut weight: BTreeMap<EntityId, f64> = BTreeMap::new();
    for set in candidate_sets {
        for c in set.iter() {
            for t in &c.record.direct_types {
                *weight.entry(*t).or_insert(0.0) += c.final_score;
            }
        }
    }
    let mut winner: Option<(EntityId, f64)> = None;
    for (t, w) in weight {
        if winner.is_none_or(|(_, best)| w > best) {
            winner = Some((t, w));
        }
    }
    let (winner, _) = winner?;
    let support = candidate_sets
        .iter()
        .filter(|set| set.iter().any(|c| has_type(&c.record, winner, closure)))
        .count();
    (support as f64 / candidate_sets.len() as f64 >= threshold).then_some(winner)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Entity { id: EntityId, label: String, final_score: f64 },
    Literal { literal: LiteralKind },
    Nil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAnnotation {
    /// `-1` addresses the header row.
    pub row: i64,
    pub col: usize,
    pub mention: String,
    pub mode: Mode,
    pub outcome: Outcome,
    /// Ranked candidate ids after type filtering and both passes.
    pub candidates: Vec<EntityId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneAnnotation {
    pub lane: usize,
    pub header_row: i64,
    pub header_col: usize,
    pub dominant_type: Option<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableAnnotation {
    pub table_id: String,
    pub orientation: Orientation,
    pub lanes: Vec<LaneAnnotation>,
    pub headers: Vec<CellAnnotation>,
    pub cells: Vec<CellAnnotation>,
}

impl TableAnnotation {
    /// Header and body annotations, header lanes first.
    pub fn all_cells(&self) -> impl Iterator<Item = &CellAnnotation> {
        self.headers.iter().chain(self.cells.iter())
    }
}

#[derive(Debug, Clone)]
struct Slot {
    row: i64,
    col: usize,
    text: String,
}

struct Lane {
    header: Slot,
    body: Vec<Slot>,
}

fn lanes_of(table: &Table, orientation: Orientation) -> Vec<Lane> {
    match orientation {
        Orientation::Horizontal => (0..table.header_row.len())
            .map(|c| Lane {
                header: Slot { row: -1, col: c, text: table.header_row[c].clone() },
                body: table
                    .rows
                    .iter()
                    .enumerate()
                    .map(|(r, row)| Slot { row: r as i64, col: c, text: row[c].clone() })
                    .collect(),
            })
            .collect(),
        Orientation::Vertical => table
            .full_grid()
            .into_iter()
            .enumerate()
            .map(|(g, line)| {
                let row = g as i64 - 1;
                let mut slots = line.into_iter().enumerate().map(|(c, text)| Slot { row, col: c, text });
                let header = slots.next().expect("validated table has columns");
                Lane { header, body: slots.collect() }
            })
            .collect(),
    }
}

/// Pass-1 state of one slot.
enum Pass1 {
    Literal(LiteralKind),
    Linked(LinkResult),
    Failed(String),
}

fn pass1(linker: &Linker, slot: &Slot, mode: Mode, context: Option<String>) -> Pass1 {
    if let Some(kind) = detect_literal(&slot.text) {
        return Pass1::Literal(kind);
    }
    let req = LinkRequest { mention: slot.text.clone(), mode, context, expected_types: None };
    match linker.link(&req) {
        Ok(r) => Pass1::Linked(r),
        Err(e) => Pass1::Failed(e.to_string()),
    }
}

fn annotate(slot: &Slot, mode: Mode, state: &Pass1) -> CellAnnotation {
    let (outcome, candidates, diagnostic) = match state {
        Pass1::Literal(kind) => (Outcome::Literal { literal: *kind }, Vec::new(), None),
        Pass1::Failed(msg) => (Outcome::Nil, Vec::new(), Some(msg.clone())),
        Pass1::Linked(r) => (
            r.chosen.as_ref().map_or(Outcome::Nil, |c| Outcome::Entity {
                id: c.id(),
                label: c.record.label.clone(),
                final_score: c.final_score,
            }),
            r.candidates.iter().map(ScoredCandidate::id).collect(),
            None,
        ),
    };
    CellAnnotation { row: slot.row, col: slot.col, mention: slot.text.clone(), mode, outcome, candidates, diagnostic }
}

fn header_context(table: &Table, lanes: &[Lane], lane: usize) -> String {
    let mut parts: Vec<&str> = Vec::new();
    if !table.caption.trim().is_empty() {
        parts.push(&table.caption);
    }
    for (i, l) in lanes.iter().enumerate() {
        if i != lane && !l.header.text.trim().is_empty() {
            parts.push(&l.header.text);
        }
    }
    parts.join(" ")
}

/// Annotates a whole table. Cells are linked in parallel on the current
/// rayon pool; output does not depend on scheduling.
pub fn link_table(table: &Table, linker: &Linker) -> Result<TableAnnotation, TableError> {
    table.validate()?;
    let orientation = classify_orientation(table);
    let lanes = lanes_of(table, orientation);
    let params = *linker.config().params();
    let weights = *linker.config().weights();

    let contexts: Vec<String> = (0..lanes.len()).map(|i| header_context(table, &lanes, i)).collect();
    let mut headers: Vec<Pass1> = lanes
        .par_iter()
        .zip(contexts.into_par_iter())
        .map(|(lane, ctx)| pass1(linker, &lane.header, Mode::Header, Some(ctx)))
        .collect();
    let mut bodies: Vec<Vec<Pass1>> = lanes
        .par_iter()
        .map(|lane| lane.body.par_iter().map(|s| pass1(linker, s, Mode::Cell, None)).collect())
        .collect();

    let mut lane_notes = Vec::with_capacity(lanes.len());
    for (i, lane) in lanes.iter().enumerate() {
        let empty: &[ScoredCandidate] = &[];
        let sample: Vec<&[ScoredCandidate]> = bodies[i]
            .iter()
            .filter(|s| !matches!(s, Pass1::Literal(_)))
            .take(params.sample_size)
            .map(|s| match s {
                Pass1::Linked(r) => r.candidates.as_slice(),
                _ => empty,
            })
            .collect();
        let dominant = column_type_vote(&sample, linker.closure(), params.support_threshold);

        if let Some(t) = dominant {
            for state in bodies[i].iter_mut() {
                if let Pass1::Linked(r) = state {
                    for c in r.candidates.iter_mut() {
                        if has_type(&c.record, t, linker.closure()) {
                            c.add_boost(params.column_type_boost, &weights);
                        }
                    }
                    r.reselect(params.min_link_score);
                }
            }
            let type_tokens: BTreeSet<String> =
                linker.index().get(t).map(|r| text::token_set(&r.label)).unwrap_or_default();
            if let (Pass1::Linked(r), false) = (&mut headers[i], type_tokens.is_empty()) {
                for c in r.candidates.iter_mut() {
                    let own = text::token_set(&format!("{} {}", c.record.label, c.record.description));
                    if !own.is_disjoint(&type_tokens) {
                        c.add_boost(params.header_column_boost, &weights);
                    }
                }
                r.reselect(params.min_link_score);
            }
        }
        lane_notes.push(LaneAnnotation {
            lane: i,
            header_row: lane.header.row,
            header_col: lane.header.col,
            dominant_type: dominant,
        });
    }

    let header_annotations = lanes
        .iter()
        .zip(&headers)
        .map(|(lane, state)| annotate(&lane.header, Mode::Header, state))
        .collect();
    let mut cells: Vec<CellAnnotation> = lanes
        .iter()
        .zip(&bodies)
        .flat_map(|(lane, states)| lane.body.iter().zip(states).map(|(s, st)| annotate(s, Mode::Cell, st)))
        .collect();
    cells.sort_by_key(|c| (c.row, c.col));

    Ok(TableAnnotation {
        table_id: table.table_id.clone(),
        orientation,
        lanes: lane_notes,
        headers: header_annotations,
        cells,
    })
}
