use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Cell contents that are values rather than entity mentions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LiteralKind {
    Number,
    Percent,
    Date,
    Sequence,
    ClinicalTrialId,
    Empty,
}

const NUM: &str = r"[+\-−]?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?|[+\-−]?\.\d+";

static TRIAL_ID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^NCT\d{8}$").unwrap());
static SEQUENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(?i)[ACGTUN]{8,}$").unwrap());
static PERCENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!(r"^(?:{NUM})\s*%$")).unwrap());
static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!(r"^(?:{NUM})$")).unwrap());
// en/em dash ranges, or a hyphen with spaces; bare hyphens are left to dates
static RANGE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"^(?:{NUM})(?:\s*[–—]\s*|\s+-\s+)(?:{NUM})$")).unwrap());
static DATE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?:(\d{4})[-/](\d{2})[-/](\d{2})|(\d{4})-(\d{2})|(\d{2})[-/](\d{4})|\d{4})$").unwrap()
});

fn valid_month(m: Option<regex::Match<'_>>) -> bool {
    m.and_then(|m| m.as_str().parse::<u32>().ok()).is_none_or(|m| (1..=12).contains(&m))
}

fn is_date(s: &str) -> bool {
    let Some(c) = DATE.captures(s) else { return false };
    let day_ok = c
        .get(3)
        .and_then(|d| d.as_str().parse::<u32>().ok())
        .is_none_or(|d| (1..=31).contains(&d));
    valid_month(c.get(2)) && valid_month(c.get(5)) && valid_month(c.get(6)) && day_ok
}

/// Classifies a cell, first match wins: EMPTY, CLINICAL_TRIAL_ID, SEQUENCE,
/// PERCENT, NUMBER, DATE. `None` means the cell should be entity-linked.
///
/// A bare `YYYY` is caught by NUMBER before DATE is tried.
pub fn detect_literal(cell: &str) -> Option<LiteralKind> {
    let s = cell.trim();
    if s.is_empty() || matches!(s, "-" | "–" | "—") || s.eq_ignore_ascii_case("n/a") {
        return Some(LiteralKind::Empty);
    }
    if TRIAL_ID.is_match(s) {
        return Some(LiteralKind::ClinicalTrialId);
    }
    if SEQUENCE.is_match(s) {
        return Some(LiteralKind::Sequence);
    }
    if PERCENT.is_match(s) {
        return Some(LiteralKind::Percent);
    }
    if NUMBER.is_match(s) || RANGE.is_match(s) {
        return Some(LiteralKind::Number);
    }
    if is_date(s) {
        return Some(LiteralKind::Date);
    }
    None
}
