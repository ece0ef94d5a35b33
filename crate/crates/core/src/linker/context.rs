use std::collections::BTreeMap;

use crate::kb_model::ItemRecord;
use crate::text;

/// Scores how well a context string fits a candidate, in `[0, 1]`.
///
/// The lexical default can be swapped for an embedding model; the scorer
/// name is part of the link cache key.
pub trait ContextScorer: Send + Sync {
    fn name(&self) -> &str;
    fn similarity(&self, context: &str, record: &ItemRecord) -> f64;
}

/// Cosine similarity of term-frequency vectors over normalized,
/// stopword-filtered tokens of the context and of label + description +
/// aliases.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl ContextScorer for LexicalScorer {
    fn name(&self) -> &str {
        "lexical-tf-cosine/1"
    }

    fn similarity(&self, context: &str, record: &ItemRecord) -> f64 {
        let mut doc = String::with_capacity(record.label.len() + record.description.len() + 16);
        doc.push_str(&record.label);
        doc.push(' ');
        doc.push_str(&record.description);
        for a in &record.aliases {
            doc.push(' ');
            doc.push_str(a);
        }
        tf_cosine(context, &doc)
    }
}

fn term_counts(s: &str) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for t in text::tokens(s) {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts
}

/// Integer dot products keep the cosine of a vector with itself at exactly 1.0.
pub fn tf_cosine(a: &str, b: &str) -> f64 {
    let (ca, cb) = (term_counts(a), term_counts(b));
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let dot: u64 = ca.iter().filter_map(|(t, x)| cb.get(t).map(|y| x * y)).sum();
    if dot == 0 {
        return 0.0;
    }
    let na: u64 = ca.values().map(|x| x * x).sum();
    let nb: u64 = cb.values().map(|x| x * x).sum();
    (dot as f64 / ((na as f64) * (nb as f64)).sqrt()).min(1.0)
}
