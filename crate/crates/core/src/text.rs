//! Text normalization, tokenization and the shipped English stopword list.
//!
//! Every exact-match tier, posting list and similarity score goes through
//! [`normalize`] and [`tokens`], so changing either one changes index
//! contents. Bump [`NORMALIZATION_VERSION`] / [`STOPWORD_LIST_VERSION`] when
//! that happens; both are recorded in the index manifest.

use std::collections::BTreeSet;
use unicode_normalization::UnicodeNormalization;

pub const NORMALIZATION_VERSION: &str = "nfc-lower-trim-ws/1";
pub const STOPWORD_LIST_VERSION: &str = "en-basic/1";

/// Fixed English stopword list. Sorted, so lookups can binary search.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been",
    "but", "by", "can", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her",
    "his", "how", "i", "if", "in", "into", "is", "it", "its", "more", "most", "no", "nor", "not",
    "of", "on", "or", "other", "our", "over", "she", "so", "such", "than", "that", "the",
    "their", "them", "then", "there", "these", "they", "this", "those", "to", "under", "up",
    "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "would", "you", "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// NFC, lowercase, trim, collapse internal whitespace runs to one space.
pub fn normalize(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    let lower = nfc.to_lowercase();
    let mut out = String::with_capacity(lower.len());
    for word in lower.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Non-stopword tokens of the normalized text, in order, with repeats.
///
/// Tokens are maximal runs of alphanumeric characters, so `SARS-CoV-2`
/// yields `sars`, `cov`, `2`.
pub fn tokens(s: &str) -> Vec<String> {
    normalize(s)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !is_stopword(t))
        .map(str::to_owned)
        .collect()
}

pub fn token_set(s: &str) -> BTreeSet<String> {
    tokens(s).into_iter().collect()
}
