//! Per-mention linking: candidate retrieval, type-tier analysis, domain
//! type inference, prominence and context scoring, header/cell modes and
//! final selection.
//!
//! Each surviving candidate gets
//! `final = w_type*type + w_match*match + w_prom*prominence + w_ctx*context + boosts`
//! and the winner is the maximum under `(final, sitelinks, -id)`, provided it
//! clears `min_link_score`. BAD-tier candidates never reach scoring.

mod cache;
mod context;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{closure_fingerprint, CacheStats, CachedLinker, LinkCache};
pub use context::{tf_cosine, ContextScorer, LexicalScorer};

use crate::candidate_index::{Index, MatchTier, RawCandidate};
use crate::kb_model::{EntityId, InferenceRule, ItemRecord, ValidatedConfig, Weights};
use crate::text::normalize;
use crate::type_store::{all_types, TypeClosure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinkError {
    #[error("mention {0:?} is empty after normalization and stopword removal")]
    EmptyMention(String),
    #[error("index unavailable: {0}")]
    IndexUnavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TypeTier {
    Bad,
    Unknown,
    Ok,
    Good,
    NearMiss,
    Target,
}

impl TypeTier {
    /// `None` for BAD: such candidates are dropped, never scored.
    pub fn score(self) -> Option<f64> {
        match self {
            TypeTier::Target => Some(1.0),
            TypeTier::NearMiss => Some(0.8),
            TypeTier::Good => Some(0.6),
            TypeTier::Ok => Some(0.4),
            TypeTier::Unknown => Some(0.2),
            TypeTier::Bad => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Cell,
    Header,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cell" => Ok(Mode::Cell),
            "header" => Ok(Mode::Header),
            other => Err(format!("unknown mode {other:?} (expected cell or header)")),
        }
    }
}

pub fn match_score(tier: MatchTier, token_overlap: f64) -> f64 {
    match tier {
        MatchTier::ExactLabel => 1.0,
        MatchTier::ExactAlias => 0.8,
        MatchTier::Partial => 0.4 * token_overlap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreComponents {
    pub type_score: f64,
    pub match_score: f64,
    pub prominence: f64,
    pub context_sim: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub record: Arc<ItemRecord>,
    pub match_tier: MatchTier,
    pub token_overlap: f64,
    pub type_tier: TypeTier,
    pub inferred_type_names: BTreeSet<String>,
    pub components: ScoreComponents,
    pub boosts: f64,
    pub final_score: f64,
}

impl ScoredCandidate {
    pub fn id(&self) -> EntityId {
        self.record.id
    }

    /// Recomputes `final_score` from components and boosts.
    pub fn rescore(&mut self, w: &Weights) {
        let c = &self.components;
        let base = w.w_type * c.type_score + w.w_match * c.match_score + w.w_prom * c.prominence + w.w_ctx * c.context_sim;
        self.final_score = base + self.boosts;
    }

    pub fn add_boost(&mut self, boost: f64, w: &Weights) {
        self.boosts += boost;
        self.rescore(w);
    }
}

/// `(final_score desc, sitelinks desc, id asc)`.
pub fn selection_order(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.final_score
        .total_cmp(&a.final_score)
        .then_with(|| b.record.sitelinks_count.cmp(&a.record.sitelinks_count))
        .then_with(|| a.record.id.cmp(&b.record.id))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub retrieved: usize,
    pub rejected_bad: usize,
    pub below_threshold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkResult {
    /// Normalized mention.
    pub mention: String,
    pub mode: Mode,
    pub chosen: Option<ScoredCandidate>,
    pub candidates: Vec<ScoredCandidate>,
    pub diagnostics: Diagnostics,
}

impl LinkResult {
    pub fn chosen_id(&self) -> Option<EntityId> {
        self.chosen.as_ref().map(ScoredCandidate::id)
    }

    /// Re-sorts candidates and reselects the winner after boosts changed.
    pub fn reselect(&mut self, min_link_score: f64) {
        self.candidates.sort_by(selection_order);
        self.diagnostics.below_threshold = self.candidates.iter().filter(|c| c.final_score < min_link_score).count();
        self.chosen = self.candidates.first().filter(|c| c.final_score >= min_link_score).cloned();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinkRequest {
    pub mention: String,
    pub mode: Mode,
    pub context: Option<String>,
    pub expected_types: Option<BTreeSet<String>>,
}

impl LinkRequest {
    pub fn cell(mention: impl Into<String>) -> Self {
        LinkRequest { mention: mention.into(), mode: Mode::Cell, context: None, expected_types: None }
    }

    pub fn header(mention: impl Into<String>) -> Self {
        LinkRequest { mode: Mode::Header, ..Self::cell(mention) }
    }

    pub fn with_context(mut self, context: impl Into<String>) -> Self {
        self.context = Some(context.into());
        self
    }

    pub fn expecting<I: IntoIterator<Item = S>, S: Into<String>>(mut self, names: I) -> Self {
        self.expected_types = Some(names.into_iter().map(Into::into).collect());
        self
    }
}

/// Type names inferred from watch-listed properties present on the record.
pub fn infer_domain_types(record: &ItemRecord, rules: &[InferenceRule]) -> BTreeSet<String> {
    rules
        .iter()
        .filter(|r| record.flagged_props.contains(&r.if_property))
        .map(|r| r.then_type_name.clone())
        .collect()
}

/// Tier of a record. BAD wins over everything, then TARGET and NEAR_MISS
/// (only reachable with expected types), then GOOD, OK, UNKNOWN.
pub fn classify_type_tier(
    record: &ItemRecord,
    config: &ValidatedConfig,
    closure: &TypeClosure,
    expected_types: Option<&BTreeSet<String>>,
) -> TypeTier {
    let inferred = infer_domain_types(record, config.rules());
    classify_with(record, config, closure, expected_types, &inferred)
}

fn classify_with(
    record: &ItemRecord,
    config: &ValidatedConfig,
    closure: &TypeClosure,
    expected_types: Option<&BTreeSet<String>>,
    inferred: &BTreeSet<String>,
) -> TypeTier {
    let types = all_types(record, closure);
    let has = |id: &EntityId| types.binary_search(id).is_ok();

    if config.bad_ids().iter().any(has) {
        return TypeTier::Bad;
    }
    if let Some(expected) = expected_types {
        if expected.iter().any(|name| config.ids_for(name).iter().any(has)) {
            return TypeTier::Target;
        }
        if expected
            .iter()
            .filter_map(|name| config.near_miss_ids(name))
            .any(|ids| ids.iter().any(has))
        {
            return TypeTier::NearMiss;
        }
    }
    if config.good_ids().iter().any(has) || inferred.iter().any(|n| config.good_names().contains(n)) {
        return TypeTier::Good;
    }
    if config.ok_ids().iter().any(has) || inferred.iter().any(|n| config.ok_names().contains(n)) {
        return TypeTier::Ok;
    }
    TypeTier::Unknown
}

/// Immutable linking context: index, closure, validated config and the
/// context scorer. Cheap to clone.
#[derive(Clone)]
pub struct Linker {
    index: Arc<Index>,
    closure: Arc<TypeClosure>,
    config: Arc<ValidatedConfig>,
    scorer: Arc<dyn ContextScorer>,
}

impl Linker {
    pub fn new(index: Arc<Index>, closure: Arc<TypeClosure>, config: Arc<ValidatedConfig>) -> Self {
        Self::with_scorer(index, closure, config, Arc::new(LexicalScorer))
    }

    pub fn with_scorer(
        index: Arc<Index>,
        closure: Arc<TypeClosure>,
        config: Arc<ValidatedConfig>,
        scorer: Arc<dyn ContextScorer>,
    ) -> Self {
        Linker { index, closure, config, scorer }
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn closure(&self) -> &TypeClosure {
        &self.closure
    }

    pub fn config(&self) -> &ValidatedConfig {
        &self.config
    }

    pub fn scorer(&self) -> &dyn ContextScorer {
        self.scorer.as_ref()
    }

    pub fn link(&self, req: &LinkRequest) -> Result<LinkResult, LinkError> {
        let raw = self.retrieve(&req.mention)?;
        Ok(self.rank(req, raw))
    }

    /// Candidate stage: top-k search.
    pub fn retrieve(&self, mention: &str) -> Result<Vec<RawCandidate>, LinkError> {
        let p = self.config.params();
        self.index
            .search(mention, p.k, p.partial_match_gate)
            .map_err(|e| LinkError::EmptyMention(e.0))
    }

    /// Type-analysis and scoring stage over already retrieved candidates.
    pub fn rank(&self, req: &LinkRequest, raw: Vec<RawCandidate>) -> LinkResult {
        let weights = *self.config.weights();
        let params = self.config.params();
        let mut diagnostics = Diagnostics { retrieved: raw.len(), ..Diagnostics::default() };

        let mut survivors: Vec<(RawCandidate, TypeTier, BTreeSet<String>)> = Vec::with_capacity(raw.len());
        for c in raw {
            let inferred = infer_domain_types(&c.record, self.config.rules());
            let tier = classify_with(&c.record, &self.config, &self.closure, req.expected_types.as_ref(), &inferred);
            if tier == TypeTier::Bad {
                diagnostics.rejected_bad += 1;
            } else {
                survivors.push((c, tier, inferred));
            }
        }

        let max_sitelinks = survivors.iter().map(|(c, ..)| c.record.sitelinks_count).max().unwrap_or(0);
        let context = req.context.as_deref().filter(|c| !c.trim().is_empty());

        let candidates = survivors
            .into_iter()
            .map(|(c, tier, inferred)| {
                let prominence = if max_sitelinks == 0 {
                    0.0
                } else {
                    c.record.sitelinks_count as f64 / max_sitelinks as f64
                };
                let context_sim = context.map_or(0.0, |ctx| self.scorer.similarity(ctx, &c.record));
                let boosts = if req.mode == Mode::Header && c.record.id.is_property() {
                    params.header_property_boost
                } else {
                    0.0
                };
                let mut scored = ScoredCandidate {
                    match_tier: c.match_tier,
                    token_overlap: c.token_overlap,
                    type_tier: tier,
                    inferred_type_names: inferred,
                    components: ScoreComponents {
                        type_score: tier.score().expect("bad candidates were removed"),
                        match_score: match_score(c.match_tier, c.token_overlap),
                        prominence,
                        context_sim,
                    },
                    boosts,
                    final_score: 0.0,
                    record: c.record,
                };
                scored.rescore(&weights);
                scored
            })
            .collect();

        let mut result = LinkResult {
            mention: normalize(&req.mention),
            mode: req.mode,
            chosen: None,
            candidates,
            diagnostics,
        };
        result.reselect(params.min_link_score);
        result
    }
}
