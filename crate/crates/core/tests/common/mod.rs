//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the index, closure or scoring code;
//! only the text normalization and literal detection primitives are shared.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tablink::candidate_index::{build_index, MatchTier};
use tablink::kb_model::{
    validate_config, DomainConfig, EntityId, InferenceRule, ItemRecord, Relation, Tiers, TypeEdge, ValidatedConfig,
};
use tablink::linker::{LinkRequest, Linker, Mode};
use tablink::table_linker::{detect_literal, Table};
use tablink::text::{normalize, tokens};
use tablink::type_store::build_closure;

pub const RECORDS: &str = include_str!("../fixtures/kb_records.jsonl");
pub const EDGES: &str = include_str!("../fixtures/kb_edges.jsonl");
pub const CONFIG: &str = include_str!("../fixtures/kb_config.json");
pub const VARIANTS: &str = include_str!("../fixtures/variant_table.json");

pub fn q(n: u64) -> EntityId {
    EntityId::item(n)
}

pub fn p(n: u64) -> EntityId {
    EntityId::property(n)
}

pub fn fixture_linker() -> Linker {
    let records: Vec<ItemRecord> = tablink::jsonl::read_from(RECORDS.as_bytes()).unwrap();
    let edges: Vec<TypeEdge> = tablink::jsonl::read_from(EDGES.as_bytes()).unwrap();
    let config = validate_config(DomainConfig::from_json(CONFIG).unwrap()).unwrap();
    Linker::new(Arc::new(build_index(records)), Arc::new(build_closure(&edges).closure), Arc::new(config))
}

// ---------------------------------------------------------------- random KBs

pub const WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "virus", "cell", "protein", "strain", "lineage", "state", "river", "film",
    "song", "band", "gene", "drug", "trial", "county", "north", "south",
];

pub struct RandomKb {
    pub records: Vec<ItemRecord>,
    pub edges: Vec<TypeEdge>,
    pub config: DomainConfig,
}

fn phrase(rng: &mut ChaCha8Rng, vocab: usize) -> String {
    let n = rng.gen_range(1..=3);
    (0..n).map(|_| WORDS[rng.gen_range(0..vocab.min(WORDS.len()))]).collect::<Vec<_>>().join(" ")
}

/// Small KB with heavy label collisions, a typed hierarchy with cycles,
/// property records in tier lists and a flag-based inference rule.
pub fn random_kb(rng: &mut ChaCha8Rng, n_items: usize, vocab: usize) -> RandomKb {
    let n_types = 30u64;
    let mut edges = Vec::new();
    for t in 4..=n_types {
        if rng.gen_bool(0.8) {
            edges.push(TypeEdge { child: q(t), parent: q(rng.gen_range(1..t)), relation: Relation::SubclassOf });
        }
        if rng.gen_bool(0.08) {
            edges.push(TypeEdge { child: q(rng.gen_range(4..=n_types)), parent: q(t), relation: Relation::SubclassOf });
        }
    }
    for pid in 21..=25 {
        if rng.gen_bool(0.6) {
            edges.push(TypeEdge { child: p(pid), parent: p(rng.gen_range(20..pid)), relation: Relation::SubpropertyOf });
        }
    }

    let mut records = Vec::new();
    for i in 0..n_items {
        let mut aliases = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            aliases.push(phrase(rng, vocab));
        }
        let types: Vec<EntityId> = (0..rng.gen_range(0..=2)).map(|_| q(rng.gen_range(1..=n_types))).collect();
        let mut flags = BTreeSet::new();
        if rng.gen_bool(0.1) {
            flags.insert(p(486));
        }
        let description = if rng.gen_bool(0.5) { phrase(rng, WORDS.len()) } else { String::new() };
        let r = ItemRecord::new(q(1000 + i as u64), phrase(rng, vocab), aliases, description, types, rng.gen_range(0..100), flags)
            .unwrap();
        records.push(r);
    }
    for pid in 20..=25 {
        let r = ItemRecord::new(p(pid), phrase(rng, vocab), vec![], "property", vec![], 0, BTreeSet::new()).unwrap();
        records.push(r);
    }
    // class records so header votes have labels to compare against
    for t in 1..=n_types {
        if rng.gen_bool(0.7) {
            let r = ItemRecord::new(q(t), phrase(rng, vocab), vec![], "class", vec![], rng.gen_range(0..10), BTreeSet::new())
                .unwrap();
            records.push(r);
        }
    }

    let mut config = DomainConfig::default();
    for (name, ids) in [
        ("bad-a", vec![q(1)]),
        ("bad-b", vec![q(2)]),
        ("good-a", vec![q(3), p(20)]),
        ("good-b", vec![q(4)]),
        ("ok-a", vec![q(5)]),
        ("ok-b", vec![q(6), p(22)]),
        ("mesh item", vec![]),
    ] {
        config.type_dictionary.insert(name.into(), ids);
    }
    config.tiers = Tiers {
        target: vec![],
        near_miss: vec!["ok-a".into()],
        good: vec!["good-a".into(), "good-b".into(), "mesh item".into()],
        ok: vec!["ok-a".into(), "ok-b".into()],
        bad: vec!["bad-a".into(), "bad-b".into()],
    };
    config.near_miss_map.insert("good-a".into(), vec!["ok-a".into()]);
    config.property_inference = vec![InferenceRule { if_property: p(486), then_type_name: "mesh item".into() }];
    RandomKb { records, edges, config }
}

pub fn random_mention(rng: &mut ChaCha8Rng, records: &[ItemRecord], vocab: usize) -> String {
    match rng.gen_range(0..10) {
        0..=3 => {
            let r = records.choose(rng).unwrap();
            let s = r.aliases.choose(rng).filter(|_| rng.gen_bool(0.3)).unwrap_or(&r.label).clone();
            if rng.gen_bool(0.3) {
                format!("  {} ", s.to_uppercase())
            } else {
                s
            }
        }
        4 => "the of".into(),
        _ => phrase(rng, vocab),
    }
}

pub fn random_request(rng: &mut ChaCha8Rng, records: &[ItemRecord], vocab: usize) -> LinkRequest {
    let mut req = if rng.gen_bool(0.5) {
        LinkRequest::cell(random_mention(rng, records, vocab))
    } else {
        LinkRequest::header(random_mention(rng, records, vocab))
    };
    if rng.gen_bool(0.5) {
        req.context = Some(phrase(rng, WORDS.len()));
    }
    if rng.gen_bool(0.3) {
        let names = ["good-a", "ok-a", "ok-b", "bad-a", "unknown-name"];
        req.expected_types = Some((0..rng.gen_range(1..=2)).map(|_| names.choose(rng).unwrap().to_string()).collect());
    }
    req
}

// ------------------------------------------------------------ closure oracles

/// Ancestors by breadth-first reachability over well-kinded edges.
pub fn bfs_ancestors(edges: &[TypeEdge]) -> HashMap<EntityId, BTreeSet<EntityId>> {
    let mut parents: HashMap<EntityId, Vec<EntityId>> = HashMap::new();
    for e in edges {
        let ok = match e.relation {
            Relation::SubclassOf => e.child.is_item() && e.parent.is_item(),
            Relation::SubpropertyOf => e.child.is_property() && e.parent.is_property(),
        };
        if ok {
            parents.entry(e.child).or_default().push(e.parent);
        }
    }
    let mut out = HashMap::new();
    for &start in parents.keys() {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<EntityId> = parents[&start].iter().copied().collect();
        while let Some(n) = queue.pop_front() {
            if seen.insert(n) {
                if let Some(ps) = parents.get(&n) {
                    queue.extend(ps.iter().copied());
                }
            }
        }
        seen.remove(&start);
        out.insert(start, seen);
    }
    out
}

/// Warshall transitive closure on node indices, diagonal cleared.
#[allow(clippy::needless_range_loop)]
pub fn warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in edges {
        m[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = false;
    }
    m
}

// ------------------------------------------------------------- search oracle

pub struct Prepared {
    pub record: Arc<ItemRecord>,
    label: String,
    aliases: Vec<String>,
    toks: BTreeSet<String>,
}

pub fn prepare(records: &[ItemRecord]) -> Vec<Prepared> {
    // last record wins for duplicate ids, like the index
    let mut by_id: BTreeMap<EntityId, &ItemRecord> = BTreeMap::new();
    for r in records {
        by_id.insert(r.id, r);
    }
    by_id
        .into_values()
        .map(|r| {
            let mut toks: BTreeSet<String> = tokens(&r.label).into_iter().collect();
            for a in &r.aliases {
                toks.extend(tokens(a));
            }
            Prepared {
                record: Arc::new(r.clone()),
                label: normalize(&r.label),
                aliases: r.aliases.iter().map(|a| normalize(a)).collect(),
                toks,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleHit {
    pub id: EntityId,
    pub tier: MatchTier,
    pub overlap: f64,
}

fn tier_rank(t: MatchTier) -> u8 {
    match t {
        MatchTier::ExactLabel => 2,
        MatchTier::ExactAlias => 1,
        MatchTier::Partial => 0,
    }
}

/// Full ordering of every matching record (`None` for an empty mention).
pub fn oracle_search_all(kb: &[Prepared], mention: &str, gate_fraction: f64) -> Option<Vec<(OracleHit, usize)>> {
    let norm = normalize(mention);
    let m: BTreeSet<String> = tokens(&norm).into_iter().collect();
    if m.is_empty() {
        return None;
    }
    let gate = ((m.len() as f64 * gate_fraction).ceil() as usize).max(1);
    let mut hits = Vec::new();
    for (i, r) in kb.iter().enumerate() {
        let hit = if r.label == norm {
            Some((MatchTier::ExactLabel, 1.0))
        } else if r.aliases.contains(&norm) {
            Some((MatchTier::ExactAlias, 1.0))
        } else {
            let c = m.iter().filter(|t| r.toks.contains(*t)).count();
            (c >= gate).then(|| (MatchTier::Partial, c as f64 / m.len() as f64))
        };
        if let Some((tier, overlap)) = hit {
            hits.push((OracleHit { id: r.record.id, tier, overlap }, i));
        }
    }
    hits.sort_by(|(a, ai), (b, bi)| {
        tier_rank(b.tier)
            .cmp(&tier_rank(a.tier))
            .then(b.overlap.total_cmp(&a.overlap))
            .then(kb[*bi].record.sitelinks_count.cmp(&kb[*ai].record.sitelinks_count))
            .then(a.id.cmp(&b.id))
    });
    Some(hits)
}

pub fn oracle_search(kb: &[Prepared], mention: &str, k: usize, gate: f64) -> Option<Vec<OracleHit>> {
    oracle_search_all(kb, mention, gate).map(|h| h.into_iter().take(k).map(|(h, _)| h).collect())
}

// --------------------------------------------------------------- link oracle

pub struct OracleKb {
    pub kb: Vec<Prepared>,
    pub ancestors: HashMap<EntityId, BTreeSet<EntityId>>,
    pub config: ValidatedConfig,
}

impl OracleKb {
    pub fn new(records: &[ItemRecord], edges: &[TypeEdge], config: DomainConfig) -> Self {
        OracleKb { kb: prepare(records), ancestors: bfs_ancestors(edges), config: validate_config(config).unwrap() }
    }

    pub fn type_set(&self, r: &ItemRecord) -> BTreeSet<EntityId> {
        let mut roots: Vec<EntityId> = r.direct_types.clone();
        if r.id.is_property() {
            roots.push(r.id);
        }
        let mut out = BTreeSet::new();
        for t in roots {
            out.insert(t);
            if let Some(a) = self.ancestors.get(&t) {
                out.extend(a.iter().copied());
            }
        }
        out
    }

    fn ids(&self, name: &str) -> Vec<EntityId> {
        self.config.source().type_dictionary.get(name).cloned().unwrap_or_default()
    }

    /// Type score, or `None` for BAD.
    pub fn type_score(&self, r: &ItemRecord, expected: Option<&BTreeSet<String>>) -> Option<f64> {
        let types = self.type_set(r);
        let src = self.config.source();
        let any_of = |names: &[String]| names.iter().any(|n| self.ids(n).iter().any(|id| types.contains(id)));
        if any_of(&src.tiers.bad) {
            return None;
        }
        let inferred: BTreeSet<&str> = src
            .property_inference
            .iter()
            .filter(|rule| r.flagged_props.contains(&rule.if_property))
            .map(|rule| rule.then_type_name.as_str())
            .collect();
        if let Some(exp) = expected {
            let exp: Vec<String> = exp.iter().cloned().collect();
            if any_of(&exp) {
                return Some(1.0);
            }
            let near: Vec<String> =
                exp.iter().flat_map(|e| src.near_miss_map.get(e).cloned().unwrap_or_default()).collect();
            if any_of(&near) {
                return Some(0.8);
            }
        }
        if any_of(&src.tiers.good) || src.tiers.good.iter().any(|n| inferred.contains(n.as_str())) {
            return Some(0.6);
        }
        if any_of(&src.tiers.ok) || src.tiers.ok.iter().any(|n| inferred.contains(n.as_str())) {
            return Some(0.4);
        }
        Some(0.2)
    }
}

fn counts(s: &str) -> HashMap<String, u64> {
    let mut m = HashMap::new();
    for t in tokens(s) {
        *m.entry(t).or_insert(0) += 1;
    }
    m
}

pub fn cosine(a: &str, b: &str) -> f64 {
    let (ca, cb) = (counts(a), counts(b));
    if ca.is_empty() || cb.is_empty() {
        return 0.0;
    }
    let dot: u64 = ca.iter().map(|(t, x)| x * cb.get(t).copied().unwrap_or(0)).sum();
    if dot == 0 {
        return 0.0;
    }
    let na: u64 = ca.values().map(|x| x * x).sum();
    let nb: u64 = cb.values().map(|x| x * x).sum();
    (dot as f64 / ((na as f64) * (nb as f64)).sqrt()).min(1.0)
}

#[derive(Debug, Clone)]
pub struct OracleCandidate {
    pub record: Arc<ItemRecord>,
    pub base: f64,
    pub boosts: f64,
}

impl OracleCandidate {
    pub fn score(&self) -> f64 {
        self.base + self.boosts
    }
}

pub fn pick(cands: &[OracleCandidate], min: f64) -> Option<EntityId> {
    cands
        .iter()
        .max_by(|a, b| {
            a.score()
                .total_cmp(&b.score())
                .then(a.record.sitelinks_count.cmp(&b.record.sitelinks_count))
                .then(b.record.id.cmp(&a.record.id))
        })
        .filter(|c| c.score() >= min)
        .map(|c| c.record.id)
}

/// Scored survivors for a request, or `None` when the mention is empty.
pub fn oracle_candidates(o: &OracleKb, req: &LinkRequest) -> Option<Vec<OracleCandidate>> {
    let params = o.config.params();
    let w = o.config.weights();
    let hits = oracle_search_all(&o.kb, &req.mention, params.partial_match_gate)?;
    let mut survivors = Vec::new();
    for (hit, i) in hits.into_iter().take(params.k) {
        let r = &o.kb[i].record;
        if let Some(ts) = o.type_score(r, req.expected_types.as_ref()) {
            survivors.push((hit, Arc::clone(r), ts));
        }
    }
    let max_s = survivors.iter().map(|(_, r, _)| r.sitelinks_count).max().unwrap_or(0);
    let ctx = req.context.as_deref().filter(|c| !c.trim().is_empty());
    Some(
        survivors
            .into_iter()
            .map(|(hit, r, ts)| {
                let m = match hit.tier {
                    MatchTier::ExactLabel => 1.0,
                    MatchTier::ExactAlias => 0.8,
                    MatchTier::Partial => 0.4 * hit.overlap,
                };
                let prom = if max_s == 0 { 0.0 } else { r.sitelinks_count as f64 / max_s as f64 };
                let c = ctx.map_or(0.0, |ctx| {
                    let doc = format!("{} {} {}", r.label, r.description, r.aliases.join(" "));
                    cosine(ctx, &doc)
                });
                let base = w.w_type * ts + w.w_match * m + w.w_prom * prom + w.w_ctx * c;
                let boosts =
                    if req.mode == Mode::Header && r.id.is_property() { params.header_property_boost } else { 0.0 };
                OracleCandidate { record: r, base, boosts }
            })
            .collect(),
    )
}

pub fn oracle_link(o: &OracleKb, req: &LinkRequest) -> Option<Option<EntityId>> {
    oracle_candidates(o, req).map(|c| pick(&c, o.config.params().min_link_score))
}

// -------------------------------------------------------------- table oracle

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Literal,
    Entity(EntityId),
    Nil,
}

/// Two-pass joint inference over a horizontal table, written out directly:
/// link every cell, vote a type per column over the first `sample_size`
/// non-literal cells, boost, reselect. Keys are `(row, col)` with row -1
/// for headers.
pub fn oracle_table(o: &OracleKb, t: &Table) -> BTreeMap<(i64, usize), OracleOutcome> {
    let params = *o.config.params();
    let mut out = BTreeMap::new();
    for col in 0..t.header_row.len() {
        let others: Vec<&str> = t
            .header_row
            .iter()
            .enumerate()
            .filter(|(c, h)| *c != col && !h.trim().is_empty())
            .map(|(_, h)| h.as_str())
            .collect();
        let mut ctx_parts: Vec<&str> = Vec::new();
        if !t.caption.trim().is_empty() {
            ctx_parts.push(&t.caption);
        }
        ctx_parts.extend(others);
        let header_text = &t.header_row[col];
        let mut header = (detect_literal(header_text).is_none()).then(|| {
            let req = LinkRequest::header(header_text.clone()).with_context(ctx_parts.join(" "));
            oracle_candidates(o, &req)
        });

        let mut body: Vec<Option<Option<Vec<OracleCandidate>>>> = t
            .rows
            .iter()
            .map(|row| (detect_literal(&row[col]).is_none()).then(|| oracle_candidates(o, &LinkRequest::cell(row[col].clone()))))
            .collect();

        let sample: Vec<&[OracleCandidate]> = body
            .iter()
            .filter_map(|b| b.as_ref())
            .take(params.sample_size)
            .map(|b| b.as_deref().unwrap_or(&[]))
            .collect();
        let mut weight: BTreeMap<EntityId, f64> = BTreeMap::new();
        for set in &sample {
            for c in set.iter() {
                for ty in &c.record.direct_types {
                    *weight.entry(*ty).or_insert(0.0) += c.score();
                }
            }
        }
        let best = weight.iter().fold(None::<(EntityId, f64)>, |acc, (t, w)| match acc {
            Some((_, bw)) if *w <= bw => acc,
            _ => Some((*t, *w)),
        });
        let dominant = best.map(|(t, _)| t).filter(|t| {
            let support = sample.iter().filter(|set| set.iter().any(|c| o.type_set(&c.record).contains(t))).count();
            !sample.is_empty() && support as f64 / sample.len() as f64 >= params.support_threshold
        });

        if let Some(dt) = dominant {
            for cands in body.iter_mut().flatten().flatten() {
                for c in cands.iter_mut() {
                    if o.type_set(&c.record).contains(&dt) {
                        c.boosts += params.column_type_boost;
                    }
                }
            }
            let type_label = o.kb.iter().find(|p| p.record.id == dt).map(|p| p.record.label.clone());
            if let (Some(label), Some(Some(cands))) = (type_label, header.as_mut()) {
                let tt: BTreeSet<String> = tokens(&label).into_iter().collect();
                for c in cands.iter_mut() {
                    let own: BTreeSet<String> =
                        tokens(&format!("{} {}", c.record.label, c.record.description)).into_iter().collect();
                    if !tt.is_empty() && !own.is_disjoint(&tt) {
                        c.boosts += params.header_column_boost;
                    }
                }
            }
        }

        let outcome = |state: &Option<Option<Vec<OracleCandidate>>>| match state {
            None => OracleOutcome::Literal,
            Some(None) => OracleOutcome::Nil,
            Some(Some(c)) => pick(c, params.min_link_score).map_or(OracleOutcome::Nil, OracleOutcome::Entity),
        };
        out.insert((-1, col), outcome(&header));
        for (r, state) in body.iter().enumerate() {
            out.insert((r as i64, col), outcome(state));
        }
    }
    out
}

pub fn order_of(a: &OracleHit, b: &OracleHit) -> Ordering {
    tier_rank(b.tier).cmp(&tier_rank(a.tier)).then(b.overlap.total_cmp(&a.overlap))
}

pub const LITERALS: &[&str] = &["12.4%", "2020-03-11", "NCT04280705", "", "ACGTACGTAA", "42", "1,234", "-", "03/2021"];

/// Random table mixing KB labels, free phrases and literals.
pub fn random_table(rng: &mut ChaCha8Rng, records: &[ItemRecord]) -> Table {
    let cols = rng.gen_range(1..=4);
    let rows = rng.gen_range(1..=7);
    let cell = |rng: &mut ChaCha8Rng| match rng.gen_range(0..10) {
        0..=5 => records.choose(rng).map(|r| r.label.clone()).unwrap_or_default(),
        6 | 7 => LITERALS.choose(rng).unwrap().to_string(),
        _ => phrase(rng, WORDS.len()),
    };
    let header_row = (0..cols).map(|_| cell(rng)).collect();
    let rows = (0..rows).map(|_| (0..cols).map(|_| cell(rng)).collect()).collect();
    Table { table_id: "random".into(), caption: phrase(rng, WORDS.len()), header_row, rows }
}

pub mod examples;
pub mod pipeline;
