//! Seeded synthetic knowledge base: a dump in the Wikidata JSON layout, the
//! records and edges ingestion should produce from it, a domain config, and
//! planted tables with gold annotations.
//!
//! Every planted table has four columns:
//!
//! * A: entities of type `T` whose last two rows share their label with a
//!   more prominent entity of a sibling type `U`. Only the column vote
//!   separates them.
//! * B: each label is shared with a more prominent entity of a BAD type.
//! * C: each label is shared with a less prominent entity of a type in the
//!   same tier.
//! * D: literals of one kind, gold null.
//!
//! Headers of A-C are the labels of their column types.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::GoldRecord;
use crate::kb_model::{DomainConfig, EntityId, InferenceRule, ItemRecord, Relation, Tiers, TypeEdge};
use crate::table_linker::Table;
use crate::text;

const CONSONANTS: &[u8] = b"bdfklmrsvz";
const VOWELS: &[u8] = b"aeiou";
const ROWS: usize = 6;
const AMBIGUOUS_FROM: usize = 4;

pub const MESH_PROP: EntityId = EntityId::property(486);
pub const DOID_PROP: EntityId = EntityId::property(699);

/// How many root types go into each tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TierProfile {
    pub bad_roots: usize,
    pub good_roots: usize,
    pub ok_roots: usize,
}

impl Default for TierProfile {
    fn default() -> Self {
        TierProfile { bad_roots: 2, good_roots: 2, ok_roots: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SynthParams {
    pub seed: u64,
    pub n_items: usize,
    pub n_types: usize,
    pub n_tables: usize,
    pub profile: TierProfile,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { seed: 7, n_items: 2000, n_types: 60, n_tables: 10, profile: TierProfile::default() }
    }
}

/// Facts about the generated KB that tests check ingestion and linking against.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GroundTruth {
    pub documents: usize,
    pub records: usize,
    pub edges: usize,
    /// Types written without an English label; they yield edges but no record.
    pub unlabeled_types: Vec<EntityId>,
    /// Records carrying each watch-listed property.
    pub flagged: BTreeMap<EntityId, usize>,
    /// Gold cells with a non-null expected entity.
    pub gold_cells: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticKb {
    pub params: SynthParams,
    pub dump_lines: Vec<String>,
    /// Expected ingestion output, in dump order.
    pub records: Vec<ItemRecord>,
    pub edges: Vec<TypeEdge>,
    pub config: DomainConfig,
    pub tables: Vec<Table>,
    pub gold: Vec<GoldRecord>,
    pub watchlist: BTreeSet<EntityId>,
    pub truth: GroundTruth,
}

impl SyntheticKb {
    /// Dump in the array-per-line layout of real dumps.
    pub fn write_dump<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "[")?;
        let n = self.dump_lines.len();
        for (i, line) in self.dump_lines.iter().enumerate() {
            if i + 1 < n {
                writeln!(out, "{line},")?;
            } else {
                writeln!(out, "{line}")?;
            }
        }
        writeln!(out, "]")
    }

    /// Writes dump.json, records.jsonl, edges.jsonl, config.json, gold.jsonl,
    /// truth.json and tables/<id>.json under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir.join("tables"))?;
        let mut dump = io::BufWriter::new(std::fs::File::create(dir.join("dump.json"))?);
        self.write_dump(&mut dump)?;
        dump.flush()?;
        crate::jsonl::write_file(&dir.join("records.jsonl"), &self.records)?;
        crate::jsonl::write_file(&dir.join("edges.jsonl"), &self.edges)?;
        crate::jsonl::write_file(&dir.join("gold.jsonl"), &self.gold)?;
        std::fs::write(dir.join("config.json"), self.config.to_json())?;
        let truth = serde_json::to_string_pretty(&self.truth).map_err(io::Error::other)?;
        std::fs::write(dir.join("truth.json"), truth)?;
        let watch: Vec<String> = self.watchlist.iter().map(EntityId::to_string).collect();
        std::fs::write(dir.join("watchlist.txt"), watch.join("\n") + "\n")?;
        for t in &self.tables {
            let body = serde_json::to_string_pretty(t).map_err(io::Error::other)?;
            std::fs::write(dir.join("tables").join(format!("{}.json", t.table_id)), body)?;
        }
        Ok(())
    }
}

/// A word built from `n` digits in base 50 (one consonant-vowel syllable each).
fn syllables(mut n: usize, min_len: usize) -> String {
    let mut out = String::new();
    let mut count = 0;
    while n > 0 || count < min_len {
        let d = n % 50;
        out.push(CONSONANTS[d / 5] as char);
        out.push(VOWELS[d % 5] as char);
        n /= 50;
        count += 1;
    }
    out
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    loop {
        let len = rng.gen_range(2..=3);
        let w = syllables(rng.gen_range(0..50usize.pow(len)), len as usize);
        if !text::is_stopword(&w) {
            return w;
        }
    }
}

/// Planted words start with `p`, which the random vocabulary never uses,
/// so they are unique across the whole KB.
fn planted_word(n: usize) -> String {
    format!("p{}", syllables(n, 3))
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    c.next().map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

fn claim(prop: EntityId, target: EntityId, rank: &str) -> Value {
    let kind = if target.is_item() { "item" } else { "property" };
    json!({
        "mainsnak": {
            "snaktype": "value",
            "property": prop.to_string(),
            "datavalue": {
                "value": {"entity-type": kind, "numeric-id": target.num(), "id": target.to_string()},
                "type": "wikibase-entityid"
            }
        },
        "type": "statement",
        "rank": rank
    })
}

fn string_claim(prop: EntityId, value: &str) -> Value {
    json!({
        "mainsnak": {
            "snaktype": "value",
            "property": prop.to_string(),
            "datavalue": {"value": value, "type": "string"}
        },
        "type": "statement",
        "rank": "normal"
    })
}

fn novalue_claim(prop: EntityId) -> Value {
    json!({"mainsnak": {"snaktype": "novalue", "property": prop.to_string()}, "type": "statement", "rank": "normal"})
}

/// Raw entity contents, before they are turned into a dump line and a record.
#[derive(Default)]
struct Doc {
    id: Option<EntityId>,
    label: Option<String>,
    aliases: Vec<String>,
    description: String,
    instance_of: Vec<EntityId>,
    deprecated_instance_of: Vec<EntityId>,
    parents: Vec<EntityId>,
    watch_values: Vec<(EntityId, String)>,
    novalue_watch: Vec<EntityId>,
    sitelinks: u64,
}

/// One generated document with the output ingestion should produce for it.
struct Entry {
    line: String,
    record: Option<ItemRecord>,
    edges: Vec<TypeEdge>,
}

#[derive(Default)]
struct Builder {
    entries: Vec<Entry>,
    truth: GroundTruth,
}

impl Builder {
    fn push(&mut self, d: Doc) {
        let id = d.id.expect("doc id");
        let mut claims: BTreeMap<String, Vec<Value>> = BTreeMap::new();
        let p31 = EntityId::property(31);
        for t in &d.instance_of {
            claims.entry(p31.to_string()).or_default().push(claim(p31, *t, "normal"));
        }
        for t in &d.deprecated_instance_of {
            claims.entry(p31.to_string()).or_default().push(claim(p31, *t, "deprecated"));
        }
        let (rel_prop, relation) = if id.is_item() {
            (EntityId::property(279), Relation::SubclassOf)
        } else {
            (EntityId::property(1647), Relation::SubpropertyOf)
        };
        let mut edges = Vec::new();
        for p in &d.parents {
            claims.entry(rel_prop.to_string()).or_default().push(claim(rel_prop, *p, "preferred"));
            edges.push(TypeEdge { child: id, parent: *p, relation });
        }
        let mut flagged = BTreeSet::new();
        for (prop, v) in &d.watch_values {
            claims.entry(prop.to_string()).or_default().push(string_claim(*prop, v));
            flagged.insert(*prop);
        }
        for prop in &d.novalue_watch {
            claims.entry(prop.to_string()).or_default().push(novalue_claim(*prop));
        }

        let mut doc = serde_json::Map::new();
        doc.insert("type".into(), json!(if id.is_item() { "item" } else { "property" }));
        doc.insert("id".into(), json!(id.to_string()));
        let mut labels = serde_json::Map::new();
        if let Some(label) = &d.label {
            labels.insert("en".into(), json!({"language": "en", "value": label}));
            labels.insert("fr".into(), json!({"language": "fr", "value": format!("{label} (fr)")}));
        } else {
            labels.insert("de".into(), json!({"language": "de", "value": format!("typ {id}")}));
        }
        doc.insert("labels".into(), Value::Object(labels));
        if !d.description.is_empty() {
            doc.insert("descriptions".into(), json!({"en": {"language": "en", "value": d.description}}));
        }
        if !d.aliases.is_empty() {
            let list: Vec<Value> = d.aliases.iter().map(|a| json!({"language": "en", "value": a})).collect();
            doc.insert("aliases".into(), json!({ "en": list }));
        }
        doc.insert("claims".into(), serde_json::to_value(&claims).expect("claims serialize"));
        if id.is_item() {
            let links: serde_json::Map<String, Value> =
                (0..d.sitelinks).map(|i| (format!("x{i}wiki"), json!({"site": format!("x{i}wiki")}))).collect();
            doc.insert("sitelinks".into(), Value::Object(links));
        }
        self.truth.documents += 1;

        let record = match d.label {
            Some(label) => {
                let sitelinks = if id.is_item() { d.sitelinks } else { 0 };
                for p in &flagged {
                    *self.truth.flagged.entry(*p).or_default() += 1;
                }
                Some(
                    ItemRecord::new(id, label, d.aliases, d.description, d.instance_of, sitelinks, flagged)
                        .expect("generated labels are non-empty"),
                )
            }
            None => {
                self.truth.unlabeled_types.push(id);
                None
            }
        };
        self.entries.push(Entry { line: Value::Object(doc).to_string(), record, edges });
    }
}

fn sitelinks(rng: &mut ChaCha8Rng) -> u64 {
    (rng.gen::<f64>().powi(3) * 60.0) as u64
}

pub fn generate_synthetic_kb(params: &SynthParams) -> SyntheticKb {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let profile = params.profile;
    let n_roots = profile.bad_roots + profile.good_roots + profile.ok_roots;
    let n_types = params.n_types.max(n_roots).max(1);
    let watchlist: BTreeSet<EntityId> = [MESH_PROP, DOID_PROP].into();
    let mut b = Builder::default();

    // Types Q1..Qn: the first n_roots are tier roots, the rest hang below
    // lower-numbered types with the odd back edge to make cycles.
    let ty = |i: usize| EntityId::item(i as u64);
    let bad_roots: Vec<EntityId> = (1..=profile.bad_roots).map(ty).collect();
    let good_roots: Vec<EntityId> = (profile.bad_roots + 1..=profile.bad_roots + profile.good_roots).map(ty).collect();
    let ok_roots: Vec<EntityId> = (profile.bad_roots + profile.good_roots + 1..=n_roots).map(ty).collect();
    for i in 1..=n_types {
        let mut parents = Vec::new();
        if i > n_roots.max(1) {
            parents.push(ty(rng.gen_range(1..i)));
            if rng.gen_bool(0.3) {
                parents.push(ty(rng.gen_range(1..i)));
            }
            if i + 1 < n_types && i > n_roots + 1 && rng.gen_bool(0.05) {
                parents.push(ty(rng.gen_range(i + 1..=n_types)));
            }
        }
        let label = (i % 10 != 7).then(|| format!("{} type", random_word(&mut rng)));
        b.push(Doc {
            id: Some(ty(i)),
            label,
            description: format!("synthetic type {i}"),
            parents,
            ..Doc::default()
        });
    }

    // Properties, including the watch-listed ones.
    let n_props = (n_types / 4).max(1);
    for j in 0..n_props {
        let id = EntityId::property(5000 + j as u64);
        let parents = if j > 0 && rng.gen_bool(0.4) {
            vec![EntityId::property(5000 + rng.gen_range(0..j) as u64)]
        } else {
            Vec::new()
        };
        b.push(Doc {
            id: Some(id),
            label: Some(format!("{} property", random_word(&mut rng))),
            description: format!("synthetic property {j}"),
            parents,
            ..Doc::default()
        });
    }
    for (prop, label) in [(MESH_PROP, "descriptor identifier"), (DOID_PROP, "ontology identifier")] {
        b.push(Doc { id: Some(prop), label: Some(label.into()), ..Doc::default() });
    }

    // Background items with deliberately colliding labels.
    for i in 0..params.n_items {
        let words = if rng.gen_bool(0.7) { 1 } else { 2 };
        let label: Vec<String> = (0..words).map(|_| random_word(&mut rng)).collect();
        let label = label.join(" ");
        let mut aliases = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            aliases.push(random_word(&mut rng));
        }
        if rng.gen_bool(0.05) {
            aliases.push(label.to_uppercase());
        }
        let mut instance_of = vec![ty(rng.gen_range(1..=n_types))];
        if rng.gen_bool(0.2) {
            instance_of.push(ty(rng.gen_range(1..=n_types)));
        }
        let deprecated_instance_of =
            if rng.gen_bool(0.05) { vec![bad_roots.first().copied().unwrap_or(ty(1))] } else { Vec::new() };
        let mut watch_values = Vec::new();
        let mut novalue_watch = Vec::new();
        if rng.gen_bool(0.05) {
            watch_values.push((MESH_PROP, format!("D{:06}", i)));
        }
        if rng.gen_bool(0.03) {
            watch_values.push((DOID_PROP, format!("DOID:{i}")));
        }
        if rng.gen_bool(0.02) {
            novalue_watch.push(MESH_PROP);
        }
        b.push(Doc {
            id: Some(EntityId::item(100_000 + i as u64)),
            label: Some(label),
            aliases,
            description: format!("synthetic item {i}"),
            instance_of,
            deprecated_instance_of,
            watch_values,
            novalue_watch,
            sitelinks: sitelinks(&mut rng),
            ..Doc::default()
        });
    }

    // Planted tables.
    let good_root = good_roots.first().copied().unwrap_or(ty(1));
    let ok_root = ok_roots.first().copied().unwrap_or(good_root);
    let bad_root = bad_roots.first().copied();
    let mut word_no = 0;
    let mut next_word = || {
        word_no += 1;
        planted_word(word_no)
    };
    let mut type_no = 0u64;
    let mut item_no = 0u64;
    let mut tables = Vec::new();
    let mut gold = Vec::new();

    for t in 0..params.n_tables {
        let table_id = format!("synth-{t:04}");
        let mut new_type = |b: &mut Builder, parent: EntityId, label: String| {
            type_no += 1;
            let id = EntityId::item(10_000_000 + type_no);
            b.push(Doc { id: Some(id), label: Some(label), parents: vec![parent], ..Doc::default() });
            id
        };
        let (ta_label, tb_label, tc_label) = (next_word(), next_word(), next_word());
        let type_a = new_type(&mut b, good_root, ta_label.clone());
        let type_u = new_type(&mut b, good_root, next_word());
        let type_b = new_type(&mut b, ok_root, tb_label.clone());
        let type_c = new_type(&mut b, good_root, tc_label.clone());
        let type_v = new_type(&mut b, good_root, next_word());

        let mut columns: [Vec<String>; 4] = Default::default();
        let mut gold_ids: [Vec<EntityId>; 3] = Default::default();
        let mut item = |b: &mut Builder, label: &str, ty: EntityId, sitelinks: u64| {
            item_no += 1;
            let id = EntityId::item(20_000_000 + item_no);
            b.push(Doc {
                id: Some(id),
                label: Some(label.to_owned()),
                description: format!("planted entity {item_no}"),
                instance_of: vec![ty],
                sitelinks,
                ..Doc::default()
            });
            id
        };
        for row in 0..ROWS {
            let a = capitalize(&next_word());
            gold_ids[0].push(item(&mut b, &a, type_a, 5));
            if row >= AMBIGUOUS_FROM {
                item(&mut b, &a, type_u, 10);
            }
            columns[0].push(a);

            let bl = capitalize(&next_word());
            gold_ids[1].push(item(&mut b, &bl, type_b, 5));
            if let Some(bad) = bad_root {
                item(&mut b, &bl, bad, 50);
            }
            columns[1].push(bl);

            let c = capitalize(&next_word());
            gold_ids[2].push(item(&mut b, &c, type_c, 20));
            item(&mut b, &c, type_v, 5);
            columns[2].push(c);

            columns[3].push(match t % 4 {
                0 => format!("{}.{}%", rng.gen_range(0..100), rng.gen_range(0..10)),
                1 => format!("2020-{:02}-{:02}", rng.gen_range(1..=12), rng.gen_range(1..=28)),
                2 => format!("NCT{:08}", rng.gen_range(0..100_000_000u64)),
                _ => format!("{}", rng.gen_range(0..10_000)),
            });
        }

        let header_row = vec![ta_label, tb_label, tc_label, "value".to_owned()];
        let rows: Vec<Vec<String>> = (0..ROWS).map(|r| columns.iter().map(|c| c[r].clone()).collect()).collect();
        for (col, ty) in [type_a, type_b, type_c].into_iter().enumerate() {
            gold.push(GoldRecord { table_id: table_id.clone(), row: -1, col, expected: Some(ty) });
            for (r, id) in gold_ids[col].iter().enumerate() {
                gold.push(GoldRecord { table_id: table_id.clone(), row: r as i64, col, expected: Some(*id) });
            }
        }
        gold.push(GoldRecord { table_id: table_id.clone(), row: -1, col: 3, expected: None });
        for r in 0..ROWS {
            gold.push(GoldRecord { table_id: table_id.clone(), row: r as i64, col: 3, expected: None });
        }
        tables.push(Table { table_id, caption: format!("Synthetic table {t}"), header_row, rows });
    }

    // Shuffle the non-type documents so records do not arrive sorted by id.
    let head = b.entries.len().min(n_types);
    b.entries[head..].shuffle(&mut rng);
    let mut dump_lines = Vec::with_capacity(b.entries.len());
    let mut records = Vec::new();
    let mut edges = Vec::new();
    for e in b.entries {
        dump_lines.push(e.line);
        records.extend(e.record);
        edges.extend(e.edges);
    }

    let mut config = DomainConfig::default();
    let mut tiers = Tiers::default();
    for (prefix, roots, list) in [
        ("bad", &bad_roots, &mut tiers.bad),
        ("good", &good_roots, &mut tiers.good),
        ("ok", &ok_roots, &mut tiers.ok),
    ] {
        for (j, r) in roots.iter().enumerate() {
            let name = format!("{prefix}-{j}");
            config.type_dictionary.insert(name.clone(), vec![*r]);
            list.push(name);
        }
    }
    config.type_dictionary.insert("mesh item".into(), Vec::new());
    config.type_dictionary.insert("disease-ontology".into(), Vec::new());
    tiers.good.push("mesh item".into());
    tiers.ok.push("disease-ontology".into());
    if !good_roots.is_empty() && !ok_roots.is_empty() {
        config.near_miss_map.insert("good-0".into(), vec!["ok-0".into()]);
        tiers.near_miss.push("ok-0".into());
    }
    config.tiers = tiers;
    config.property_inference = vec![
        InferenceRule { if_property: MESH_PROP, then_type_name: "mesh item".into() },
        InferenceRule { if_property: DOID_PROP, then_type_name: "disease-ontology".into() },
    ];

    let mut truth = b.truth;
    truth.records = records.len();
    truth.edges = edges.len();
    truth.gold_cells = gold.iter().filter(|g| g.expected.is_some()).count();

    SyntheticKb { params: *params, dump_lines, records, edges, config, tables, gold, watchlist, truth }
}
