//! Streaming extraction of [`ItemRecord`]s and [`TypeEdge`]s from
//! Wikidata-style entity JSON dumps.
//!
//! Accepted subset per document: `id`, `labels.en.value`,
//! `aliases.en[*].value`, `descriptions.en.value`, `claims` (property id ->
//! statements) and `sitelinks`. Everything else is ignored. Only item-valued
//! main snaks are read; qualifiers and references are never looked at.

use std::collections::BTreeSet;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::jsonl::write_line;
use crate::kb_model::{EntityId, EntityKind, ItemRecord, Relation, TypeEdge};

const INSTANCE_OF: EntityId = EntityId::property(31);
const SUBCLASS_OF: EntityId = EntityId::property(279);
const SUBPROPERTY_OF: EntityId = EntityId::property(1647);

/// Lines handed to the worker pool at a time.
const BATCH_LINES: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed entity document: {0}")]
pub struct ParseError(pub String);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct IngestStats {
    pub docs_seen: u64,
    pub records_emitted: u64,
    pub skipped_no_label: u64,
    pub edges_emitted: u64,
    pub parse_errors: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDoc {
    pub record: Option<ItemRecord>,
    pub edges: Vec<TypeEdge>,
}

fn err(msg: impl Into<String>) -> ParseError {
    ParseError(msg.into())
}

fn object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, ParseError> {
    v.as_object().ok_or_else(|| err(format!("{what} is not an object")))
}

/// `labels.en.value` style lookup; absent paths are `None`, wrong types are errors.
fn english_value<'a>(doc: &'a Map<String, Value>, field: &str) -> Result<Option<&'a str>, ParseError> {
    let Some(by_lang) = doc.get(field) else { return Ok(None) };
    let Some(en) = object(by_lang, field)?.get("en") else { return Ok(None) };
    let value = object(en, field)?
        .get("value")
        .ok_or_else(|| err(format!("{field}.en has no value")))?;
    value
        .as_str()
        .map(Some)
        .ok_or_else(|| err(format!("{field}.en.value is not a string")))
}

fn english_aliases(doc: &Map<String, Value>) -> Result<Vec<String>, ParseError> {
    let Some(by_lang) = doc.get("aliases") else { return Ok(Vec::new()) };
    let Some(en) = object(by_lang, "aliases")?.get("en") else { return Ok(Vec::new()) };
    let list = en.as_array().ok_or_else(|| err("aliases.en is not an array"))?;
    list.iter()
        .map(|a| {
            object(a, "alias")?
                .get("value")
                .and_then(Value::as_str)
                .map(str::to_owned)
                .ok_or_else(|| err("alias without string value"))
        })
        .collect()
}

/// A statement that counts: not deprecated and with a `value` main snak.
fn live_value_snak(stmt: &Value) -> Result<Option<&Map<String, Value>>, ParseError> {
    let stmt = object(stmt, "statement")?;
    if stmt.get("rank").and_then(Value::as_str) == Some("deprecated") {
        return Ok(None);
    }
    let snak = object(stmt.get("mainsnak").ok_or_else(|| err("statement without mainsnak"))?, "mainsnak")?;
    if snak.get("snaktype").and_then(Value::as_str).unwrap_or("value") != "value" {
        return Ok(None);
    }
    Ok(Some(snak))
}

/// Target of an entity-valued snak, if the snak is entity-valued at all.
fn entity_target(snak: &Map<String, Value>) -> Result<Option<EntityId>, ParseError> {
    let Some(dv) = snak.get("datavalue") else { return Ok(None) };
    let dv = object(dv, "datavalue")?;
    if dv.get("type").and_then(Value::as_str) != Some("wikibase-entityid") {
        return Ok(None);
    }
    let value = object(dv.get("value").ok_or_else(|| err("datavalue without value"))?, "datavalue.value")?;
    if let Some(id) = value.get("id").and_then(Value::as_str) {
        // lexemes, forms and senses are entity-valued but not Q/P ids
        return Ok(id.parse().ok());
    }
    let kind = match value.get("entity-type").and_then(Value::as_str) {
        Some("item") => EntityKind::Item,
        Some("property") => EntityKind::Property,
        _ => return Ok(None),
    };
    let num = value
        .get("numeric-id")
        .and_then(Value::as_u64)
        .ok_or_else(|| err("entity value without numeric-id"))?;
    Ok(Some(EntityId::new(kind, num)))
}

/// Parses one entity document.
pub fn parse_entity_doc(doc: &Value, watchlist: &BTreeSet<EntityId>) -> Result<ParsedDoc, ParseError> {
    let doc = object(doc, "document")?;
    let id: EntityId = doc
        .get("id")
        .and_then(Value::as_str)
        .ok_or_else(|| err("missing id"))?
        .parse()
        .map_err(|e| err(format!("{e}")))?;

    let label = english_value(doc, "labels")?;
    let description = english_value(doc, "descriptions")?.unwrap_or("");
    let aliases = english_aliases(doc)?;

    let mut direct_types = Vec::new();
    let mut edges = Vec::new();
    let mut flagged = BTreeSet::new();

    if let Some(claims) = doc.get("claims") {
        for (prop, statements) in object(claims, "claims")? {
            let prop: EntityId = prop.parse().map_err(|e| err(format!("claim key: {e}")))?;
            if !prop.is_property() {
                return Err(err(format!("claim key {prop} is not a property")));
            }
            let statements = statements
                .as_array()
                .ok_or_else(|| err(format!("claims.{prop} is not an array")))?;
            for stmt in statements {
                let Some(snak) = live_value_snak(stmt)? else { continue };
                if watchlist.contains(&prop) {
                    flagged.insert(prop);
                }
                let Some(target) = entity_target(snak)? else { continue };
                match prop {
                    INSTANCE_OF if target.is_item() => direct_types.push(target),
                    SUBCLASS_OF if id.is_item() && target.is_item() => edges.push(TypeEdge {
                        child: id,
                        parent: target,
                        relation: Relation::SubclassOf,
                    }),
                    SUBPROPERTY_OF if id.is_property() && target.is_property() => edges.push(TypeEdge {
                        child: id,
                        parent: target,
                        relation: Relation::SubpropertyOf,
                    }),
                    _ => {}
                }
            }
        }
    }

    let sitelinks_count = match doc.get("sitelinks") {
        None | Some(Value::Null) => 0,
        Some(v) => object(v, "sitelinks")?.len() as u64,
    };

    let record = label.and_then(|label| {
        ItemRecord::new(id, label, aliases, description, direct_types, sitelinks_count, flagged)
    });
    Ok(ParsedDoc { record, edges })
}

/// Strips dump-array decoration (`[`, `]`, trailing commas) from one line.
/// Returns `None` for lines that carry no document.
pub fn strip_dump_line(line: &str) -> Option<&str> {
    let mut s = line.trim();
    s = s.strip_prefix('[').unwrap_or(s).trim_start();
    s = s.strip_suffix(']').unwrap_or(s).trim_end();
    s = s.strip_suffix(',').unwrap_or(s).trim_end();
    (!s.is_empty()).then_some(s)
}

pub fn parse_entity_line(line: &str, watchlist: &BTreeSet<EntityId>) -> Result<ParsedDoc, ParseError> {
    let value: Value = serde_json::from_str(line).map_err(|e| err(format!("json: {e}")))?;
    parse_entity_doc(&value, watchlist)
}

/// Streams a dump into record and edge line files.
///
/// Documents are parsed in batches on `jobs` worker threads; output order is
/// always input order, so any `jobs` value yields identical files.
pub fn ingest_dump<R: BufRead, W1: Write, W2: Write>(
    input: R,
    watchlist: &BTreeSet<EntityId>,
    records_out: &mut W1,
    edges_out: &mut W2,
    jobs: usize,
) -> io::Result<IngestStats> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(io::Error::other)?;
    let mut stats = IngestStats::default();
    let mut batch: Vec<String> = Vec::with_capacity(BATCH_LINES);
    let mut lines = input.lines();
    loop {
        batch.clear();
        for line in lines.by_ref() {
            let line = line?;
            if strip_dump_line(&line).is_some() {
                batch.push(line);
                if batch.len() == BATCH_LINES {
                    break;
                }
            }
        }
        if batch.is_empty() {
            break;
        }
        let parsed: Vec<Result<ParsedDoc, ParseError>> = pool.install(|| {
            batch
                .par_iter()
                .map(|l| parse_entity_line(strip_dump_line(l).unwrap_or_default(), watchlist))
                .collect()
        });
        for (n, result) in parsed.into_iter().enumerate() {
            stats.docs_seen += 1;
            match result {
                Ok(doc) => {
                    match &doc.record {
                        Some(r) => {
                            write_line(records_out, r)?;
                            stats.records_emitted += 1;
                        }
                        None => stats.skipped_no_label += 1,
                    }
                    for e in &doc.edges {
                        write_line(edges_out, e)?;
                    }
                    stats.edges_emitted += doc.edges.len() as u64;
                }
                Err(e) => {
                    stats.parse_errors += 1;
                    tracing::debug!(batch_offset = n, "{e}");
                }
            }
        }
    }
    records_out.flush()?;
    edges_out.flush()?;
    Ok(stats)
}
