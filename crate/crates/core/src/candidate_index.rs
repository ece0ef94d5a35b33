//! Local label/alias index returning the initial ranked candidate list.
//!
//! Three lookups back a search: exact normalized label, exact normalized
//! alias, and token postings over label and alias tokens for partial
//! matches. Candidates are ranked by match tier, then token overlap, then
//! sitelinks (the prominence proxy), then ascending id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::jsonl;
use crate::kb_model::{EntityId, ItemRecord};
use crate::text::{self, normalize, NORMALIZATION_VERSION, STOPWORD_LIST_VERSION};

const MANIFEST_FILE: &str = "manifest.json";
const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index unavailable: {0}")]
    Unavailable(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("mention {0:?} is empty after normalization and stopword removal")]
pub struct EmptyMention(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchTier {
    Partial,
    ExactAlias,
    ExactLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCandidate {
    pub record: Arc<ItemRecord>,
    pub match_tier: MatchTier,
    pub token_overlap: f64,
}

/// Tier desc, overlap desc, sitelinks desc, id asc.
pub fn rank_order(a: &RawCandidate, b: &RawCandidate) -> Ordering {
    b.match_tier
        .cmp(&a.match_tier)
        .then_with(|| b.token_overlap.total_cmp(&a.token_overlap))
        .then_with(|| b.record.sitelinks_count.cmp(&a.record.sitelinks_count))
        .then_with(|| a.record.id.cmp(&b.record.id))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexManifest {
    pub format_version: String,
    pub normalization_version: String,
    pub stopword_list_version: String,
    pub build_id: String,
    pub record_count: usize,
    pub duplicate_ids: u64,
}

#[derive(Debug, Default)]
pub struct Index {
    records: Vec<Arc<ItemRecord>>,
    by_id: HashMap<EntityId, u32>,
    labels: HashMap<String, Vec<u32>>,
    aliases: HashMap<String, Vec<u32>>,
    postings: HashMap<String, Vec<u32>>,
    build_id: String,
    duplicate_ids: u64,
}

/// Builds an index. Duplicate ids keep the last record seen.
pub fn build_index(records: impl IntoIterator<Item = ItemRecord>) -> Index {
    let mut unique: BTreeMap<EntityId, ItemRecord> = BTreeMap::new();
    let mut duplicate_ids = 0u64;
    for r in records {
        if unique.insert(r.id, r).is_some() {
            duplicate_ids += 1;
        }
    }
    if duplicate_ids > 0 {
        tracing::warn!("{duplicate_ids} duplicate record ids; last record wins");
    }

    let mut hasher = Sha256::new();
    for part in [crate::FORMAT_VERSION, NORMALIZATION_VERSION, STOPWORD_LIST_VERSION] {
        hasher.update(part.as_bytes());
        hasher.update(b"\n");
    }

    let mut index = Index { duplicate_ids, ..Index::default() };
    for (pos, record) in unique.into_values().enumerate() {
        let pos = pos as u32;
        hasher.update(serde_json::to_vec(&record).expect("record serializes"));
        hasher.update(b"\n");

        index.labels.entry(normalize(&record.label)).or_default().push(pos);
        let mut toks: BTreeSet<String> = text::token_set(&record.label);
        for alias in &record.aliases {
            index.aliases.entry(normalize(alias)).or_default().push(pos);
            toks.extend(text::tokens(alias));
        }
        for t in toks {
            index.postings.entry(t).or_default().push(pos);
        }
        index.by_id.insert(record.id, pos);
        index.records.push(Arc::new(record));
    }
    index.build_id = hex::encode(hasher.finalize());
    index
}

impl Index {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Content hash over format versions and the deduplicated records.
    pub fn build_id(&self) -> &str {
        &self.build_id
    }

    pub fn duplicate_ids(&self) -> u64 {
        self.duplicate_ids
    }

    pub fn get(&self, id: EntityId) -> Option<&Arc<ItemRecord>> {
        self.by_id.get(&id).map(|&i| &self.records[i as usize])
    }

    /// Records in ascending id order.
    pub fn records(&self) -> &[Arc<ItemRecord>] {
        &self.records
    }

    /// Every record whose normalized label equals the normalized text.
    pub fn exact_label(&self, text: &str) -> Vec<&Arc<ItemRecord>> {
        self.labels
            .get(&normalize(text))
            .map(|ids| ids.iter().map(|&i| &self.records[i as usize]).collect())
            .unwrap_or_default()
    }

    /// Top-`k` candidates for `mention`. `partial_gate` is the fraction of
    /// mention tokens (rounded up) a partial match must cover.
    pub fn search(&self, mention: &str, k: usize, partial_gate: f64) -> Result<Vec<RawCandidate>, EmptyMention> {
        let norm = normalize(mention);
        let mention_tokens = text::token_set(&norm);
        if mention_tokens.is_empty() {
            return Err(EmptyMention(mention.to_owned()));
        }
        let wanted = mention_tokens.len();
        let gate = ((wanted as f64 * partial_gate).ceil() as usize).max(1);

        let mut tiers: HashMap<u32, MatchTier> = HashMap::new();
        if let Some(ids) = self.aliases.get(&norm) {
            tiers.extend(ids.iter().map(|&i| (i, MatchTier::ExactAlias)));
        }
        if let Some(ids) = self.labels.get(&norm) {
            tiers.extend(ids.iter().map(|&i| (i, MatchTier::ExactLabel)));
        }

        let mut covered: HashMap<u32, usize> = HashMap::new();
        for t in &mention_tokens {
            if let Some(ids) = self.postings.get(t) {
                for &i in ids {
                    *covered.entry(i).or_default() += 1;
                }
            }
        }

        let mut pool: Vec<RawCandidate> = tiers
            .iter()
            .map(|(&i, &tier)| RawCandidate {
                record: Arc::clone(&self.records[i as usize]),
                match_tier: tier,
                token_overlap: 1.0,
            })
            .collect();
        pool.extend(
            covered
                .into_iter()
                .filter(|(i, c)| *c >= gate && !tiers.contains_key(i))
                .map(|(i, c)| RawCandidate {
                    record: Arc::clone(&self.records[i as usize]),
                    match_tier: MatchTier::Partial,
                    token_overlap: c as f64 / wanted as f64,
                }),
        );

        if pool.len() > k {
            pool.select_nth_unstable_by(k - 1, rank_order);
            pool.truncate(k);
        }
        pool.sort_by(rank_order);
        Ok(pool)
    }

    pub fn manifest(&self) -> IndexManifest {
        IndexManifest {
            format_version: crate::FORMAT_VERSION.to_owned(),
            normalization_version: NORMALIZATION_VERSION.to_owned(),
            stopword_list_version: STOPWORD_LIST_VERSION.to_owned(),
            build_id: self.build_id.clone(),
            record_count: self.records.len(),
            duplicate_ids: self.duplicate_ids,
        }
    }

    /// Writes `manifest.json` and the deduplicated `records.jsonl` into `dir`.
    pub fn save(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(File::create(dir.join(RECORDS_FILE))?);
        for r in &self.records {
            jsonl::write_line(&mut out, r.as_ref())?;
        }
        out.flush()?;
        let mut manifest = serde_json::to_vec_pretty(&self.manifest()).map_err(io::Error::other)?;
        manifest.push(b'\n');
        fs::write(dir.join(MANIFEST_FILE), manifest)
    }

    /// Loads an index directory, refusing version mismatches and content
    /// that does not hash to the recorded build id.
    pub fn open(dir: &Path) -> Result<Index, IndexError> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let raw = fs::read(&manifest_path)
            .map_err(|e| IndexError::Unavailable(format!("{}: {e}", manifest_path.display())))?;
        let manifest: IndexManifest = serde_json::from_slice(&raw)
            .map_err(|e| IndexError::Unavailable(format!("{}: {e}", manifest_path.display())))?;
        let expected = (crate::FORMAT_VERSION, NORMALIZATION_VERSION, STOPWORD_LIST_VERSION);
        let found = (
            manifest.format_version.as_str(),
            manifest.normalization_version.as_str(),
            manifest.stopword_list_version.as_str(),
        );
        if found != expected {
            return Err(IndexError::Unavailable(format!("index built with {found:?}, this build expects {expected:?}")));
        }
        let records: Vec<ItemRecord> = jsonl::read_from(BufReader::new(File::open(dir.join(RECORDS_FILE))?))?;
        let mut index = build_index(records);
        if index.build_id != manifest.build_id {
            return Err(IndexError::Unavailable(format!(
                "records in {} do not match manifest build id",
                dir.display()
            )));
        }
        index.duplicate_ids = manifest.duplicate_ids;
        Ok(index)
    }
}
