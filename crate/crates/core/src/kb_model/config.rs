//! Domain configuration: the five type tiers, the name dictionary that maps
//! type names onto entity ids, near-miss mappings, property-based type
//! inference and the scoring weights.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::id::EntityId;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("type name {name:?} referenced in {place} is not in type_dictionary")]
    UnresolvedTypeName { place: String, name: String },
    #[error("{id} is listed under the bad tier and under the {tier} tier")]
    TierConflict { id: EntityId, tier: &'static str },
    #[error("bad weights: {0}")]
    BadWeights(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tiers {
    pub target: Vec<String>,
    pub near_miss: Vec<String>,
    pub good: Vec<String>,
    pub ok: Vec<String>,
    pub bad: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceRule {
    pub if_property: EntityId,
    pub then_type_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub w_type: f64,
    pub w_match: f64,
    pub w_prom: f64,
    pub w_ctx: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { w_type: 0.45, w_match: 0.25, w_prom: 0.15, w_ctx: 0.15 }
    }
}

impl Weights {
    fn sum(&self) -> f64 {
        self.w_type + self.w_match + self.w_prom + self.w_ctx
    }

    fn scaled(&self, by: f64) -> Weights {
        Weights {
            w_type: self.w_type / by,
            w_match: self.w_match / by,
            w_prom: self.w_prom / by,
            w_ctx: self.w_ctx / by,
        }
    }

    /// Divides by the sum until it is exactly 1.0 or stops changing, which
    /// makes normalization idempotent.
    fn normalized(mut self) -> Weights {
        for _ in 0..16 {
            let s = self.sum();
            if s == 1.0 {
                break;
            }
            let next = self.scaled(s);
            if next == self {
                break;
            }
            self = next;
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub header_property_boost: f64,
    pub column_type_boost: f64,
    pub header_column_boost: f64,
    pub k: usize,
    pub sample_size: usize,
    pub support_threshold: f64,
    pub min_link_score: f64,
    /// Fraction of mention tokens a partial match must cover (rounded up).
    pub partial_match_gate: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            header_property_boost: 0.10,
            column_type_boost: 0.20,
            header_column_boost: 0.10,
            k: 20,
            sample_size: 5,
            support_threshold: 0.5,
            min_link_score: 0.25,
            partial_match_gate: 0.5,
        }
    }
}

/// The on-disk config document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub type_dictionary: BTreeMap<String, Vec<EntityId>>,
    #[serde(default)]
    pub tiers: Tiers,
    #[serde(default)]
    pub near_miss_map: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub property_inference: Vec<InferenceRule>,
    #[serde(default)]
    pub weights: Weights,
    #[serde(default)]
    pub params: Params,
}

impl DomainConfig {
    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// A config whose names are all resolved to id sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig {
    source: DomainConfig,
    hash: String,
    target_ids: BTreeSet<EntityId>,
    good_ids: BTreeSet<EntityId>,
    ok_ids: BTreeSet<EntityId>,
    bad_ids: BTreeSet<EntityId>,
    good_names: BTreeSet<String>,
    ok_names: BTreeSet<String>,
    near_miss_ids: BTreeMap<String, BTreeSet<EntityId>>,
}

pub fn validate_config(config: DomainConfig) -> Result<ValidatedConfig, ConfigError> {
    let mut config = config;
    let dict = &config.type_dictionary;

    let resolve = |place: &str, names: &[String]| -> Result<BTreeSet<EntityId>, ConfigError> {
        let mut ids = BTreeSet::new();
        for name in names {
            let found = dict.get(name).ok_or_else(|| ConfigError::UnresolvedTypeName {
                place: place.to_owned(),
                name: name.clone(),
            })?;
            ids.extend(found.iter().copied());
        }
        Ok(ids)
    };

    let target_ids = resolve("tiers.target", &config.tiers.target)?;
    resolve("tiers.near_miss", &config.tiers.near_miss)?;
    let good_ids = resolve("tiers.good", &config.tiers.good)?;
    let ok_ids = resolve("tiers.ok", &config.tiers.ok)?;
    let bad_ids = resolve("tiers.bad", &config.tiers.bad)?;

    let mut near_miss_ids = BTreeMap::new();
    for (expected, near) in &config.near_miss_map {
        resolve("near_miss_map", std::slice::from_ref(expected))?;
        near_miss_ids.insert(expected.clone(), resolve(&format!("near_miss_map.{expected}"), near)?);
    }
    for rule in &config.property_inference {
        resolve("property_inference", std::slice::from_ref(&rule.then_type_name))?;
        if !rule.if_property.is_property() {
            return Err(ConfigError::InvalidParam(format!(
                "property_inference.if_property must be a property id, got {}",
                rule.if_property
            )));
        }
    }

    for (tier, ids) in [("target", &target_ids), ("good", &good_ids), ("ok", &ok_ids)] {
        if let Some(id) = ids.intersection(&bad_ids).next() {
            return Err(ConfigError::TierConflict { id: *id, tier });
        }
    }

    let w = config.weights;
    let parts = [w.w_type, w.w_match, w.w_prom, w.w_ctx];
    if parts.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(ConfigError::BadWeights(format!("negative or non-finite weight in {parts:?}")));
    }
    let sum = w.sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(ConfigError::BadWeights(format!("weights sum to {sum}, expected 1.0")));
    }
    config.weights = w.normalized();

    check_params(&config.params)?;

    let good_names = config.tiers.good.iter().cloned().collect();
    let ok_names = config.tiers.ok.iter().cloned().collect();
    let hash = hex::encode(Sha256::digest(serde_json::to_vec(&config).expect("config serializes")));
    Ok(ValidatedConfig {
        source: config,
        hash,
        target_ids,
        good_ids,
        ok_ids,
        bad_ids,
        good_names,
        ok_names,
        near_miss_ids,
    })
}

fn check_params(p: &Params) -> Result<(), ConfigError> {
    let nonneg = [
        ("header_property_boost", p.header_property_boost),
        ("column_type_boost", p.column_type_boost),
        ("header_column_boost", p.header_column_boost),
    ];
    for (name, v) in nonneg {
        if !v.is_finite() || v < 0.0 {
            return Err(ConfigError::InvalidParam(format!("{name} must be >= 0, got {v}")));
        }
    }
    if p.k == 0 {
        return Err(ConfigError::InvalidParam("k must be positive".into()));
    }
    if p.sample_size == 0 {
        return Err(ConfigError::InvalidParam("sample_size must be positive".into()));
    }
    if !(p.support_threshold > 0.0 && p.support_threshold <= 1.0) {
        return Err(ConfigError::InvalidParam(format!(
            "support_threshold must be in (0, 1], got {}",
            p.support_threshold
        )));
    }
    if !p.min_link_score.is_finite() {
        return Err(ConfigError::InvalidParam("min_link_score must be finite".into()));
    }
    if !(p.partial_match_gate > 0.0 && p.partial_match_gate <= 1.0) {
        return Err(ConfigError::InvalidParam(format!(
            "partial_match_gate must be in (0, 1], got {}",
            p.partial_match_gate
        )));
    }
    Ok(())
}

impl ValidatedConfig {
    pub fn source(&self) -> &DomainConfig {
        &self.source
    }

    /// SHA-256 over the canonical serialized config (normalized weights).
    pub fn content_hash(&self) -> &str {
        &self.hash
    }

    pub fn weights(&self) -> &Weights {
        &self.source.weights
    }

    pub fn params(&self) -> &Params {
        &self.source.params
    }

    pub fn rules(&self) -> &[InferenceRule] {
        &self.source.property_inference
    }

    /// Ids mapped from a type name; empty for unknown names.
    pub fn ids_for(&self, name: &str) -> &[EntityId] {
        self.source.type_dictionary.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn knows_type_name(&self, name: &str) -> bool {
        self.source.type_dictionary.contains_key(name)
    }

    pub fn target_ids(&self) -> &BTreeSet<EntityId> {
        &self.target_ids
    }

    pub fn good_ids(&self) -> &BTreeSet<EntityId> {
        &self.good_ids
    }

    pub fn ok_ids(&self) -> &BTreeSet<EntityId> {
        &self.ok_ids
    }

    pub fn bad_ids(&self) -> &BTreeSet<EntityId> {
        &self.bad_ids
    }

    pub fn good_names(&self) -> &BTreeSet<String> {
        &self.good_names
    }

    pub fn ok_names(&self) -> &BTreeSet<String> {
        &self.ok_names
    }

    /// Near-miss ids for one expected type name.
    pub fn near_miss_ids(&self, expected: &str) -> Option<&BTreeSet<EntityId>> {
        self.near_miss_ids.get(expected)
    }
}
