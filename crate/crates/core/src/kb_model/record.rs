use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::id::EntityId;
use crate::text::normalize;

/// One knowledge-base entity (item or property) as used for linking.
///
/// Construct through [`ItemRecord::new`]; deserialization goes through the
/// same path, so the invariants hold for records read back from disk too.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RecordLine")]
pub struct ItemRecord {
    pub id: EntityId,
    pub label: String,
    pub aliases: Vec<String>,
    pub description: String,
    pub direct_types: Vec<EntityId>,
    pub sitelinks_count: u64,
    pub flagged_props: BTreeSet<EntityId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: EntityId,
    label: String,
    #[serde(default)]
    aliases: Vec<String>,
    #[serde(default)]
    description: String,
    #[serde(default)]
    direct_types: Vec<EntityId>,
    #[serde(default)]
    sitelinks_count: u64,
    #[serde(default)]
    flagged_props: BTreeSet<EntityId>,
}

impl TryFrom<RecordLine> for ItemRecord {
    type Error = String;

    fn try_from(line: RecordLine) -> Result<Self, Self::Error> {
        let id = line.id;
        ItemRecord::new(
            line.id,
            line.label,
            line.aliases,
            line.description,
            line.direct_types,
            line.sitelinks_count,
            line.flagged_props,
        )
        .ok_or_else(|| format!("record {id} has an empty label"))
    }
}

impl ItemRecord {
    /// Returns `None` when the label is empty after normalization.
    ///
    /// Aliases are deduplicated on their normalized form (first spelling
    /// kept) and any alias equal to the label is dropped. Non-item direct
    /// types are discarded.
    pub fn new(
        id: EntityId,
        label: impl Into<String>,
        aliases: impl IntoIterator<Item = String>,
        description: impl Into<String>,
        direct_types: impl IntoIterator<Item = EntityId>,
        sitelinks_count: u64,
        flagged_props: BTreeSet<EntityId>,
    ) -> Option<Self> {
        let label = label.into();
        let norm_label = normalize(&label);
        if norm_label.is_empty() {
            return None;
        }
        let mut seen = HashSet::new();
        seen.insert(norm_label);
        let aliases = aliases
            .into_iter()
            .filter(|a| {
                let n = normalize(a);
                !n.is_empty() && seen.insert(n)
            })
            .collect();
        let mut seen_types = HashSet::new();
        let direct_types = direct_types
            .into_iter()
            .filter(|t| t.is_item() && seen_types.insert(*t))
            .collect();
        Some(ItemRecord {
            id,
            label,
            aliases,
            description: description.into(),
            direct_types,
            sitelinks_count,
            flagged_props,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    SubclassOf,
    SubpropertyOf,
}

/// A `child -> parent` edge of the type hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TypeEdge {
    pub child: EntityId,
    pub parent: EntityId,
    pub relation: Relation,
}

impl TypeEdge {
    /// `subclass_of` needs two items, `subproperty_of` two properties.
    pub fn is_well_kinded(&self) -> bool {
        match self.relation {
            Relation::SubclassOf => self.child.is_item() && self.parent.is_item(),
            Relation::SubpropertyOf => self.child.is_property() && self.parent.is_property(),
        }
    }
}
