use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Items sort before properties; see [`EntityId`] ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Item,
    Property,
}

impl EntityKind {
    fn prefix(self) -> char {
        match self {
            EntityKind::Item => 'Q',
            EntityKind::Property => 'P',
        }
    }
}

/// A `Q<digits>` or `P<digits>` identifier. Ordered by `(kind, num)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId {
    kind: EntityKind,
    num: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid entity id {0:?}")]
pub struct InvalidEntityId(pub String);

impl EntityId {
    pub const fn new(kind: EntityKind, num: u64) -> Self {
        EntityId { kind, num }
    }

    pub const fn item(num: u64) -> Self {
        Self::new(EntityKind::Item, num)
    }

    pub const fn property(num: u64) -> Self {
        Self::new(EntityKind::Property, num)
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn is_item(&self) -> bool {
        self.kind == EntityKind::Item
    }

    pub fn is_property(&self) -> bool {
        self.kind == EntityKind::Property
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.prefix(), self.num)
    }
}

impl FromStr for EntityId {
    type Err = InvalidEntityId;

    /// Leading zeros are rejected so that parse/format stays a bijection.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || InvalidEntityId(s.to_owned());
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('Q') => EntityKind::Item,
            Some('P') => EntityKind::Property,
            _ => return Err(bad()),
        };
        let digits = chars.as_str();
        if digits.is_empty()
            || !digits.bytes().all(|b| b.is_ascii_digit())
            || (digits.len() > 1 && digits.starts_with('0'))
        {
            return Err(bad());
        }
        let num = digits.parse::<u64>().map_err(|_| bad())?;
        Ok(EntityId { kind, num })
    }
}

impl Serialize for EntityId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EntityId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = std::borrow::Cow::<str>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
