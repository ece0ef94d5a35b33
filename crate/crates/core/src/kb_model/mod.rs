//! Knowledge-base data model and domain configuration.

mod config;
mod id;
mod record;

pub use config::{
    validate_config, ConfigError, DomainConfig, InferenceRule, Params, Tiers, ValidatedConfig, Weights,
};
pub use id::{EntityId, EntityKind, InvalidEntityId};
pub use record::{ItemRecord, Relation, TypeEdge};
