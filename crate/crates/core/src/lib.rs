//! Offline entity linking of mentions and scientific-table cells against a
//! Wikidata-style knowledge base.
//!
//! The pipeline is: [`dump_ingest`] turns entity dumps into compact records
//! and type edges, [`type_store`] materializes the supertype closure,
//! [`candidate_index`] serves exact/partial label and alias lookups,
//! [`linker`] scores candidates against the domain tiers, and
//! [`table_linker`] adds literal detection and column-level joint inference.
//! [`eval_bench`] holds evaluation, the latency bench and the synthetic KB
//! generator.

pub mod candidate_index;
pub mod cli;
pub mod dump_ingest;
pub mod eval_bench;
pub mod jsonl;
pub mod kb_model;
pub mod linker;
pub mod table_linker;
pub mod text;
pub mod type_store;

pub use kb_model::{EntityId, EntityKind, ItemRecord, TypeEdge};

/// Version of the record, edge, closure, index and annotation file formats.
pub const FORMAT_VERSION: &str = "1";
