//! Configuration-driven aggregation of Linked Open Data entities.
//!
//! The pipeline runs in stages: [`ingest`] harvests entity rows from the
//! configured SPARQL endpoints, [`reconcile`] merges equivalent entities
//! under minted identities, [`index`] builds per-category autocomplete
//! indexes, and [`api`] serves the result over HTTP. [`fixture`] provides
//! a canned endpoint for offline runs.

pub mod api;
pub mod config;
pub mod fixture;
pub mod index;
pub mod ingest;
pub mod rdf;
pub mod reconcile;
pub mod relations;
pub mod store;

pub use config::{load_portal_config, validate_config, PortalConfig, ValidationReport};
pub use index::{build_indexes, normalize_label, CategoryIndex, MatchClass, Suggestion};
pub use ingest::{ingest, ExtractionRecord, FetchOptions, IngestionSnapshot, ResultsFetcher};
pub use rdf::{Iri, Literal, Statement, Term};
pub use reconcile::{reconcile, Linkset, MergedEntity, ReconcileOptions};
pub use relations::{filter_relations, InsightCard, Relation, RelationFilter};
pub use store::ReconciledStore;
