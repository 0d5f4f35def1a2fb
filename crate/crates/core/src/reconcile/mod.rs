//! Reconciliation: named graphs per extracted IRI, equivalence lookup,
//! symmetric-transitive closure, minted identities, merged entities and
//! the exported linkset.

mod dsu;
mod equivalence;
mod graphs;
mod merge;
mod mint;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PortalConfig;
use crate::ingest::{ExtractionRecord, FetchOptions, IngestionSnapshot, ResultsFetcher};
use crate::rdf::{Iri, Statement, OWL_SAME_AS};
use crate::store::ReconciledStore;

pub use dsu::DisjointSets;
pub use equivalence::{
    close_equivalences, collect_equivalences, equivalence_lookup_query, EquivalenceStatement, Equivalences,
    LookupFailure,
};
pub use graphs::{attribute_predicate, build_entity_graphs, category_predicate, graph_iri_for, EntityGraph};
pub use merge::{merge_records, AttributeValue, Cluster, EquivalencePartition, MergeError, MergedEntity};
pub use mint::{mint_identity, minted_suffix, MINTED_SUFFIX_LEN};

/// Default number of lookups beyond the ingested IRIs.
pub const DEFAULT_EXPANSION_DEPTH: u32 = 1;
pub const MAX_EXPANSION_DEPTH: u32 = 3;

#[derive(Debug, Error)]
pub enum ReconcileError {
    #[error("no dataset/category pair produced any record")]
    NoUsablePairs,
    #[error("minted IRI {minted} collides between two clusters")]
    MintCollision { minted: String },
    #[error("expansion depth {0} is outside 0..={MAX_EXPANSION_DEPTH}")]
    InvalidDepth(u32),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

/// The sameAs statements linking each minted IRI to its members.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Linkset {
    pub statements: Vec<Statement>,
}

impl Linkset {
    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn to_ntriples(&self) -> Vec<u8> {
        crate::rdf::serialize_linkset_ntriples(&self.statements).expect("linksets hold IRIs only")
    }
}

pub fn build_linkset(partition: &EquivalencePartition) -> Linkset {
    let same_as = Iri::new_unchecked(OWL_SAME_AS);
    let mut statements: Vec<Statement> = partition
        .clusters
        .iter()
        .flat_map(|c| {
            c.members
                .iter()
                .map(|m| Statement::triple(c.minted.clone(), same_as.clone(), m.clone()))
        })
        .collect();
    statements.sort();
    Linkset { statements }
}

/// Two members of one cluster extracted by the same dataset for the same
/// category; merged anyway, reported for curation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub minted: Iri,
    pub dataset_id: String,
    pub category_id: String,
    pub members: Vec<Iri>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconcileStats {
    /// Configured category ids, in configuration order.
    pub categories: Vec<String>,
    pub base_iri: String,
    pub extracted_iris: usize,
    pub equivalence_statements: usize,
    pub clusters: usize,
    pub merged_clusters: usize,
    pub linkset_size: usize,
    /// IRIs extracted by more than one dataset (their graphs hold
    /// statements from several sources).
    pub multi_source_iris: Vec<Iri>,
    pub conflicts: Vec<Conflict>,
    pub lookup_failures: Vec<LookupFailure>,
    pub equivalences: Vec<EquivalenceStatement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReconcileOptions {
    pub expansion_depth: u32,
}

impl Default for ReconcileOptions {
    fn default() -> Self {
        ReconcileOptions {
            expansion_depth: DEFAULT_EXPANSION_DEPTH,
        }
    }
}

/// Mints an identity for every component and builds its cluster record.
pub fn build_partition(
    components: Vec<Vec<Iri>>,
    records: &[ExtractionRecord],
    base_iri: &str,
) -> Result<EquivalencePartition, ReconcileError> {
    let mut by_entity: HashMap<&Iri, Vec<&ExtractionRecord>> = HashMap::new();
    for r in records {
        by_entity.entry(&r.entity).or_default().push(r);
    }
    let mut seen = BTreeSet::new();
    let mut clusters = Vec::with_capacity(components.len());
    for members in components {
        let minted = mint_identity(&members, base_iri);
        if !seen.insert(minted.clone()) || members.contains(&minted) {
            return Err(ReconcileError::MintCollision {
                minted: minted.to_string(),
            });
        }
        let mut categories = BTreeSet::new();
        let mut per_source_labels: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for m in &members {
            for r in by_entity.get(m).into_iter().flatten() {
                categories.insert(r.category_id.clone());
                let labels = per_source_labels.entry(r.dataset_id.clone()).or_default();
                if !labels.contains(&r.label) {
                    labels.push(r.label.clone());
                }
            }
        }
        clusters.push(Cluster {
            members,
            minted,
            categories,
            per_source_labels,
        });
    }
    Ok(EquivalencePartition { clusters })
}

/// Runs the whole reconciliation pipeline over a snapshot.
pub fn reconcile(
    snapshot: &IngestionSnapshot,
    cfg: &PortalConfig,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
    ropts: ReconcileOptions,
) -> Result<ReconciledStore, ReconcileError> {
    if snapshot.records.is_empty() {
        return Err(ReconcileError::NoUsablePairs);
    }
    if ropts.expansion_depth > MAX_EXPANSION_DEPTH {
        return Err(ReconcileError::InvalidDepth(ropts.expansion_depth));
    }
    let base_iri = cfg.base_iri.as_str();

    let graphs = build_entity_graphs(snapshot, base_iri);
    let equivalences = collect_equivalences(snapshot, cfg, opts, fetcher, ropts.expansion_depth);
    let extracted: BTreeSet<Iri> = graphs.iter().map(|g| g.entity.clone()).collect();
    let components = close_equivalences(&extracted, &equivalences.statements);
    let partition = build_partition(components, &snapshot.records, base_iri)?;

    let mut by_entity: HashMap<&Iri, Vec<&ExtractionRecord>> = HashMap::new();
    for r in &snapshot.records {
        by_entity.entry(&r.entity).or_default().push(r);
    }
    let priority = cfg.dataset_priorities();

    let mut entities = BTreeMap::new();
    let mut member_to_minted = BTreeMap::new();
    let mut conflicts = Vec::new();
    for cluster in &partition.clusters {
        let records: Vec<&ExtractionRecord> = cluster
            .members
            .iter()
            .flat_map(|m| by_entity.get(m).into_iter().flatten().copied())
            .collect();
        let merged = merge_records(cluster, &records, &priority)?;

        let mut per_pair: BTreeMap<(&str, &str), BTreeSet<&Iri>> = BTreeMap::new();
        for r in &records {
            per_pair
                .entry((r.dataset_id.as_str(), r.category_id.as_str()))
                .or_default()
                .insert(&r.entity);
        }
        for ((dataset, category), members) in per_pair {
            if members.len() > 1 {
                conflicts.push(Conflict {
                    minted: cluster.minted.clone(),
                    dataset_id: dataset.to_string(),
                    category_id: category.to_string(),
                    members: members.into_iter().cloned().collect(),
                });
            }
        }
        for m in &cluster.members {
            member_to_minted.insert(m.clone(), cluster.minted.clone());
        }
        entities.insert(cluster.minted.clone(), merged);
    }

    let linkset = build_linkset(&partition);
    let multi_source_iris = graphs
        .iter()
        .filter(|g| g.statements.iter().map(|(_, s)| s).collect::<BTreeSet<_>>().len() > 1)
        .map(|g| g.entity.clone())
        .collect();

    let stats = ReconcileStats {
        categories: cfg.category_ids(),
        base_iri: base_iri.to_string(),
        extracted_iris: extracted.len(),
        equivalence_statements: equivalences.statements.len(),
        clusters: partition.clusters.len(),
        merged_clusters: partition.clusters.iter().filter(|c| c.members.len() > 1).count(),
        linkset_size: linkset.len(),
        multi_source_iris,
        conflicts,
        lookup_failures: equivalences.failures,
        equivalences: equivalences.statements,
    };

    Ok(ReconciledStore {
        entities,
        linkset,
        graphs,
        member_to_minted,
        stats,
    })
}
