use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ExtractionRecord;
use crate::rdf::{Iri, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub members: Vec<Iri>,
    pub minted: Iri,
    pub categories: BTreeSet<String>,
    pub per_source_labels: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalencePartition {
    pub clusters: Vec<Cluster>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttributeValue {
    pub value: Term,
    pub source: String,
    pub member: Iri,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedEntity {
    pub minted: Iri,
    pub display_label: String,
    pub all_labels: Vec<String>,
    pub categories: BTreeSet<String>,
    pub sources: BTreeSet<String>,
    pub members: BTreeSet<Iri>,
    /// Datasets that extracted each member; members only reached through
    /// equivalence links map to an empty set.
    pub member_sources: BTreeMap<Iri, BTreeSet<String>>,
    pub attributes: BTreeMap<String, Vec<AttributeValue>>,
}

impl MergedEntity {
    /// Members ordered by the best priority of the datasets that supplied
    /// them, then by IRI. Members with no dataset come last.
    pub fn members_by_priority(&self, priority: &BTreeMap<String, i64>) -> Vec<Iri> {
        let rank = |m: &Iri| {
            self.member_sources
                .get(m)
                .into_iter()
                .flatten()
                .filter_map(|d| priority.get(d).copied())
                .min()
                .unwrap_or(i64::MAX)
        };
        let mut members: Vec<Iri> = self.members.iter().cloned().collect();
        members.sort_by(|a, b| rank(a).cmp(&rank(b)).then_with(|| a.cmp(b)));
        members
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MergeError {
    #[error("cluster {0} has no extracted records")]
    EmptyCluster(String),
}

/// Merges the records of one cluster into a unified entity.
///
/// The display label comes from the preferred (lowest priority number)
/// dataset; ties go to the shorter label, then byte order.
pub fn merge_records(
    cluster: &Cluster,
    records: &[&ExtractionRecord],
    dataset_priority: &BTreeMap<String, i64>,
) -> Result<MergedEntity, MergeError> {
    if cluster.members.is_empty() || records.is_empty() {
        return Err(MergeError::EmptyCluster(cluster.minted.to_string()));
    }
    debug_assert!(records.iter().all(|r| cluster.members.contains(&r.entity)));

    let mut labels: Vec<(i64, String)> = Vec::new();
    let mut categories = BTreeSet::new();
    let mut sources = BTreeSet::new();
    let mut member_sources: BTreeMap<Iri, BTreeSet<String>> =
        cluster.members.iter().map(|m| (m.clone(), BTreeSet::new())).collect();
    let mut attributes: BTreeMap<String, BTreeSet<AttributeValue>> = BTreeMap::new();

    for r in records {
        let priority = dataset_priority.get(&r.dataset_id).copied().unwrap_or(i64::MAX);
        labels.push((priority, r.label.clone()));
        categories.insert(r.category_id.clone());
        sources.insert(r.dataset_id.clone());
        member_sources
            .entry(r.entity.clone())
            .or_default()
            .insert(r.dataset_id.clone());
        for (name, values) in &r.attributes {
            for v in values {
                if name == "label" {
                    if let Term::Literal(l) = v {
                        labels.push((priority, l.lexical().to_string()));
                    }
                }
                attributes.entry(name.clone()).or_default().insert(AttributeValue {
                    value: v.clone(),
                    source: r.dataset_id.clone(),
                    member: r.entity.clone(),
                });
            }
        }
    }

    labels.sort_by(|(pa, a), (pb, b)| {
        pa.cmp(pb)
            .then_with(|| a.chars().count().cmp(&b.chars().count()))
            .then_with(|| a.as_bytes().cmp(b.as_bytes()))
    });
    let mut all_labels: Vec<String> = Vec::new();
    for (_, l) in labels {
        if !all_labels.contains(&l) {
            all_labels.push(l);
        }
    }

    Ok(MergedEntity {
        minted: cluster.minted.clone(),
        display_label: all_labels[0].clone(),
        all_labels,
        categories,
        sources,
        members: cluster.members.iter().cloned().collect(),
        member_sources,
        attributes: attributes
            .into_iter()
            .map(|(k, v)| (k, v.into_iter().collect()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::parse(s).unwrap()
    }

    fn rec(dataset: &str, category: &str, entity: &str, label: &str) -> ExtractionRecord {
        ExtractionRecord {
            dataset_id: dataset.into(),
            category_id: category.into(),
            entity: iri(entity),
            label: label.into(),
            attributes: Default::default(),
        }
    }

    fn cluster(members: &[&str]) -> Cluster {
        Cluster {
            members: members.iter().map(|m| iri(m)).collect(),
            minted: iri("https://lod.test/entity/0000000000000000"),
            categories: Default::default(),
            per_source_labels: Default::default(),
        }
    }

    fn priorities(p: &[(&str, i64)]) -> BTreeMap<String, i64> {
        p.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn preferred_dataset_wins_display_label() {
        let a = rec("wikidata", "artists", "http://wd/Q1", "The Beatles");
        let b = rec("dbpedia", "artists", "http://dbr/B", "Beatles, The");
        let m = merge_records(
            &cluster(&["http://dbr/B", "http://wd/Q1"]),
            &[&b, &a],
            &priorities(&[("wikidata", 0), ("dbpedia", 1)]),
        )
        .unwrap();
        assert_eq!(m.display_label, "The Beatles");
        assert_eq!(m.all_labels.len(), 2);
        assert_eq!(m.sources.len(), 2);
    }

    #[test]
    fn equal_priority_prefers_shorter_label() {
        let a = rec("x", "artists", "http://x/1", "Béla Bartók");
        let b = rec("y", "artists", "http://y/1", "Bartók");
        let m = merge_records(
            &cluster(&["http://x/1", "http://y/1"]),
            &[&a, &b],
            &priorities(&[("x", 1), ("y", 1)]),
        )
        .unwrap();
        assert_eq!(m.display_label, "Bartók");
    }

    #[test]
    fn categories_union() {
        let a = rec("x", "artists", "http://x/1", "A");
        let b = rec("y", "music", "http://y/1", "A");
        let m = merge_records(&cluster(&["http://x/1", "http://y/1"]), &[&a, &b], &priorities(&[])).unwrap();
        assert_eq!(m.categories, ["artists", "music"].iter().map(|s| s.to_string()).collect());
        assert_eq!(m.all_labels, vec!["A"]);
    }

    #[test]
    fn empty_cluster_is_an_error() {
        assert!(matches!(
            merge_records(&cluster(&[]), &[], &priorities(&[])),
            Err(MergeError::EmptyCluster(_))
        ));
    }
}
