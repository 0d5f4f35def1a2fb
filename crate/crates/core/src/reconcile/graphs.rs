use std::collections::BTreeMap;

use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};

use crate::ingest::IngestionSnapshot;
use crate::rdf::{Iri, Literal, Statement, Term, RDFS_LABEL};

/// The named graph holding everything extracted about one IRI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityGraph {
    pub graph_iri: Iri,
    pub entity: Iri,
    /// `(statement, source dataset)`; every statement carries `graph_iri`.
    pub statements: Vec<(Statement, String)>,
}

pub fn graph_iri_for(base_iri: &str, entity: &Iri) -> Iri {
    let encoded = utf8_percent_encode(entity.as_str(), NON_ALPHANUMERIC).to_string();
    Iri::parse(&format!("{base_iri}graph/{encoded}")).expect("percent-encoded IRI is valid")
}

/// Predicate used for extra projected variables.
pub fn attribute_predicate(base_iri: &str, var: &str) -> Iri {
    let encoded = utf8_percent_encode(var, NON_ALPHANUMERIC).to_string();
    Iri::parse(&format!("{base_iri}vocab/{encoded}")).expect("vocab IRI is valid")
}

pub fn category_predicate(base_iri: &str) -> Iri {
    attribute_predicate(base_iri, "category")
}

/// One graph per distinct extracted IRI, ordered by IRI.
pub fn build_entity_graphs(snapshot: &IngestionSnapshot, base_iri: &str) -> Vec<EntityGraph> {
    let label = Iri::new_unchecked(RDFS_LABEL);
    let category = category_predicate(base_iri);
    let mut graphs: BTreeMap<&Iri, EntityGraph> = BTreeMap::new();
    for r in &snapshot.records {
        let graph = graphs.entry(&r.entity).or_insert_with(|| EntityGraph {
            graph_iri: graph_iri_for(base_iri, &r.entity),
            entity: r.entity.clone(),
            statements: Vec::new(),
        });
        let g = Some(graph.graph_iri.clone());
        let mut push = |predicate: Iri, object: Term| {
            let stmt = Statement {
                subject: crate::rdf::Subject::Iri(r.entity.clone()),
                predicate,
                object,
                graph: g.clone(),
            };
            let entry = (stmt, r.dataset_id.clone());
            if !graph.statements.contains(&entry) {
                graph.statements.push(entry);
            }
        };
        push(label.clone(), Term::Literal(Literal::simple(r.label.clone())));
        push(category.clone(), Term::Literal(Literal::simple(r.category_id.clone())));
        for (var, values) in &r.attributes {
            let p = if var == "label" {
                label.clone()
            } else {
                attribute_predicate(base_iri, var)
            };
            for v in values {
                push(p.clone(), v.clone());
            }
        }
    }
    graphs
        .into_values()
        .map(|mut g| {
            g.statements.sort();
            g
        })
        .collect()
}
