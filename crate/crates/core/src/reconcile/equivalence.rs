//! Equivalence detection against remote endpoints and its closure.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::dsu::DisjointSets;
use crate::config::PortalConfig;
use crate::ingest::{execute_select, fan_out, FetchOptions, IngestionSnapshot, ResultsFetcher};
use crate::rdf::{Iri, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceStatement {
    pub left: Iri,
    pub right: Iri,
    pub predicate: Iri,
    /// Dataset id or endpoint URL that asserted the link.
    pub provenance: String,
    /// 0 when found by looking up an ingested IRI, k when found k
    /// expansion lookups further out.
    pub hop: u32,
}

impl EquivalenceStatement {
    fn key(&self) -> (Iri, Iri, Iri) {
        let (a, b) = if self.left <= self.right {
            (self.left.clone(), self.right.clone())
        } else {
            (self.right.clone(), self.left.clone())
        };
        (a, b, self.predicate.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupFailure {
    pub iri: Iri,
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Equivalences {
    pub statements: Vec<EquivalenceStatement>,
    pub failures: Vec<LookupFailure>,
}

/// The lookup sent for one IRI: links through any of `predicates`, in
/// either direction.
pub fn equivalence_lookup_query(iri: &Iri, predicates: &[Iri]) -> String {
    let values: Vec<String> = predicates.iter().map(|p| format!("<{p}>")).collect();
    format!(
        "SELECT DISTINCT ?p ?o WHERE {{ VALUES ?p {{ {} }} {{ <{iri}> ?p ?o }} UNION {{ ?o ?p <{iri}> }} FILTER(isIRI(?o)) }}",
        values.join(" ")
    )
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Lookup {
    iri: Iri,
    source: String,
    endpoint: String,
    predicates: Vec<Iri>,
}

/// Looks up equivalence links for every extracted IRI on the expansion
/// endpoints of its categories, then follows newly discovered IRIs for up
/// to `depth` further hops. Lookup failures are recorded, never fatal.
pub fn collect_equivalences(
    snapshot: &IngestionSnapshot,
    cfg: &PortalConfig,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
    depth: u32,
) -> Equivalences {
    let mut categories_of: BTreeMap<&Iri, BTreeSet<&str>> = BTreeMap::new();
    for r in &snapshot.records {
        categories_of.entry(&r.entity).or_default().insert(&r.category_id);
    }

    let mut frontier: Vec<Lookup> = Vec::new();
    let mut planned: BTreeSet<(Iri, String, Vec<Iri>)> = BTreeSet::new();
    let mut plans_of: BTreeMap<Iri, Vec<Lookup>> = BTreeMap::new();
    for (iri, categories) in &categories_of {
        for category in categories {
            let Some(def) = cfg.index_def(category) else {
                continue;
            };
            for name in &def.expansion_endpoints {
                let Some((source, endpoint)) = cfg.resolve_endpoint(name) else {
                    continue;
                };
                let key = ((*iri).clone(), endpoint.clone(), def.equivalence_predicates.clone());
                if planned.insert(key) {
                    let lookup = Lookup {
                        iri: (*iri).clone(),
                        source,
                        endpoint,
                        predicates: def.equivalence_predicates.clone(),
                    };
                    plans_of.entry((*iri).clone()).or_default().push(lookup.clone());
                    frontier.push(lookup);
                }
            }
        }
    }

    let mut seen_iris: BTreeSet<Iri> = categories_of.keys().map(|i| (*i).clone()).collect();
    let mut by_key: BTreeMap<(Iri, Iri, Iri), EquivalenceStatement> = BTreeMap::new();
    let mut failures = Vec::new();

    for hop in 0..=depth {
        if frontier.is_empty() {
            break;
        }
        let jobs: Vec<(String, Lookup)> = frontier
            .drain(..)
            .map(|l| (l.endpoint.clone(), l))
            .collect();
        let results = fan_out(jobs, opts.parallelism, |lookup| {
            let query = equivalence_lookup_query(&lookup.iri, &lookup.predicates);
            let result = execute_select(&lookup.endpoint, &query, opts, fetcher);
            (lookup, result)
        });

        let mut discovered: BTreeSet<(Iri, Iri)> = BTreeSet::new();
        for (lookup, result) in results {
            let table = match result {
                Ok(t) => t,
                Err(e) => {
                    log::warn!("equivalence lookup for {} on {} failed: {e}", lookup.iri, lookup.source);
                    failures.push(LookupFailure {
                        iri: lookup.iri.clone(),
                        source: lookup.source.clone(),
                        error: e.to_string(),
                    });
                    continue;
                }
            };
            for row in table.rows {
                let (Some(Term::Iri(p)), Some(Term::Iri(o))) = (row.get("p"), row.get("o")) else {
                    continue;
                };
                if !lookup.predicates.contains(p) || *o == lookup.iri {
                    continue;
                }
                let stmt = EquivalenceStatement {
                    left: lookup.iri.clone(),
                    right: o.clone(),
                    predicate: p.clone(),
                    provenance: lookup.source.clone(),
                    hop,
                };
                by_key.entry(stmt.key()).or_insert(stmt);
                if seen_iris.insert(o.clone()) {
                    discovered.insert((o.clone(), lookup.iri.clone()));
                }
            }
        }
        if hop < depth {
            // a newly found IRI is looked up wherever the IRI that
            // surfaced it was looked up
            let mut next: BTreeSet<Lookup> = BTreeSet::new();
            for (found, parent) in discovered {
                for plan in plans_of.get(&parent).cloned().unwrap_or_default() {
                    plans_of.entry(found.clone()).or_default().push(plan.clone());
                    next.insert(Lookup {
                        iri: found.clone(),
                        ..plan
                    });
                }
            }
            frontier = next.into_iter().collect();
        }
    }

    Equivalences {
        statements: by_key.into_values().collect(),
        failures,
    }
}

/// Connected components of the undirected graph whose nodes are `entities`
/// plus every statement endpoint. Members and components are sorted.
pub fn close_equivalences(
    entities: &BTreeSet<Iri>,
    statements: &[EquivalenceStatement],
) -> Vec<Vec<Iri>> {
    let mut nodes: BTreeSet<&Iri> = entities.iter().collect();
    for s in statements {
        nodes.insert(&s.left);
        nodes.insert(&s.right);
    }
    let nodes: Vec<&Iri> = nodes.into_iter().collect();
    let index: HashMap<&Iri, usize> = nodes.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut sets = DisjointSets::new(nodes.len());
    for s in statements {
        sets.union(index[&s.left], index[&s.right]);
    }
    // node order is sorted, so groups come out sorted by first member
    sets.groups()
        .into_iter()
        .map(|g| g.into_iter().map(|i| nodes[i].clone()).collect())
        .collect()
}
