//! Relations around a merged entity, relation filters and insight cards.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{render_query, BlockKind, BlockSize, InsightTemplate, PortalConfig, ENTITY_PLACEHOLDER};
use crate::ingest::{execute_select, fan_out, fetch_with_retry, FetchOptions, ResultsFetcher};
use crate::rdf::{Iri, Row, Term};
use crate::store::ReconciledStore;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub subject: Iri,
    pub predicate: Iri,
    pub predicate_label: String,
    pub object: Term,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_entity: Option<Iri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_category: Option<String>,
    pub source: String,
    pub transitive: bool,
    /// The triple points at the entity (`?s ?p <member>`); `object` is then
    /// the triple's subject.
    #[serde(default)]
    pub inverse: bool,
}

impl Relation {
    /// Text shown for the object: the linked entity's label when resolved.
    pub fn display_object(&self, store: &ReconciledStore) -> String {
        self.object_entity
            .as_ref()
            .and_then(|m| store.entities.get(m))
            .map(|e| e.display_label.clone())
            .unwrap_or_else(|| self.object.value())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationFilter {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation_type: Option<Iri>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

impl RelationFilter {
    pub fn is_empty(&self) -> bool {
        self.relation_type.is_none() && self.category.is_none() && self.source.is_none()
    }

    pub fn matches(&self, r: &Relation) -> bool {
        self.relation_type.as_ref().is_none_or(|t| *t == r.predicate)
            && self
                .category
                .as_ref()
                .is_none_or(|c| r.object_category.as_ref() == Some(c))
            && self.source.as_ref().is_none_or(|s| *s == r.source)
    }
}

/// Keeps the relations matching every present field, in input order.
pub fn filter_relations(relations: &[Relation], f: &RelationFilter) -> Vec<Relation> {
    relations.iter().filter(|r| f.matches(r)).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionFailure {
    pub member: Iri,
    pub source: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSet {
    pub relations: Vec<Relation>,
    pub errors: Vec<ExpansionFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelationsError {
    #[error("unknown entity {0}")]
    UnknownEntity(String),
    #[error("no insight template for the categories of {0}")]
    NoTemplate(String),
}

const PREDICATE_LABELS: &[(&str, &str)] = &[
    ("http://www.w3.org/1999/02/22-rdf-syntax-ns#type", "type"),
    ("http://www.w3.org/2000/01/rdf-schema#label", "label"),
    ("http://www.w3.org/2000/01/rdf-schema#seeAlso", "see also"),
    ("http://www.w3.org/2002/07/owl#sameAs", "same as"),
    ("http://www.w3.org/2004/02/skos/core#exactMatch", "exact match"),
    ("http://www.w3.org/2004/02/skos/core#broader", "broader"),
    ("http://www.w3.org/2004/02/skos/core#narrower", "narrower"),
    ("http://xmlns.com/foaf/0.1/depiction", "depiction"),
    ("http://dbpedia.org/ontology/genre", "genre"),
    ("http://dbpedia.org/ontology/hometown", "hometown"),
    ("http://dbpedia.org/ontology/birthPlace", "birth place"),
    ("http://dbpedia.org/ontology/instrument", "instrument"),
    ("http://dbpedia.org/ontology/artist", "artist"),
    ("http://dbpedia.org/ontology/bandMember", "band member"),
    ("http://dbpedia.org/ontology/stylisticOrigin", "stylistic origin"),
    ("http://www.wikidata.org/prop/direct/P18", "image"),
    ("http://www.wikidata.org/prop/direct/P19", "place of birth"),
    ("http://www.wikidata.org/prop/direct/P31", "instance of"),
    ("http://www.wikidata.org/prop/direct/P106", "occupation"),
    ("http://www.wikidata.org/prop/direct/P136", "genre"),
    ("http://www.wikidata.org/prop/direct/P175", "performer"),
    ("http://www.wikidata.org/prop/direct/P527", "has part"),
    ("http://www.wikidata.org/prop/direct/P740", "location of formation"),
    ("http://www.wikidata.org/prop/direct/P1303", "instrument"),
];

/// Built-in label for well-known predicates, else the IRI's local name.
pub fn predicate_label(predicate: &Iri) -> String {
    PREDICATE_LABELS
        .iter()
        .find(|(iri, _)| *iri == predicate.as_str())
        .map(|(_, label)| label.to_string())
        .unwrap_or_else(|| predicate.local_name().to_string())
}

pub fn expansion_query(member: &Iri) -> String {
    format!("SELECT ?s ?p ?o WHERE {{ {{ <{member}> ?p ?o }} UNION {{ ?s ?p <{member}> }} }}")
}

/// Resolves `object` against the store. `None` when it is the subject
/// entity itself (links between members of one cluster).
fn resolve_object(store: &ReconciledStore, subject: &Iri, object: &Term) -> Option<(Option<Iri>, Option<String>)> {
    let Some(iri) = object.as_iri() else {
        return Some((None, None));
    };
    match store.member_to_minted.get(iri) {
        Some(minted) if minted == subject => None,
        Some(minted) => {
            let category = store
                .entities
                .get(minted)
                .and_then(|e| e.categories.iter().next().cloned());
            Some((Some(minted.clone()), category))
        }
        None if iri == subject => None,
        None => Some((None, None)),
    }
}

fn make_relation(
    store: &ReconciledStore,
    subject: &Iri,
    predicate: Iri,
    object: Term,
    source: &str,
    transitive: bool,
    inverse: bool,
) -> Option<Relation> {
    if matches!(object, Term::BlankNode(_)) {
        return None;
    }
    let (object_entity, object_category) = resolve_object(store, subject, &object)?;
    Some(Relation {
        subject: subject.clone(),
        predicate_label: predicate_label(&predicate),
        predicate,
        object,
        object_entity,
        object_category,
        source: source.to_string(),
        transitive,
        inverse,
    })
}

/// Splits a union-query row into `(predicate, other end, inverse)`.
fn row_triple(row: &Row) -> Option<(Iri, Term, bool)> {
    let p = row.get("p")?.as_iri()?.clone();
    match (row.get("o"), row.get("s")) {
        (Some(o), _) => Some((p, o.clone(), false)),
        (None, Some(s)) => Some((p, s.clone(), true)),
        (None, None) => None,
    }
}

type Fetched = Result<Vec<Row>, String>;

fn fetch_members(
    jobs: Vec<(Iri, String, String)>,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
) -> Vec<(Iri, String, Fetched)> {
    let keyed = jobs
        .into_iter()
        .map(|(member, source, endpoint)| (endpoint.clone(), (member, source, endpoint)))
        .collect();
    fan_out(keyed, opts.parallelism, |(member, source, endpoint)| {
        let rows = execute_select(&endpoint, &expansion_query(&member), opts, fetcher)
            .map(|t| t.rows)
            .map_err(|e| e.to_string());
        (member, source, rows)
    })
}

/// Direct relations of every member, then one hop through linked entities.
///
/// The hop follows outbound links to resolved entities and keeps only their
/// outbound links to IRIs.
pub fn expand_relations(
    entity: &Iri,
    store: &ReconciledStore,
    cfg: &PortalConfig,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
) -> Result<RelationSet, RelationsError> {
    expand_relations_with(entity, store, cfg, opts, fetcher, true)
}

pub fn expand_relations_with(
    entity: &Iri,
    store: &ReconciledStore,
    cfg: &PortalConfig,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
    transitive_hop: bool,
) -> Result<RelationSet, RelationsError> {
    let merged = store
        .entities
        .get(entity)
        .ok_or_else(|| RelationsError::UnknownEntity(entity.to_string()))?;

    let mut out = RelationSet::default();
    let mut seen: HashSet<(Iri, String, String, bool)> = HashSet::new();
    let mut push = |out: &mut RelationSet, r: Relation| {
        let resolved = r
            .object_entity
            .as_ref()
            .map(|m| m.to_string())
            .unwrap_or_else(|| term_key(&r.object));
        if seen.insert((r.predicate.clone(), resolved, r.source.clone(), r.inverse)) {
            out.relations.push(r);
        }
    };

    let endpoints = cfg.expansion_endpoints(&merged.categories);
    let jobs = merged
        .members
        .iter()
        .flat_map(|m| endpoints.iter().map(move |(s, e)| (m.clone(), s.clone(), e.clone())))
        .collect();
    let mut neighbours = BTreeSet::new();
    for (member, source, rows) in fetch_members(jobs, opts, fetcher) {
        match rows {
            Ok(rows) => {
                for (p, o, inverse) in rows.iter().filter_map(row_triple) {
                    if let Some(r) = make_relation(store, entity, p, o, &source, false, inverse) {
                        if let (Some(n), false) = (&r.object_entity, inverse) {
                            neighbours.insert(n.clone());
                        }
                        push(&mut out, r);
                    }
                }
            }
            Err(error) => out.errors.push(ExpansionFailure { member, source, error }),
        }
    }

    if transitive_hop {
        let mut jobs = Vec::new();
        for n in &neighbours {
            let ne = &store.entities[n];
            let endpoints = cfg.expansion_endpoints(&ne.categories);
            for m in &ne.members {
                for (s, e) in &endpoints {
                    jobs.push((m.clone(), s.clone(), e.clone()));
                }
            }
        }
        for (member, source, rows) in fetch_members(jobs, opts, fetcher) {
            match rows {
                Ok(rows) => {
                    let via = &store.member_to_minted[&member];
                    for (p, o, inverse) in rows.iter().filter_map(row_triple) {
                        if inverse || o.as_iri().is_none() {
                            continue;
                        }
                        let Some(r) = make_relation(store, entity, p, o, &source, true, false) else {
                            continue;
                        };
                        if r.object_entity.as_ref() == Some(via) {
                            continue;
                        }
                        push(&mut out, r);
                    }
                }
                Err(error) => out.errors.push(ExpansionFailure { member, source, error }),
            }
        }
    }
    Ok(out)
}

fn term_key(t: &Term) -> String {
    match t {
        Term::Iri(i) => format!("<{i}>"),
        Term::BlankNode(b) => format!("_:{}", b.0),
        Term::Literal(l) => format!(
            "\"{}\"@{}^^{}",
            l.lexical(),
            l.language().unwrap_or(""),
            l.datatype().map(Iri::as_str).unwrap_or("")
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockItem {
    Text(String),
    Media { url: String, media_type: String },
    Link { label: String, url: String },
    Relation(Relation),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderedBlock {
    pub kind: BlockKind,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub size: BlockSize,
    pub items: Vec<BlockItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsightCard {
    pub entity: Iri,
    pub title: String,
    pub blocks: Vec<RenderedBlock>,
}

/// `image`, `audio`, `video` or `unknown`, guessed from the file extension.
pub fn media_type_hint(url: &str) -> &'static str {
    let path = url.split(['?', '#']).next().unwrap_or(url);
    let ext = path
        .rsplit_once('.')
        .filter(|(_, e)| !e.contains('/'))
        .map(|(_, e)| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "jpg" | "jpeg" | "png" | "gif" | "svg" | "webp" | "tif" | "tiff" | "bmp" => "image",
        "mp3" | "ogg" | "oga" | "wav" | "flac" | "m4a" | "mid" | "midi" => "audio",
        "mp4" | "webm" | "ogv" | "mov" | "mkv" => "video",
        _ => "unknown",
    }
}

fn ordered_vars<'a>(vars: &'a [String], row: &'a Row) -> impl Iterator<Item = &'a Term> + 'a {
    vars.iter().filter_map(move |v| row.get(v))
}

fn block_items(
    kind: BlockKind,
    vars: &[String],
    rows: &[Row],
    store: &ReconciledStore,
    entity: &Iri,
    source: &str,
) -> Vec<BlockItem> {
    let mut items = Vec::new();
    for row in rows {
        let first_literal = || ordered_vars(vars, row).find_map(|t| t.as_literal()).map(|l| l.lexical().to_string());
        let first_iri = || ordered_vars(vars, row).find_map(|t| t.as_iri()).cloned();
        let item = match kind {
            BlockKind::Text => first_literal().map(BlockItem::Text),
            BlockKind::Media => first_iri().map(|url| BlockItem::Media {
                media_type: media_type_hint(url.as_str()).to_string(),
                url: url.into_string(),
            }),
            BlockKind::Links => first_iri().map(|url| BlockItem::Link {
                label: first_literal().unwrap_or_else(|| url.to_string()),
                url: url.into_string(),
            }),
            BlockKind::Relations => row_triple(row)
                .and_then(|(p, o, inverse)| make_relation(store, entity, p, o, source, false, inverse))
                .map(BlockItem::Relation),
        };
        if let Some(item) = item {
            if !items.contains(&item) {
                items.push(item);
            }
        }
    }
    items
}

/// The template for an entity: the first one whose category the entity has.
pub fn template_for<'a>(cfg: &'a PortalConfig, store: &ReconciledStore, entity: &Iri) -> Result<&'a InsightTemplate, RelationsError> {
    let merged = store
        .entities
        .get(entity)
        .ok_or_else(|| RelationsError::UnknownEntity(entity.to_string()))?;
    cfg.insights
        .iter()
        .find(|t| merged.categories.contains(&t.category_id))
        .ok_or_else(|| RelationsError::NoTemplate(entity.to_string()))
}

/// Renders every block of `template` for `entity`.
///
/// Each block tries `(member, dataset)` pairs in priority order until one
/// returns rows. Pairs are restricted to datasets that extracted the member
/// when any such pair exists. Failed requests never fail the card.
pub fn assemble_insight(
    entity: &Iri,
    template: &InsightTemplate,
    store: &ReconciledStore,
    cfg: &PortalConfig,
    opts: &FetchOptions,
    fetcher: &dyn ResultsFetcher,
) -> Result<InsightCard, RelationsError> {
    let merged = store
        .entities
        .get(entity)
        .ok_or_else(|| RelationsError::UnknownEntity(entity.to_string()))?;
    if !merged.categories.contains(&template.category_id) {
        return Err(RelationsError::NoTemplate(entity.to_string()));
    }
    let priority = cfg.dataset_priorities();
    let members = merged.members_by_priority(&priority);
    let mut by_priority: Vec<_> = cfg.datasets.iter().collect();
    by_priority.sort_by(|a, b| a.priority.cmp(&b.priority).then_with(|| a.id.cmp(&b.id)));

    let mut blocks = Vec::with_capacity(template.blocks.len());
    for block in &template.blocks {
        let targets: Vec<(String, String)> = if block.target_dataset == "all" {
            by_priority.iter().map(|d| (d.id.clone(), d.endpoint.clone())).collect()
        } else {
            cfg.resolve_endpoint(&block.target_dataset).into_iter().collect()
        };
        let all_pairs: Vec<(&Iri, &(String, String))> =
            members.iter().flat_map(|m| targets.iter().map(move |t| (m, t))).collect();
        let own: Vec<_> = all_pairs
            .iter()
            .filter(|(m, (source, _))| merged.member_sources.get(*m).is_some_and(|s| s.contains(source)))
            .copied()
            .collect();
        let pairs = if own.is_empty() { all_pairs } else { own };

        let mut rendered = RenderedBlock {
            kind: block.kind,
            title: block.title.clone(),
            description: block.description.clone(),
            size: block.size,
            items: Vec::new(),
            source: None,
            error_note: None,
        };
        let mut failures = Vec::new();
        for (member, (source, endpoint)) in pairs {
            let subs = BTreeMap::from([(
                ENTITY_PLACEHOLDER.trim_matches(['{', '}']).to_string(),
                member.to_string(),
            )]);
            let query = match render_query(&block.query, &subs) {
                Ok(q) => q,
                Err(e) => {
                    failures.push(e.to_string());
                    break;
                }
            };
            match fetch_with_retry(endpoint, &query, opts, fetcher) {
                Ok(table) => {
                    let items = block_items(block.kind, &table.vars, &table.rows, store, entity, source);
                    if !items.is_empty() {
                        rendered.items = items;
                        rendered.source = Some(source.clone());
                        failures.clear();
                        break;
                    }
                }
                Err(e) => failures.push(format!("{source}: {e}")),
            }
        }
        if !failures.is_empty() {
            rendered.error_note = Some(failures.join("; "));
        }
        blocks.push(rendered);
    }
    Ok(InsightCard {
        entity: entity.clone(),
        title: merged.display_label.clone(),
        blocks,
    })
}
