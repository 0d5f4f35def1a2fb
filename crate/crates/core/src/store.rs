//! The reconciled store and its on-disk directory form:
//! `entities.ndjson`, `linkset.nt`, `graphs.nq` and `stats.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use crate::rdf::{parse_nquads_line, statement_line, Iri, Subject, Term};
use crate::reconcile::{minted_suffix, EntityGraph, Linkset, MergedEntity, ReconcileStats};

pub const ENTITIES_FILE: &str = "entities.ndjson";
pub const LINKSET_FILE: &str = "linkset.nt";
pub const GRAPHS_FILE: &str = "graphs.nq";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Clone, PartialEq)]
pub struct ReconciledStore {
    pub entities: BTreeMap<Iri, MergedEntity>,
    pub linkset: Linkset,
    pub graphs: Vec<EntityGraph>,
    pub member_to_minted: BTreeMap<Iri, Iri>,
    pub stats: ReconcileStats,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store i/o on {file}: {source}")]
    Io { file: String, source: io::Error },
    #[error("{file} line {line}: {reason}")]
    Malformed { file: String, line: usize, reason: String },
    #[error("store is inconsistent: {0}")]
    Inconsistent(String),
}

fn io_err(file: &str) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        file: file.to_string(),
        source,
    }
}

impl ReconciledStore {
    /// Finds an entity by the 16-hex suffix of its minted IRI.
    pub fn entity_by_suffix(&self, suffix: &str) -> Option<&MergedEntity> {
        let minted = Iri::parse(&format!("{}entity/{suffix}", self.stats.base_iri)).ok()?;
        self.entities.get(&minted)
    }

    pub fn suffix_of<'a>(&self, minted: &'a Iri) -> Option<&'a str> {
        minted_suffix(minted, &self.stats.base_iri)
    }

    /// Resolves a source IRI (or a minted IRI) to its merged entity.
    pub fn resolve(&self, iri: &Iri) -> Option<&MergedEntity> {
        self.member_to_minted
            .get(iri)
            .and_then(|m| self.entities.get(m))
            .or_else(|| self.entities.get(iri))
    }

    pub fn category_ids(&self) -> &[String] {
        &self.stats.categories
    }

    /// Writes the store directory. Output is a pure function of the store.
    pub fn save(&self, dir: &Path) -> Result<(), StoreError> {
        let d = dir.display().to_string();
        fs::create_dir_all(dir).map_err(io_err(&d))?;

        let mut entities = Vec::new();
        for e in self.entities.values() {
            serde_json::to_writer(&mut entities, e).expect("entity serializes");
            entities.push(b'\n');
        }
        fs::write(dir.join(ENTITIES_FILE), entities).map_err(io_err(ENTITIES_FILE))?;

        fs::write(dir.join(LINKSET_FILE), self.linkset.to_ntriples()).map_err(io_err(LINKSET_FILE))?;

        let mut quads: Vec<String> = self
            .graphs
            .iter()
            .flat_map(|g| {
                g.statements
                    .iter()
                    .map(|(s, source)| format!("{} # {source}", statement_line(s)))
            })
            .collect();
        quads.sort();
        let mut out = io::BufWriter::new(fs::File::create(dir.join(GRAPHS_FILE)).map_err(io_err(GRAPHS_FILE))?);
        for q in quads {
            writeln!(out, "{q}").map_err(io_err(GRAPHS_FILE))?;
        }
        out.flush().map_err(io_err(GRAPHS_FILE))?;

        let mut stats = serde_json::to_string_pretty(&self.stats).expect("stats serialize");
        stats.push('\n');
        fs::write(dir.join(STATS_FILE), stats).map_err(io_err(STATS_FILE))?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, StoreError> {
        let read = |name: &'static str| fs::read_to_string(dir.join(name)).map_err(io_err(name));

        let stats: ReconcileStats = serde_json::from_str(&read(STATS_FILE)?).map_err(|e| StoreError::Malformed {
            file: STATS_FILE.into(),
            line: e.line(),
            reason: e.to_string(),
        })?;

        let mut entities = BTreeMap::new();
        for (i, line) in read(ENTITIES_FILE)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: MergedEntity = serde_json::from_str(line).map_err(|e| StoreError::Malformed {
                file: ENTITIES_FILE.into(),
                line: i + 1,
                reason: e.to_string(),
            })?;
            entities.insert(e.minted.clone(), e);
        }

        let mut linkset = Linkset::default();
        let mut member_to_minted = BTreeMap::new();
        for (i, line) in read(LINKSET_FILE)?.lines().enumerate() {
            let malformed = |reason: String| StoreError::Malformed {
                file: LINKSET_FILE.into(),
                line: i + 1,
                reason,
            };
            let Some((stmt, _)) = parse_nquads_line(line).map_err(|e| malformed(e.to_string()))? else {
                continue;
            };
            let (Subject::Iri(minted), Term::Iri(member)) = (&stmt.subject, &stmt.object) else {
                return Err(malformed("linkset statements must link IRIs".into()));
            };
            if !entities.get(minted).is_some_and(|e: &MergedEntity| e.members.contains(member)) {
                return Err(StoreError::Inconsistent(format!(
                    "linkset links {member} to {minted}, which is not its entity"
                )));
            }
            if member_to_minted.insert(member.clone(), minted.clone()).is_some() {
                return Err(StoreError::Inconsistent(format!("{member} appears twice in the linkset")));
            }
            linkset.statements.push(stmt);
        }
        let expected: usize = entities.values().map(|e| e.members.len()).sum();
        if expected != member_to_minted.len() {
            return Err(StoreError::Inconsistent(format!(
                "linkset has {} members, entities list {expected}",
                member_to_minted.len()
            )));
        }

        let mut graphs: BTreeMap<Iri, EntityGraph> = BTreeMap::new();
        for (i, line) in read(GRAPHS_FILE)?.lines().enumerate() {
            let malformed = |reason: String| StoreError::Malformed {
                file: GRAPHS_FILE.into(),
                line: i + 1,
                reason,
            };
            let Some((stmt, source)) = parse_nquads_line(line).map_err(|e| malformed(e.to_string()))? else {
                continue;
            };
            let (Subject::Iri(entity), Some(graph_iri)) = (&stmt.subject, &stmt.graph) else {
                return Err(malformed("graph statements need an IRI subject and a graph".into()));
            };
            let g = graphs.entry(entity.clone()).or_insert_with(|| EntityGraph {
                graph_iri: graph_iri.clone(),
                entity: entity.clone(),
                statements: Vec::new(),
            });
            g.statements.push((stmt, source.unwrap_or_default()));
        }

        linkset.statements.sort();
        let graphs = graphs
            .into_values()
            .map(|mut g| {
                g.statements.sort();
                g
            })
            .collect();
        Ok(ReconciledStore {
            entities,
            linkset,
            graphs,
            member_to_minted,
            stats,
        })
    }
}
