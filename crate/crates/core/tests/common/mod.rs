#![allow(dead_code)]

pub mod web;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use lodweaver::config::load_portal_config;
use lodweaver::fixture::{CannedFetcher, FixtureData};
use lodweaver::ingest::{ingest, FetchOptions, IngestionSnapshot};
use lodweaver::reconcile::{reconcile, ReconcileOptions};
use lodweaver::store::ReconciledStore;
use lodweaver::PortalConfig;

pub const WD: &str = "http://www.wikidata.org/entity/";
pub const WDT: &str = "http://www.wikidata.org/prop/direct/";
pub const DBR: &str = "http://dbpedia.org/resource/";
pub const DBO: &str = "http://dbpedia.org/ontology/";
pub const POL: &str = "https://data.example.org/polifonia/";

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config_dir() -> PathBuf {
    repo_root().join("fixtures/music/config")
}

pub fn endpoints_dir() -> PathBuf {
    repo_root().join("fixtures/music/endpoints")
}

pub fn results_dir() -> PathBuf {
    repo_root().join("fixtures/results")
}

pub fn config() -> PortalConfig {
    load_portal_config(&config_dir()).expect("fixture config loads")
}

pub fn fixture_data() -> FixtureData {
    FixtureData::load(&endpoints_dir()).expect("fixture endpoints load")
}

pub fn fetcher() -> Arc<CannedFetcher> {
    Arc::new(CannedFetcher::new(Arc::new(fixture_data())))
}

/// Retries without real waiting.
pub fn fast_opts() -> FetchOptions {
    FetchOptions {
        backoff_base: 0.0,
        timeout: Duration::from_secs(5),
        ..FetchOptions::default()
    }
}

pub fn iri(s: &str) -> lodweaver::Iri {
    lodweaver::Iri::parse(s).unwrap()
}

pub struct Pipeline {
    pub cfg: PortalConfig,
    pub snapshot: IngestionSnapshot,
    pub store: ReconciledStore,
}

pub fn run_pipeline_with(fetcher: &CannedFetcher) -> Pipeline {
    let cfg = config();
    let opts = fast_opts();
    let snapshot = ingest(&cfg, &opts, fetcher).expect("ingest");
    let store = reconcile(&snapshot, &cfg, &opts, fetcher, ReconcileOptions::default()).expect("reconcile");
    Pipeline { cfg, snapshot, store }
}

pub fn run_pipeline() -> Pipeline {
    run_pipeline_with(&fetcher())
}

pub fn entity_of<'a>(p: &'a Pipeline, member: &str) -> &'a lodweaver::MergedEntity {
    p.store.resolve(&iri(member)).expect("member resolves")
}

/// Parses SPARQL JSON results with sparesults and converts the terms into
/// this crate's model.
pub fn oracle_parse(bytes: &[u8]) -> Result<lodweaver::rdf::BindingTable, String> {
    use lodweaver::rdf::{BindingTable, BlankNode, Literal, Row, Term};
    use sparesults::{QueryResultsFormat, QueryResultsParser, SliceQueryResultsParserOutput};

    let out = QueryResultsParser::from_format(QueryResultsFormat::Json)
        .for_slice(bytes)
        .map_err(|e| e.to_string())?;
    let SliceQueryResultsParserOutput::Solutions(solutions) = out else {
        return Err("boolean result".into());
    };
    let vars: Vec<String> = solutions.variables().iter().map(|v| v.as_str().to_string()).collect();
    let mut rows = Vec::new();
    for solution in solutions {
        let solution = solution.map_err(|e| e.to_string())?;
        let mut row = Row::new();
        for (var, term) in solution.iter() {
            let t = match term {
                oxrdf::Term::NamedNode(n) => Term::Iri(iri(n.as_str())),
                oxrdf::Term::BlankNode(b) => Term::BlankNode(BlankNode(b.as_str().to_string())),
                oxrdf::Term::Literal(l) => Term::Literal(match l.language() {
                    Some(lang) => Literal::lang(l.value(), lang),
                    None => Literal::typed(l.value(), iri(l.datatype().as_str())),
                }),
                #[allow(unreachable_patterns)]
                other => return Err(format!("unsupported term {other}")),
            };
            row.insert(var.as_str().to_string(), t);
        }
        rows.push(row);
    }
    Ok(BindingTable { vars, rows })
}

/// Every results document shipped with the fixtures: the conformance
/// corpus plus all canned endpoint answers.
pub fn results_corpus() -> Vec<(String, Vec<u8>)> {
    let mut docs = Vec::new();
    let mut paths: Vec<_> = std::fs::read_dir(results_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "srj"))
        .collect();
    paths.sort();
    for p in paths {
        docs.push((p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()));
    }
    let mut sources: Vec<_> = std::fs::read_dir(endpoints_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    sources.sort();
    for src in sources {
        let canned: serde_json::Value =
            serde_json::from_slice(&std::fs::read(src.join("canned.json")).unwrap()).unwrap();
        for (i, entry) in canned.as_array().unwrap().iter().enumerate() {
            let name = format!("{}#{i}", src.file_name().unwrap().to_string_lossy());
            docs.push((name, serde_json::to_vec(&entry["results"]).unwrap()));
        }
    }
    docs
}

/// Reachability by Warshall over bit rows, seeded reflexive and symmetric.
pub fn warshall_components(n: usize, edges: &[(usize, usize)]) -> BTreeSet<BTreeSet<usize>> {
    let words = n.div_ceil(64);
    let mut rows = vec![vec![0u64; words]; n];
    let set = |rows: &mut Vec<Vec<u64>>, i: usize, j: usize| rows[i][j / 64] |= 1 << (j % 64);
    for i in 0..n {
        set(&mut rows, i, i);
    }
    for &(a, b) in edges {
        set(&mut rows, a, b);
        set(&mut rows, b, a);
    }
    for k in 0..n {
        let row_k = rows[k].clone();
        for row in rows.iter_mut() {
            if row[k / 64] >> (k % 64) & 1 == 1 {
                for (w, kw) in row.iter_mut().zip(&row_k) {
                    *w |= kw;
                }
            }
        }
    }
    rows.iter()
        .map(|r| (0..n).filter(|j| r[j / 64] >> (j % 64) & 1 == 1).collect())
        .collect()
}
