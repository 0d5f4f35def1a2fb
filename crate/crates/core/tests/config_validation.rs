mod common;

use std::path::Path;

use common::*;
use lodweaver::config::{load_portal_config, parse_portal_config, validate_config, ConfigError, Severity};
use serde_json::{json, Value};
use tempfile::TempDir;

fn copy_config() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(config_dir()).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    dir
}

fn edit(dir: &Path, file: &str, f: impl FnOnce(&mut Value)) {
    let path = dir.join(file);
    let mut v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(&path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
}

fn error_messages(dir: &Path) -> Vec<String> {
    let cfg = parse_portal_config(dir).unwrap();
    validate_config(&cfg).errors().map(|f| f.message.clone()).collect()
}

#[test]
fn fixture_config_is_valid() {
    let cfg = config();
    let report = validate_config(&cfg);
    assert!(!report.has_errors(), "{report:?}");
    assert_eq!(cfg.base_iri, "https://lod.example.org/music/");
    assert_eq!(cfg.datasets.len(), 3);
    assert_eq!(cfg.category_ids(), ["genres", "artists", "places", "music", "instruments"]);
    let warnings: Vec<_> = report.findings.iter().filter(|f| f.severity == Severity::Warning).collect();
    assert!(warnings.iter().all(|w| w.message.contains("pair skipped")));
}

#[test]
fn written_config_reloads_identically() {
    let cfg = config();
    let dir = tempfile::tempdir().unwrap();
    cfg.write_to_dir(dir.path()).unwrap();
    assert_eq!(load_portal_config(dir.path()).unwrap(), cfg);
}

#[test]
fn missing_file() {
    let dir = copy_config();
    std::fs::remove_file(dir.path().join("insights.json")).unwrap();
    assert!(matches!(load_portal_config(dir.path()), Err(ConfigError::MissingFile(f)) if f == "insights.json"));
}

#[test]
fn malformed_json_reports_position() {
    let dir = copy_config();
    std::fs::write(dir.path().join("categories.json"), "{\n  \"categories\": [\n    {,\n").unwrap();
    let err = load_portal_config(dir.path()).unwrap_err();
    let ConfigError::ParseError { file, position, .. } = &err else { panic!("{err:?}") };
    assert_eq!(file, "categories.json");
    assert!(position.starts_with("line 3"), "{position}");
}

#[test]
fn duplicate_dataset_id() {
    let dir = copy_config();
    edit(dir.path(), "datasets.json", |v| {
        let first = v["datasets"][0].clone();
        v["datasets"].as_array_mut().unwrap().push(first);
    });
    assert!(error_messages(dir.path()).iter().any(|m| m.contains("duplicate dataset id `wikidata`")));
    assert!(load_portal_config(dir.path()).is_err());
}

#[test]
fn unknown_dataset_reference() {
    let dir = copy_config();
    edit(dir.path(), "indexes.json", |v| {
        v["indexes"][0]["expansion_endpoints"] = json!(["wikidata", "musicbrainz"]);
    });
    let err = load_portal_config(dir.path()).unwrap_err();
    let ConfigError::InvalidReference { file, value, .. } = &err else { panic!("{err:?}") };
    assert_eq!(file, "indexes.json");
    assert_eq!(value, "musicbrainz");
}

#[test]
fn unknown_category_in_highlights() {
    let dir = copy_config();
    edit(dir.path(), "highlights.json", |v| {
        v["highlights"][0]["category_id"] = json!("painters");
    });
    let err = load_portal_config(dir.path()).unwrap_err();
    assert!(matches!(err, ConfigError::InvalidReference { ref value, .. } if value == "painters"), "{err:?}");
}

#[test]
fn bad_values() {
    let dir = copy_config();
    edit(dir.path(), "datasets.json", |v| {
        v["base_iri"] = json!("https://lod.example.org/music");
        v["datasets"][1]["endpoint"] = json!("ftp://example.org/sparql");
    });
    edit(dir.path(), "categories.json", |v| {
        v["categories"][0]["color"] = json!("red");
    });
    let errors = error_messages(dir.path());
    assert!(errors.iter().any(|m| m.contains("must end with `/`")), "{errors:?}");
    assert!(errors.iter().any(|m| m.contains("not an absolute HTTP(S) URL")), "{errors:?}");
    assert!(errors.iter().any(|m| m.contains("is not #RRGGBB")), "{errors:?}");
}

#[test]
fn extraction_query_must_project_entity_and_label() {
    let dir = copy_config();
    edit(dir.path(), "categories.json", |v| {
        v["categories"][0]["extraction_queries"]["wikidata"] = json!("SELECT ?entity WHERE { ?entity ?p ?o }");
    });
    let errors = error_messages(dir.path());
    assert!(errors.iter().any(|m| m.contains("does not project ?label")), "{errors:?}");
}

#[test]
fn fragment_carousel_link_is_rejected() {
    let dir = copy_config();
    edit(dir.path(), "highlights.json", |v| {
        v["carousel"][0]["link"] = json!("#artists");
    });
    assert!(error_messages(dir.path()).iter().any(|m| m.contains("is not a URL")));
}

#[test]
fn unknown_dataset_keys_fold_into_metadata() {
    let dir = copy_config();
    edit(dir.path(), "datasets.json", |v| {
        v["datasets"][0]["maintainer"] = json!("someone");
    });
    let cfg = load_portal_config(dir.path()).unwrap();
    assert_eq!(cfg.datasets[0].metadata["maintainer"], "someone");
}
