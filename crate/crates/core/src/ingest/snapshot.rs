//! Snapshot files: one JSON header line followed by one record per line.
//!
//! The snapshot itself is a pure function of the harvested data. Run
//! timing (creation time, per-pair durations) goes to a sidecar file
//! `<snapshot>.run.json`, which loading treats as optional.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ExtractionRecord, IngestionSnapshot, SourceStat};

pub const SNAPSHOT_FORMAT: &str = "lodweaver-snapshot";
/// `major.minor`; readers reject any other major.
pub const SNAPSHOT_SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot i/o: {0}")]
    Io(#[from] io::Error),
    #[error("snapshot schema version {found} is not supported (expected major of {expected})")]
    SchemaVersionMismatch { found: String, expected: String },
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    schema_version: String,
    record_count: usize,
    source_stats: Vec<SourceStat>,
}

#[derive(Serialize, Deserialize)]
struct RunInfo {
    created_at: DateTime<Utc>,
    /// `"dataset/category"` → milliseconds.
    durations_ms: BTreeMap<String, u64>,
}

/// Path of the timing sidecar for a snapshot file.
pub fn run_info_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".run.json");
    path.with_file_name(name)
}

fn pair_key(s: &SourceStat) -> String {
    format!("{}/{}", s.dataset_id, s.category_id)
}

fn invalid(line: usize, reason: impl std::fmt::Display) -> SnapshotError {
    SnapshotError::Io(io::Error::new(
        io::ErrorKind::InvalidData,
        format!("line {line}: {reason}"),
    ))
}

fn major(version: &str) -> &str {
    version.split('.').next().unwrap_or(version)
}

pub fn save_snapshot(snapshot: &IngestionSnapshot, path: &Path) -> Result<(), SnapshotError> {
    let mut out = BufWriter::new(File::create(path)?);
    let header = Header {
        format: SNAPSHOT_FORMAT.into(),
        schema_version: SNAPSHOT_SCHEMA_VERSION.into(),
        record_count: snapshot.records.len(),
        source_stats: snapshot
            .source_stats
            .values()
            .map(|s| SourceStat {
                duration_ms: 0,
                ..s.clone()
            })
            .collect(),
    };
    serde_json::to_writer(&mut out, &header).map_err(io::Error::from)?;
    out.write_all(b"\n")?;
    for record in &snapshot.records {
        serde_json::to_writer(&mut out, record).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    let run = RunInfo {
        created_at: snapshot.created_at,
        durations_ms: snapshot.source_stats.values().map(|s| (pair_key(s), s.duration_ms)).collect(),
    };
    fs::write(run_info_path(path), serde_json::to_vec_pretty(&run).map_err(io::Error::from)?)?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<IngestionSnapshot, SnapshotError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| invalid(1, "empty file, no header"))??;
    let raw: serde_json::Value = serde_json::from_str(&first).map_err(|e| invalid(1, e))?;
    let found = raw
        .get("schema_version")
        .and_then(|v| v.as_str())
        .unwrap_or("")
        .to_string();
    if raw.get("format").and_then(|v| v.as_str()) != Some(SNAPSHOT_FORMAT)
        || major(&found) != major(SNAPSHOT_SCHEMA_VERSION)
    {
        return Err(SnapshotError::SchemaVersionMismatch {
            found,
            expected: SNAPSHOT_SCHEMA_VERSION.into(),
        });
    }
    let header: Header = serde_json::from_value(raw).map_err(|e| invalid(1, e))?;

    let mut records = Vec::with_capacity(header.record_count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ExtractionRecord = serde_json::from_str(&line).map_err(|e| invalid(i + 2, e))?;
        records.push(record);
    }
    if records.len() != header.record_count {
        return Err(invalid(
            records.len() + 1,
            format!("truncated: header announces {} records, found {}", header.record_count, records.len()),
        ));
    }
    let run: Option<RunInfo> = fs::read(run_info_path(path))
        .ok()
        .and_then(|bytes| serde_json::from_slice(&bytes).ok());
    let created_at = run.as_ref().map_or(DateTime::UNIX_EPOCH, |r| r.created_at);
    Ok(IngestionSnapshot {
        created_at,
        records,
        source_stats: header
            .source_stats
            .into_iter()
            .map(|mut s| {
                if let Some(ms) = run.as_ref().and_then(|r| r.durations_ms.get(&pair_key(&s))) {
                    s.duration_ms = *ms;
                }
                ((s.dataset_id.clone(), s.category_id.clone()), s)
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdf::{Iri, Literal, Term};
    use std::collections::BTreeMap;

    fn sample() -> IngestionSnapshot {
        let mut attributes = BTreeMap::new();
        attributes.insert(
            "genre".to_string(),
            vec![
                Term::Iri(Iri::parse("http://ex.org/rock").unwrap()),
                Term::Literal(Literal::lang("rock", "en")),
            ],
        );
        let stat = SourceStat {
            dataset_id: "d".into(),
            category_id: "c".into(),
            rows: 2,
            pages: 1,
            duration_ms: 5,
            error: None,
        };
        IngestionSnapshot {
            created_at: Utc::now(),
            records: vec![
                ExtractionRecord {
                    dataset_id: "d".into(),
                    category_id: "c".into(),
                    entity: Iri::parse("http://ex.org/a").unwrap(),
                    label: "A \"quoted\"\nlabel".into(),
                    attributes,
                },
                ExtractionRecord {
                    dataset_id: "d".into(),
                    category_id: "c".into(),
                    entity: Iri::parse("http://ex.org/b").unwrap(),
                    label: "Béla".into(),
                    attributes: BTreeMap::new(),
                },
            ],
            source_stats: [(("d".to_string(), "c".to_string()), stat)].into_iter().collect(),
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ndjson");
        let s = sample();
        save_snapshot(&s, &path).unwrap();
        assert_eq!(load_snapshot(&path).unwrap(), s);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ndjson");
        save_snapshot(&sample(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(2).collect();
        std::fs::write(&path, cut.join("\n")).unwrap();
        assert!(matches!(load_snapshot(&path), Err(SnapshotError::Io(_))));
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(load_snapshot(&path).is_err());
        std::fs::write(&path, "").unwrap();
        assert!(load_snapshot(&path).is_err());
    }

    #[test]
    fn future_major_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ndjson");
        save_snapshot(&sample(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replacen("\"1.0\"", "\"2.0\"", 1);
        std::fs::write(&path, text).unwrap();
        assert!(matches!(
            load_snapshot(&path),
            Err(SnapshotError::SchemaVersionMismatch { .. })
        ));
    }

    #[test]
    fn timing_does_not_change_snapshot_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.ndjson"), dir.path().join("b.ndjson"));
        let first = sample();
        let mut second = sample();
        second.created_at = DateTime::UNIX_EPOCH;
        for s in second.source_stats.values_mut() {
            s.duration_ms = 999;
        }
        save_snapshot(&first, &a).unwrap();
        save_snapshot(&second, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn missing_sidecar_still_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.ndjson");
        save_snapshot(&sample(), &path).unwrap();
        std::fs::remove_file(run_info_path(&path)).unwrap();
        let back = load_snapshot(&path).unwrap();
        assert_eq!(back.records, sample().records);
        assert_eq!(back.created_at, DateTime::UNIX_EPOCH);
    }
}
