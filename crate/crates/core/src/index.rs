//! Per-category autocomplete indexes over merged entities.
//!
//! Every label of an entity contributes its normalized full form and each
//! of its whitespace-delimited tokens as keys. Keys live in a sorted map so
//! a prefix query is a single range scan; an entity matched by several keys
//! is reported once, under its best match class.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::rdf::Iri;
use crate::reconcile::MergedEntity;

pub const INDEX_FORMAT: &str = "lodweaver-index";
pub const INDEX_FORMAT_VERSION: u32 = 1;
pub const INDEX_MANIFEST: &str = "manifest.json";

/// NFKD, strip combining marks, case-fold, collapse whitespace runs, trim.
/// Punctuation is kept.
pub fn normalize_label(text: &str) -> String {
    let stripped: String = text.nfkd().filter(|c| !is_combining_mark(*c)).collect();
    let folded = caseless::default_case_fold_str(&stripped);
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchClass {
    LabelPrefix,
    TokenPrefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub minted: Iri,
    pub display_label: String,
    /// Every key of the entry: full labels and their tokens.
    pub normalized_keys: BTreeSet<String>,
    pub label_keys: BTreeSet<String>,
    pub category_id: String,
    pub source_count: usize,
    pub sources: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suggestion {
    pub minted: Iri,
    pub display_label: String,
    pub category_id: String,
    pub sources: BTreeSet<String>,
    pub match_class: MatchClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuggestError {
    #[error("query is empty after normalization")]
    EmptyQuery,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CategoryIndex {
    pub category_id: String,
    pub generation: u64,
    entries: Vec<IndexEntry>,
    keys: BTreeMap<String, Vec<(usize, MatchClass)>>,
}

impl CategoryIndex {
    fn from_entries(category_id: String, generation: u64, mut entries: Vec<IndexEntry>) -> Self {
        entries.sort_by(|a, b| a.minted.cmp(&b.minted));
        let mut keys: BTreeMap<String, Vec<(usize, MatchClass)>> = BTreeMap::new();
        for (i, e) in entries.iter().enumerate() {
            for key in &e.normalized_keys {
                let class = if e.label_keys.contains(key) {
                    MatchClass::LabelPrefix
                } else {
                    MatchClass::TokenPrefix
                };
                keys.entry(key.clone()).or_default().push((i, class));
            }
        }
        CategoryIndex {
            category_id,
            generation,
            entries,
            keys,
        }
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn key_count(&self) -> usize {
        self.keys.len()
    }

    pub fn suggest(&self, q: &str, limit: usize) -> Result<Vec<Suggestion>, SuggestError> {
        let prefix = normalize_label(q);
        if prefix.is_empty() {
            return Err(SuggestError::EmptyQuery);
        }
        let mut best: HashMap<usize, MatchClass> = HashMap::new();
        for (key, slots) in self.keys.range::<str, _>((std::ops::Bound::Included(prefix.as_str()), std::ops::Bound::Unbounded)) {
            if !key.starts_with(&prefix) {
                break;
            }
            for &(i, class) in slots {
                best.entry(i)
                    .and_modify(|c| *c = (*c).min(class))
                    .or_insert(class);
            }
        }
        let mut hits: Vec<(usize, MatchClass)> = best.into_iter().collect();
        hits.sort_by(|&(a, ca), &(b, cb)| self.rank(a, ca, b, cb));
        hits.truncate(limit.max(1));
        Ok(hits
            .into_iter()
            .map(|(i, class)| {
                let e = &self.entries[i];
                Suggestion {
                    minted: e.minted.clone(),
                    display_label: e.display_label.clone(),
                    category_id: e.category_id.clone(),
                    sources: e.sources.clone(),
                    match_class: class,
                }
            })
            .collect())
    }

    fn rank(&self, a: usize, ca: MatchClass, b: usize, cb: MatchClass) -> Ordering {
        let (ea, eb) = (&self.entries[a], &self.entries[b]);
        ca.cmp(&cb)
            .then_with(|| eb.source_count.cmp(&ea.source_count))
            .then_with(|| ea.display_label.chars().count().cmp(&eb.display_label.chars().count()))
            .then_with(|| ea.display_label.as_bytes().cmp(eb.display_label.as_bytes()))
            .then_with(|| ea.minted.cmp(&eb.minted))
    }
}

fn entry_for(entity: &MergedEntity, category_id: &str) -> IndexEntry {
    let mut keys = BTreeSet::new();
    let mut label_keys = BTreeSet::new();
    for label in &entity.all_labels {
        let full = normalize_label(label);
        if full.is_empty() {
            continue;
        }
        for token in full.split(' ') {
            keys.insert(token.to_string());
        }
        label_keys.insert(full.clone());
        keys.insert(full);
    }
    IndexEntry {
        minted: entity.minted.clone(),
        display_label: entity.display_label.clone(),
        normalized_keys: keys,
        label_keys,
        category_id: category_id.to_string(),
        source_count: entity.sources.len().max(1),
        sources: entity.sources.clone(),
    }
}

/// One index per configured category; every entity lands in the index of
/// each of its categories.
pub fn build_indexes<'a, I>(entities: I, category_ids: &[String], generation: u64) -> BTreeMap<String, CategoryIndex>
where
    I: IntoIterator<Item = &'a MergedEntity>,
{
    let mut buckets: BTreeMap<String, Vec<IndexEntry>> =
        category_ids.iter().map(|c| (c.clone(), Vec::new())).collect();
    for entity in entities {
        for category in &entity.categories {
            if let Some(bucket) = buckets.get_mut(category) {
                bucket.push(entry_for(entity, category));
            }
        }
    }
    buckets
        .into_iter()
        .map(|(c, entries)| (c.clone(), CategoryIndex::from_entries(c, generation, entries)))
        .collect()
}

#[derive(Debug, Error)]
pub enum IndexIoError {
    #[error("index i/o on {file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("{file}: {reason}")]
    Malformed { file: String, reason: String },
    #[error("index format version {found} is not supported (expected {INDEX_FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    generation: u64,
    categories: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CategoryFile {
    version: u32,
    category_id: String,
    generation: u64,
    entries: Vec<IndexEntry>,
    /// `(key, [(entry position, match class)])`, sorted by key.
    keys: Vec<(String, Vec<(usize, MatchClass)>)>,
}

fn index_file_name(category: &str) -> String {
    format!("{category}.index.json")
}

/// Writes one file per category plus a manifest.
pub fn save_indexes(indexes: &BTreeMap<String, CategoryIndex>, dir: &Path) -> Result<(), IndexIoError> {
    let io = |file: String| move |source| IndexIoError::Io { file, source };
    fs::create_dir_all(dir).map_err(io(dir.display().to_string()))?;
    let generation = indexes.values().map(|i| i.generation).max().unwrap_or(1);
    for (category, idx) in indexes {
        let file = CategoryFile {
            version: INDEX_FORMAT_VERSION,
            category_id: category.clone(),
            generation: idx.generation,
            entries: idx.entries.clone(),
            keys: idx.keys.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        let name = index_file_name(category);
        let mut text = serde_json::to_string(&file).expect("index serializes");
        text.push('\n');
        fs::write(dir.join(&name), text).map_err(io(name))?;
    }
    let manifest = Manifest {
        format: INDEX_FORMAT.into(),
        version: INDEX_FORMAT_VERSION,
        generation,
        categories: indexes.keys().cloned().collect(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(dir.join(INDEX_MANIFEST), text).map_err(io(INDEX_MANIFEST.into()))
}

pub fn load_indexes(dir: &Path) -> Result<(u64, BTreeMap<String, CategoryIndex>), IndexIoError> {
    let read = |name: &str| {
        fs::read_to_string(dir.join(name)).map_err(|source| IndexIoError::Io {
            file: name.to_string(),
            source,
        })
    };
    let manifest: Manifest = serde_json::from_str(&read(INDEX_MANIFEST)?).map_err(|e| IndexIoError::Malformed {
        file: INDEX_MANIFEST.into(),
        reason: e.to_string(),
    })?;
    if manifest.format != INDEX_FORMAT || manifest.version != INDEX_FORMAT_VERSION {
        return Err(IndexIoError::VersionMismatch {
            found: manifest.version,
        });
    }
    let mut out = BTreeMap::new();
    for category in manifest.categories {
        let name = index_file_name(&category);
        let file: CategoryFile = serde_json::from_str(&read(&name)?).map_err(|e| IndexIoError::Malformed {
            file: name.clone(),
            reason: e.to_string(),
        })?;
        if file.version != INDEX_FORMAT_VERSION {
            return Err(IndexIoError::VersionMismatch { found: file.version });
        }
        let n = file.entries.len();
        if file.keys.iter().flat_map(|(_, v)| v).any(|(i, _)| *i >= n) {
            return Err(IndexIoError::Malformed {
                file: name,
                reason: "key points past the entry list".into(),
            });
        }
        out.insert(
            category.clone(),
            CategoryIndex {
                category_id: file.category_id,
                generation: file.generation,
                entries: file.entries,
                keys: file.keys.into_iter().collect(),
            },
        );
    }
    Ok((manifest.generation, out))
}
