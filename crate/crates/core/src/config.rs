//! The five declarative configuration files that drive ingestion,
//! reconciliation, indexing and the portal UI.
//!
//! A configuration directory holds `datasets.json`, `categories.json`,
//! `indexes.json`, `highlights.json` (which also carries the intro and the
//! carousel) and `insights.json`. Unknown keys are kept in each object's
//! `extra` map (or `metadata`, for datasets) and written back unchanged.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::rdf::{Iri, OWL_SAME_AS, SKOS_EXACT_MATCH};

pub const DATASETS_FILE: &str = "datasets.json";
pub const CATEGORIES_FILE: &str = "categories.json";
pub const INDEXES_FILE: &str = "indexes.json";
pub const HIGHLIGHTS_FILE: &str = "highlights.json";
pub const INSIGHTS_FILE: &str = "insights.json";

/// Placeholder substituted with the subject IRI in insight queries.
pub const ENTITY_PLACEHOLDER: &str = "{ENTITY}";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("missing configuration file {0}")]
    MissingFile(String),
    #[error("cannot parse {file} at {position}: {reason}")]
    ParseError {
        file: String,
        position: String,
        reason: String,
    },
    #[error("{file}: field `{field}` references unknown value `{value}`")]
    InvalidReference {
        file: String,
        field: String,
        value: String,
    },
    #[error("configuration is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("i/o error on {file}: {reason}")]
    Io { file: String, reason: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RenderError {
    #[error("placeholder {{{0}}} has no substitution")]
    UnboundPlaceholder(String),
    #[error("substitution value `{0}` is not a valid IRI")]
    InvalidIri(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub id: String,
    pub label: String,
    pub endpoint: String,
    #[serde(default)]
    pub priority: i64,
    /// License, homepage, description, an optional `bearer_token`, plus any
    /// unrecognised keys found on the dataset object.
    #[serde(default)]
    pub metadata: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDef {
    pub id: String,
    pub label: String,
    pub color: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sound_url: Option<String>,
    /// dataset id -> SPARQL SELECT projecting `?entity` and `?label`.
    #[serde(default)]
    pub extraction_queries: BTreeMap<String, String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

fn default_equivalence_predicates() -> Vec<Iri> {
    vec![
        Iri::new_unchecked(OWL_SAME_AS),
        Iri::new_unchecked(SKOS_EXACT_MATCH),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexDef {
    pub category_id: String,
    #[serde(default = "default_equivalence_predicates")]
    pub equivalence_predicates: Vec<Iri>,
    /// Dataset ids or absolute endpoint URLs.
    #[serde(default)]
    pub expansion_endpoints: Vec<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightDef {
    pub category_id: String,
    pub entity_iri: Iri,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linked_to: Option<Iri>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarouselBox {
    pub title: String,
    pub description: String,
    pub link: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Intro {
    pub title: String,
    pub message: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Text,
    Media,
    Links,
    Relations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockSize {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightBlock {
    pub kind: BlockKind,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub size: BlockSize,
    pub query: String,
    /// Dataset id, or `"all"`.
    pub target_dataset: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightTemplate {
    pub category_id: String,
    pub blocks: Vec<InsightBlock>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortalConfig {
    pub base_iri: String,
    pub datasets: Vec<DatasetDescriptor>,
    pub categories: Vec<CategoryDef>,
    pub indexes: Vec<IndexDef>,
    pub intro: Intro,
    pub carousel: Vec<CarouselBox>,
    pub highlights: Vec<HighlightDef>,
    pub insights: Vec<InsightTemplate>,
}

// On-disk wrappers, one per file.

#[derive(Serialize, Deserialize)]
struct DatasetsFile {
    base_iri: String,
    datasets: Vec<RawDataset>,
}

/// Dataset as written on disk: unknown top-level keys fold into `metadata`.
#[derive(Serialize, Deserialize)]
struct RawDataset {
    id: String,
    label: String,
    endpoint: String,
    #[serde(default)]
    priority: i64,
    #[serde(default)]
    metadata: BTreeMap<String, Value>,
    #[serde(flatten)]
    extra: BTreeMap<String, Value>,
}

#[derive(Serialize, Deserialize)]
struct CategoriesFile {
    categories: Vec<CategoryDef>,
}

#[derive(Serialize, Deserialize)]
struct IndexesFile {
    indexes: Vec<IndexDef>,
}

#[derive(Serialize, Deserialize)]
struct HighlightsFile {
    #[serde(default)]
    intro: Intro,
    #[serde(default)]
    carousel: Vec<CarouselBox>,
    #[serde(default)]
    highlights: Vec<HighlightDef>,
}

#[derive(Serialize, Deserialize)]
struct InsightsFile {
    templates: Vec<InsightTemplate>,
}

impl PortalConfig {
    pub fn dataset(&self, id: &str) -> Option<&DatasetDescriptor> {
        self.datasets.iter().find(|d| d.id == id)
    }

    pub fn category(&self, id: &str) -> Option<&CategoryDef> {
        self.categories.iter().find(|c| c.id == id)
    }

    pub fn index_def(&self, category_id: &str) -> Option<&IndexDef> {
        self.indexes.iter().find(|i| i.category_id == category_id)
    }

    pub fn category_ids(&self) -> Vec<String> {
        self.categories.iter().map(|c| c.id.clone()).collect()
    }

    pub fn dataset_priorities(&self) -> BTreeMap<String, i64> {
        self.datasets
            .iter()
            .map(|d| (d.id.clone(), d.priority))
            .collect()
    }

    /// Resolves a dataset id or a literal endpoint URL to `(source, endpoint)`.
    pub fn resolve_endpoint(&self, name: &str) -> Option<(String, String)> {
        if let Some(d) = self.dataset(name) {
            return Some((d.id.clone(), d.endpoint.clone()));
        }
        if is_absolute_http_url(name) {
            return Some((name.to_string(), name.to_string()));
        }
        None
    }

    /// The union of expansion endpoints configured for any of `categories`,
    /// in first-seen order, deduplicated.
    pub fn expansion_endpoints<'a, I>(&self, categories: I) -> Vec<(String, String)>
    where
        I: IntoIterator<Item = &'a String>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for category in categories {
            let Some(def) = self.index_def(category) else {
                continue;
            };
            for name in &def.expansion_endpoints {
                if let Some(resolved) = self.resolve_endpoint(name) {
                    if seen.insert(resolved.clone()) {
                        out.push(resolved);
                    }
                }
            }
        }
        out
    }

    /// Writes the five files into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), ConfigError> {
        fs::create_dir_all(dir).map_err(|e| ConfigError::Io {
            file: dir.display().to_string(),
            reason: e.to_string(),
        })?;
        let datasets = DatasetsFile {
            base_iri: self.base_iri.clone(),
            datasets: self
                .datasets
                .iter()
                .map(|d| RawDataset {
                    id: d.id.clone(),
                    label: d.label.clone(),
                    endpoint: d.endpoint.clone(),
                    priority: d.priority,
                    metadata: d.metadata.clone(),
                    extra: BTreeMap::new(),
                })
                .collect(),
        };
        write_json(dir, DATASETS_FILE, &datasets)?;
        write_json(
            dir,
            CATEGORIES_FILE,
            &CategoriesFile {
                categories: self.categories.clone(),
            },
        )?;
        write_json(
            dir,
            INDEXES_FILE,
            &IndexesFile {
                indexes: self.indexes.clone(),
            },
        )?;
        write_json(
            dir,
            HIGHLIGHTS_FILE,
            &HighlightsFile {
                intro: self.intro.clone(),
                carousel: self.carousel.clone(),
                highlights: self.highlights.clone(),
            },
        )?;
        write_json(
            dir,
            INSIGHTS_FILE,
            &InsightsFile {
                templates: self.insights.clone(),
            },
        )
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), ConfigError> {
    let mut text = serde_json::to_string_pretty(value).expect("config serializes");
    text.push('\n');
    fs::write(dir.join(name), text).map_err(|e| ConfigError::Io {
        file: name.to_string(),
        reason: e.to_string(),
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(dir: &Path, name: &str) -> Result<T, ConfigError> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(ConfigError::MissingFile(name.to_string()));
    }
    let text = fs::read_to_string(&path).map_err(|e| ConfigError::Io {
        file: name.to_string(),
        reason: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::ParseError {
        file: name.to_string(),
        position: format!("line {} column {}", e.line(), e.column()),
        reason: e.to_string(),
    })
}

/// Parses the five files without checking cross-file invariants.
pub fn parse_portal_config(root_dir: &Path) -> Result<PortalConfig, ConfigError> {
    let datasets: DatasetsFile = read_json(root_dir, DATASETS_FILE)?;
    let categories: CategoriesFile = read_json(root_dir, CATEGORIES_FILE)?;
    let indexes: IndexesFile = read_json(root_dir, INDEXES_FILE)?;
    let highlights: HighlightsFile = read_json(root_dir, HIGHLIGHTS_FILE)?;
    let insights: InsightsFile = read_json(root_dir, INSIGHTS_FILE)?;

    Ok(PortalConfig {
        base_iri: datasets.base_iri,
        datasets: datasets
            .datasets
            .into_iter()
            .map(|raw| {
                let mut metadata = raw.metadata;
                metadata.extend(raw.extra);
                DatasetDescriptor {
                    id: raw.id,
                    label: raw.label,
                    endpoint: raw.endpoint,
                    priority: raw.priority,
                    metadata,
                }
            })
            .collect(),
        categories: categories.categories,
        indexes: indexes.indexes,
        intro: highlights.intro,
        carousel: highlights.carousel,
        highlights: highlights.highlights,
        insights: insights.templates,
    })
}

/// Parses and validates a configuration directory.
pub fn load_portal_config(root_dir: &Path) -> Result<PortalConfig, ConfigError> {
    let cfg = parse_portal_config(root_dir)?;
    let report = validate_config(&cfg);
    if let Some(finding) = report.findings.iter().find_map(|f| f.reference.clone()) {
        return Err(ConfigError::InvalidReference {
            file: finding.file,
            field: finding.field,
            value: finding.value,
        });
    }
    if report.has_errors() {
        return Err(ConfigError::Invalid(report));
    }
    Ok(cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DanglingReference {
    pub file: String,
    pub field: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub file: String,
    pub message: String,
    #[serde(skip)]
    pub reference: Option<DanglingReference>,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let severity = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{severity}: {}: {}", self.file, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
    }

    fn error(&mut self, file: &str, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            file: file.to_string(),
            message: message.into(),
            reference: None,
        });
    }

    fn warning(&mut self, file: &str, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            file: file.to_string(),
            message: message.into(),
            reference: None,
        });
    }

    fn dangling(&mut self, file: &str, field: &str, value: &str, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            file: file.to_string(),
            message: message.into(),
            reference: Some(DanglingReference {
                file: file.to_string(),
                field: field.to_string(),
                value: value.to_string(),
            }),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

fn color_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^#[0-9A-Fa-f]{6}$").unwrap())
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([A-Z][A-Z0-9_]*)\}").unwrap())
}

fn token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$").unwrap())
}

pub(crate) fn is_absolute_http_url(text: &str) -> bool {
    url::Url::parse(text)
        .map(|u| matches!(u.scheme(), "http" | "https") && u.has_host())
        .unwrap_or(false)
}

fn is_url(text: &str) -> bool {
    url::Url::parse(text).is_ok()
}

/// Whether the projection of a SELECT mentions `var` (or is `SELECT *`).
fn projects(query: &str, var: &str) -> bool {
    let upper = query.to_ascii_uppercase();
    let Some(select) = upper.find("SELECT") else {
        return false;
    };
    let rest = &query[select + "SELECT".len()..];
    let end = rest
        .to_ascii_uppercase()
        .find("WHERE")
        .or_else(|| rest.find('{'))
        .unwrap_or(rest.len());
    let projection = &rest[..end];
    if projection.trim_start().starts_with('*')
        || projection.trim_start().to_ascii_uppercase().starts_with("DISTINCT *")
    {
        return true;
    }
    projection
        .split(|c: char| !(c.is_alphanumeric() || c == '?' || c == '$' || c == '_'))
        .any(|tok| tok == format!("?{var}") || tok == format!("${var}"))
}

/// Checks every typed invariant. An empty report means the config is valid.
pub fn validate_config(cfg: &PortalConfig) -> ValidationReport {
    let mut report = ValidationReport::default();

    if !cfg.base_iri.ends_with('/') {
        report.error(DATASETS_FILE, format!("base_iri `{}` must end with `/`", cfg.base_iri));
    }
    if Iri::parse(&cfg.base_iri).is_err() {
        report.error(DATASETS_FILE, format!("base_iri `{}` is not an IRI", cfg.base_iri));
    }

    let mut dataset_ids = BTreeSet::new();
    for d in &cfg.datasets {
        if !token_re().is_match(&d.id) {
            report.error(DATASETS_FILE, format!("dataset id `{}` is not a token", d.id));
        }
        if !dataset_ids.insert(d.id.as_str()) {
            report.error(DATASETS_FILE, format!("duplicate dataset id `{}`", d.id));
        }
        if !is_absolute_http_url(&d.endpoint) {
            report.error(
                DATASETS_FILE,
                format!("dataset `{}`: endpoint `{}` is not an absolute HTTP(S) URL", d.id, d.endpoint),
            );
        }
        if d.priority < 0 {
            report.error(
                DATASETS_FILE,
                format!("dataset `{}`: priority {} is negative", d.id, d.priority),
            );
        }
    }

    let mut category_ids = BTreeSet::new();
    for c in &cfg.categories {
        if !token_re().is_match(&c.id) {
            report.error(CATEGORIES_FILE, format!("category id `{}` is not a token", c.id));
        }
        if !category_ids.insert(c.id.as_str()) {
            report.error(CATEGORIES_FILE, format!("duplicate category id `{}`", c.id));
        }
        if !color_re().is_match(&c.color) {
            report.error(
                CATEGORIES_FILE,
                format!("category `{}`: color `{}` is not #RRGGBB", c.id, c.color),
            );
        }
        if let Some(sound) = &c.sound_url {
            if !is_url(sound) {
                report.error(
                    CATEGORIES_FILE,
                    format!("category `{}`: sound_url `{sound}` is not a URL", c.id),
                );
            }
        }
        for (dataset, query) in &c.extraction_queries {
            if !dataset_ids.contains(dataset.as_str()) {
                report.dangling(
                    CATEGORIES_FILE,
                    "extraction_queries",
                    dataset,
                    format!("category `{}`: extraction query for unknown dataset `{dataset}`", c.id),
                );
            }
            for var in ["entity", "label"] {
                if !projects(query, var) {
                    report.error(
                        CATEGORIES_FILE,
                        format!("category `{}`, dataset `{dataset}`: query does not project ?{var}", c.id),
                    );
                }
            }
        }
        for d in &cfg.datasets {
            if !c.extraction_queries.contains_key(&d.id) {
                report.warning(
                    CATEGORIES_FILE,
                    format!("category `{}` has no extraction query for dataset `{}`; pair skipped", c.id, d.id),
                );
            }
        }
    }

    for idx in &cfg.indexes {
        if !category_ids.contains(idx.category_id.as_str()) {
            report.dangling(
                INDEXES_FILE,
                "category_id",
                &idx.category_id,
                format!("index for unknown category `{}`", idx.category_id),
            );
        }
        if idx.equivalence_predicates.is_empty() {
            report.error(
                INDEXES_FILE,
                format!("index `{}`: equivalence_predicates is empty", idx.category_id),
            );
        }
        for ep in &idx.expansion_endpoints {
            if !dataset_ids.contains(ep.as_str()) && !is_absolute_http_url(ep) {
                report.dangling(
                    INDEXES_FILE,
                    "expansion_endpoints",
                    ep,
                    format!(
                        "index `{}`: expansion endpoint `{ep}` is neither a dataset id nor a URL",
                        idx.category_id
                    ),
                );
            }
        }
    }

    let mut highlighted = BTreeSet::new();
    let highlight_iris: BTreeSet<&str> = cfg.highlights.iter().map(|h| h.entity_iri.as_str()).collect();
    for h in &cfg.highlights {
        if !category_ids.contains(h.category_id.as_str()) {
            report.dangling(
                HIGHLIGHTS_FILE,
                "category_id",
                &h.category_id,
                format!("highlight for unknown category `{}`", h.category_id),
            );
        }
        if !highlighted.insert(h.category_id.as_str()) {
            report.error(
                HIGHLIGHTS_FILE,
                format!("more than one highlight for category `{}`", h.category_id),
            );
        }
        if let Some(linked) = &h.linked_to {
            if !highlight_iris.contains(linked.as_str()) || linked == &h.entity_iri {
                report.dangling(
                    HIGHLIGHTS_FILE,
                    "linked_to",
                    linked.as_str(),
                    format!("highlight `{}` links to `{linked}`, which is not another highlight", h.entity_iri),
                );
            }
        }
    }
    for b in &cfg.carousel {
        if b.title.trim().is_empty() {
            report.error(HIGHLIGHTS_FILE, "carousel box with empty title");
        }
        if !is_url(&b.link) {
            report.error(
                HIGHLIGHTS_FILE,
                format!("carousel box `{}`: link `{}` is not a URL", b.title, b.link),
            );
        }
        if let Some(image) = &b.image {
            if !is_url(image) {
                report.error(
                    HIGHLIGHTS_FILE,
                    format!("carousel box `{}`: image `{image}` is not a URL", b.title),
                );
            }
        }
    }

    for t in &cfg.insights {
        if !category_ids.contains(t.category_id.as_str()) {
            report.dangling(
                INSIGHTS_FILE,
                "category_id",
                &t.category_id,
                format!("insight template for unknown category `{}`", t.category_id),
            );
        }
        for (i, block) in t.blocks.iter().enumerate() {
            if !block.query.contains(ENTITY_PLACEHOLDER) {
                report.error(
                    INSIGHTS_FILE,
                    format!(
                        "template `{}` block {i} (`{}`): query lacks {ENTITY_PLACEHOLDER}",
                        t.category_id, block.title
                    ),
                );
            }
            for cap in placeholder_re().captures_iter(&block.query) {
                if &cap[1] != "ENTITY" {
                    report.error(
                        INSIGHTS_FILE,
                        format!(
                            "template `{}` block {i}: unknown placeholder {{{}}}",
                            t.category_id, &cap[1]
                        ),
                    );
                }
            }
            if block.target_dataset != "all" && !dataset_ids.contains(block.target_dataset.as_str()) {
                report.dangling(
                    INSIGHTS_FILE,
                    "target_dataset",
                    &block.target_dataset,
                    format!(
                        "template `{}` block {i}: unknown target dataset `{}`",
                        t.category_id, block.target_dataset
                    ),
                );
            }
        }
    }

    report
}

/// Replaces every `{NAME}` placeholder with `<IRI>`; everything else is
/// copied byte for byte.
pub fn render_query(
    template: &str,
    substitutions: &BTreeMap<String, String>,
) -> Result<String, RenderError> {
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for cap in placeholder_re().captures_iter(template) {
        let whole = cap.get(0).unwrap();
        let name = &cap[1];
        let value = substitutions
            .get(name)
            .ok_or_else(|| RenderError::UnboundPlaceholder(name.to_string()))?;
        let iri = Iri::parse(value).map_err(|_| RenderError::InvalidIri(value.clone()))?;
        out.push_str(&template[last..whole.start()]);
        out.push('<');
        out.push_str(iri.as_str());
        out.push('>');
        last = whole.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn render_substitutes_angle_bracketed_iri() {
        let out = render_query(
            "SELECT ?x WHERE { {ENTITY} ?p ?x }",
            &subs(&[("ENTITY", "http://ex.org/a")]),
        )
        .unwrap();
        assert_eq!(out, "SELECT ?x WHERE { <http://ex.org/a> ?p ?x }");
    }

    #[test]
    fn render_without_placeholders_is_identity() {
        let q = "SELECT * WHERE { ?s ?p ?o }";
        assert_eq!(render_query(q, &BTreeMap::new()).unwrap(), q);
    }

    #[test]
    fn render_reports_unbound_placeholder() {
        assert_eq!(
            render_query("SELECT * WHERE { {ENTITY} ?p ?o }", &BTreeMap::new()),
            Err(RenderError::UnboundPlaceholder("ENTITY".into()))
        );
    }

    #[test]
    fn render_rejects_bad_iri() {
        assert_eq!(
            render_query("{ENTITY}", &subs(&[("ENTITY", "not an iri")])),
            Err(RenderError::InvalidIri("not an iri".into()))
        );
    }

    #[test]
    fn projection_check() {
        assert!(projects("SELECT ?entity ?label WHERE { ?entity ?p ?label }", "label"));
        assert!(projects("select distinct ?entity ?label { }", "entity"));
        assert!(projects("SELECT * WHERE { }", "entity"));
        assert!(!projects("SELECT ?entity WHERE { ?entity ?p ?label }", "label"));
        assert!(!projects("SELECT ?entityX ?label WHERE {}", "entity"));
    }
}
