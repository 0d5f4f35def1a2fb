use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use super::term::{BlankNode, Iri, Literal, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed SPARQL results at {position}: {reason}")]
pub struct MalformedResults {
    pub position: String,
    pub reason: String,
}

fn malformed(position: impl Into<String>, reason: impl Into<String>) -> MalformedResults {
    MalformedResults {
        position: position.into(),
        reason: reason.into(),
    }
}

/// One solution; a variable missing from the map is unbound.
pub type Row = BTreeMap<String, Term>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BindingTable {
    pub vars: Vec<String>,
    pub rows: Vec<Row>,
}

impl BindingTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends another page; variables not yet known are added in order.
    pub fn extend(&mut self, other: BindingTable) {
        for v in other.vars {
            if !self.vars.contains(&v) {
                self.vars.push(v);
            }
        }
        self.rows.extend(other.rows);
    }
}

/// Parses a SPARQL 1.1 Query Results JSON document.
pub fn parse_sparql_results(bytes: &[u8]) -> Result<BindingTable, MalformedResults> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| malformed(format!("byte {}", e.valid_up_to()), "invalid UTF-8"))?;
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        malformed(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;

    let vars = doc
        .pointer("/head/vars")
        .ok_or_else(|| malformed("/head/vars", "missing"))?
        .as_array()
        .ok_or_else(|| malformed("/head/vars", "not an array"))?
        .iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| malformed(format!("/head/vars/{i}"), "variable name is not a string"))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let bindings = doc
        .pointer("/results/bindings")
        .ok_or_else(|| {
            if doc.get("boolean").is_some() {
                malformed("/boolean", "ASK results are not supported")
            } else {
                malformed("/results/bindings", "missing")
            }
        })?
        .as_array()
        .ok_or_else(|| malformed("/results/bindings", "not an array"))?;

    let mut rows = Vec::with_capacity(bindings.len());
    for (i, binding) in bindings.iter().enumerate() {
        let obj = binding
            .as_object()
            .ok_or_else(|| malformed(format!("/results/bindings/{i}"), "binding is not an object"))?;
        let mut row = Row::new();
        for (var, value) in obj {
            let position = format!("/results/bindings/{i}/{var}");
            if !vars.contains(var) {
                return Err(malformed(position, "variable not declared in head.vars"));
            }
            row.insert(var.clone(), parse_term(value, &position)?);
        }
        rows.push(row);
    }
    Ok(BindingTable { vars, rows })
}

fn parse_term(value: &Value, position: &str) -> Result<Term, MalformedResults> {
    let obj = value
        .as_object()
        .ok_or_else(|| malformed(position, "term is not an object"))?;
    let field = |name: &str| -> Result<Option<&str>, MalformedResults> {
        match obj.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(_) => Err(malformed(format!("{position}/{name}"), "not a string")),
        }
    };
    let kind = field("type")?.ok_or_else(|| malformed(position, "missing `type`"))?;
    let lexical = field("value")?.ok_or_else(|| malformed(position, "missing `value`"))?;
    match kind {
        "uri" => Iri::parse(lexical)
            .map(Term::Iri)
            .map_err(|e| malformed(format!("{position}/value"), e.to_string())),
        "bnode" => Ok(Term::BlankNode(BlankNode(lexical.to_string()))),
        "literal" | "typed-literal" => {
            let lang = field("xml:lang")?;
            let datatype = field("datatype")?;
            match (lang, datatype) {
                (Some(_), Some(dt)) if dt != super::RDF_LANG_STRING => {
                    Err(malformed(position, "literal has both xml:lang and datatype"))
                }
                (Some(lang), _) => {
                    if lang.is_empty() {
                        return Err(malformed(format!("{position}/xml:lang"), "empty language tag"));
                    }
                    Ok(Term::Literal(Literal::lang(lexical, lang)))
                }
                (None, Some(dt)) => {
                    let dt = Iri::parse(dt)
                        .map_err(|e| malformed(format!("{position}/datatype"), e.to_string()))?;
                    Ok(Term::Literal(Literal::typed(lexical, dt)))
                }
                (None, None) => Ok(Term::Literal(Literal::simple(lexical))),
            }
        }
        other => Err(malformed(format!("{position}/type"), format!("unknown term type `{other}`"))),
    }
}
