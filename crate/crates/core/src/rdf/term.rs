use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid IRI `{text}`: {reason}")]
pub struct InvalidIri {
    pub text: String,
    pub reason: &'static str,
}

/// An absolute IRI.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Iri(String);

impl Iri {
    pub fn parse(text: &str) -> Result<Self, InvalidIri> {
        let err = |reason| {
            Err(InvalidIri {
                text: text.to_string(),
                reason,
            })
        };
        if text.is_empty() {
            return err("empty");
        }
        if text.chars().any(char::is_whitespace) {
            return err("contains whitespace");
        }
        if text
            .chars()
            .any(|c| matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') || c.is_control())
        {
            return err("contains a character not allowed in IRIs");
        }
        let Some(colon) = text.find(':') else {
            return err("no scheme");
        };
        let scheme = &text[..colon];
        let mut chars = scheme.chars();
        let valid_scheme = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
        if !valid_scheme {
            return err("invalid scheme");
        }
        Ok(Iri(text.to_string()))
    }

    /// For compile-time constants known to be valid.
    pub(crate) fn new_unchecked(text: &str) -> Self {
        debug_assert!(Iri::parse(text).is_ok(), "{text}");
        Iri(text.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    /// The part after the last `#` or `/`, used as a fallback display label.
    pub fn local_name(&self) -> &str {
        let s = self.0.trim_end_matches(['/', '#']);
        match s.rfind(['#', '/', ':']) {
            Some(i) if i + 1 < s.len() => &s[i + 1..],
            _ => s,
        }
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for Iri {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Iri {
    type Error = InvalidIri;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Iri::parse(&value)
    }
}

impl Serialize for Iri {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Iri {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Iri::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlankNode(pub String);

/// A literal. `lang` and `datatype` are never both set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    lexical: String,
    datatype: Option<Iri>,
    lang: Option<String>,
}

impl Literal {
    pub fn simple(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            lang: None,
        }
    }

    /// Language tags are stored lowercased; they compare case-insensitively.
    pub fn lang(lexical: impl Into<String>, lang: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            lang: Some(lang.into().to_ascii_lowercase()),
        }
    }

    /// `xsd:string` literals are simple literals.
    pub fn typed(lexical: impl Into<String>, datatype: Iri) -> Self {
        if datatype.as_str() == super::XSD_STRING {
            return Literal::simple(lexical);
        }
        Literal {
            lexical: lexical.into(),
            datatype: Some(datatype),
            lang: None,
        }
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Option<&Iri> {
        self.datatype.as_ref()
    }

    pub fn language(&self) -> Option<&str> {
        self.lang.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(Iri),
    Literal(Literal),
    BlankNode(BlankNode),
}

impl Term {
    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Term::Literal(l) => Some(l),
            _ => None,
        }
    }

    /// IRI text, literal lexical form, or `_:label`.
    pub fn value(&self) -> String {
        match self {
            Term::Iri(i) => i.to_string(),
            Term::Literal(l) => l.lexical.clone(),
            Term::BlankNode(b) => format!("_:{}", b.0),
        }
    }
}

impl From<Iri> for Term {
    fn from(i: Iri) -> Self {
        Term::Iri(i)
    }
}

impl From<Literal> for Term {
    fn from(l: Literal) -> Self {
        Term::Literal(l)
    }
}

/// Terms persist in the same shape as SPARQL JSON result bindings.
#[derive(Serialize, Deserialize)]
struct TermRepr {
    #[serde(rename = "type")]
    kind: String,
    value: String,
    #[serde(rename = "xml:lang", default, skip_serializing_if = "Option::is_none")]
    lang: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    datatype: Option<String>,
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let repr = match self {
            Term::Iri(i) => TermRepr {
                kind: "uri".into(),
                value: i.to_string(),
                lang: None,
                datatype: None,
            },
            Term::Literal(l) => TermRepr {
                kind: "literal".into(),
                value: l.lexical.clone(),
                lang: l.lang.clone(),
                datatype: l.datatype.as_ref().map(Iri::to_string),
            },
            Term::BlankNode(b) => TermRepr {
                kind: "bnode".into(),
                value: b.0.clone(),
                lang: None,
                datatype: None,
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = TermRepr::deserialize(d)?;
        match repr.kind.as_str() {
            "uri" => Ok(Term::Iri(Iri::parse(&repr.value).map_err(D::Error::custom)?)),
            "bnode" => Ok(Term::BlankNode(BlankNode(repr.value))),
            "literal" => {
                if repr.lang.is_some() && repr.datatype.is_some() {
                    return Err(D::Error::custom("literal with both lang and datatype"));
                }
                let datatype = repr
                    .datatype
                    .map(|dt| Iri::parse(&dt))
                    .transpose()
                    .map_err(D::Error::custom)?;
                Ok(Term::Literal(match (repr.lang, datatype) {
                    (Some(lang), _) => Literal::lang(repr.value, lang),
                    (None, Some(dt)) => Literal::typed(repr.value, dt),
                    (None, None) => Literal::simple(repr.value),
                }))
            }
            other => Err(D::Error::custom(format!("unknown term type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Subject {
    Iri(Iri),
    BlankNode(BlankNode),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Statement {
    pub subject: Subject,
    pub predicate: Iri,
    pub object: Term,
    pub graph: Option<Iri>,
}

impl Statement {
    pub fn triple(subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        Statement {
            subject: Subject::Iri(subject),
            predicate,
            object: object.into(),
            graph: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_http_iri() {
        assert_eq!(Iri::parse("http://example.org/a").unwrap().as_str(), "http://example.org/a");
    }

    #[test]
    fn rejects_space() {
        let err = Iri::parse("not an iri").unwrap_err();
        assert_eq!(err.reason, "contains whitespace");
    }

    #[test]
    fn accepts_urn() {
        assert!(Iri::parse("urn:uuid:1234").is_ok());
    }

    #[test]
    fn rejects_missing_scheme_and_empty() {
        assert!(Iri::parse("").is_err());
        assert!(Iri::parse("example.org/a").is_err());
        assert!(Iri::parse("1http://x").is_err());
        assert!(Iri::parse("http://x/<y>").is_err());
    }

    #[test]
    fn local_names() {
        assert_eq!(Iri::parse("http://dbpedia.org/ontology/genre").unwrap().local_name(), "genre");
        assert_eq!(Iri::parse("http://www.w3.org/2002/07/owl#sameAs").unwrap().local_name(), "sameAs");
        assert_eq!(Iri::parse("urn:x:y").unwrap().local_name(), "y");
    }

    #[test]
    fn term_json_round_trip() {
        let terms = vec![
            Term::Iri(Iri::parse("http://ex.org/a").unwrap()),
            Term::Literal(Literal::lang("chat", "fr")),
            Term::Literal(Literal::typed("1", Iri::parse("http://www.w3.org/2001/XMLSchema#integer").unwrap())),
            Term::BlankNode(BlankNode("b0".into())),
        ];
        let json = serde_json::to_string(&terms).unwrap();
        let back: Vec<Term> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, terms);
    }
}
