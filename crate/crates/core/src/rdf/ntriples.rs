use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::term::{BlankNode, Iri, Literal, Statement, Subject, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SerializeError {
    #[error("blank node `{0}` cannot appear in a linkset")]
    UnsupportedTerm(String),
    #[error("linkset statements must not carry a named graph (found <{0}>)")]
    NamedGraph(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("N-Quads syntax error at column {column}: {reason}")]
pub struct NTriplesError {
    pub column: usize,
    pub reason: String,
}

fn escape_literal(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{:04X}", c as u32);
            }
            c => out.push(c),
        }
    }
}

fn write_term(out: &mut String, term: &Term) {
    match term {
        Term::Iri(i) => {
            let _ = write!(out, "<{i}>");
        }
        Term::BlankNode(b) => {
            let _ = write!(out, "_:{}", b.0);
        }
        Term::Literal(l) => {
            out.push('"');
            escape_literal(out, l.lexical());
            out.push('"');
            if let Some(lang) = l.language() {
                let _ = write!(out, "@{lang}");
            } else if let Some(dt) = l.datatype() {
                let _ = write!(out, "^^<{dt}>");
            }
        }
    }
}

/// One N-Triples (or N-Quads, when the statement has a graph) line,
/// including the terminating ` .` but not the newline.
pub fn statement_line(stmt: &Statement) -> String {
    let mut out = String::new();
    match &stmt.subject {
        Subject::Iri(i) => {
            let _ = write!(out, "<{i}>");
        }
        Subject::BlankNode(b) => {
            let _ = write!(out, "_:{}", b.0);
        }
    }
    let _ = write!(out, " <{}> ", stmt.predicate);
    write_term(&mut out, &stmt.object);
    if let Some(g) = &stmt.graph {
        let _ = write!(out, " <{g}>");
    }
    out.push_str(" .");
    out
}

/// Serializes a linkset as sorted, deduplicated N-Triples (LF line ends).
pub fn serialize_linkset_ntriples(statements: &[Statement]) -> Result<Vec<u8>, SerializeError> {
    let mut lines = BTreeSet::new();
    for stmt in statements {
        if let Some(g) = &stmt.graph {
            return Err(SerializeError::NamedGraph(g.to_string()));
        }
        if let Subject::BlankNode(b) = &stmt.subject {
            return Err(SerializeError::UnsupportedTerm(b.0.clone()));
        }
        if let Term::BlankNode(b) = &stmt.object {
            return Err(SerializeError::UnsupportedTerm(b.0.clone()));
        }
        lines.insert(statement_line(stmt).into_bytes());
    }
    let mut out = Vec::new();
    for line in lines {
        out.extend_from_slice(&line);
        out.push(b'\n');
    }
    Ok(out)
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, reason: impl Into<String>) -> Result<T, NTriplesError> {
        Err(NTriplesError {
            column: self.pos + 1,
            reason: reason.into(),
        })
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn iri(&mut self) -> Result<Iri, NTriplesError> {
        if !self.eat('<') {
            return self.err("expected `<`");
        }
        let Some(end) = self.rest().find('>') else {
            return self.err("unterminated IRI");
        };
        let raw = &self.rest()[..end];
        let iri = match Iri::parse(raw) {
            Ok(i) => i,
            Err(e) => return self.err(e.to_string()),
        };
        self.pos += end + 1;
        Ok(iri)
    }

    fn blank(&mut self) -> Result<BlankNode, NTriplesError> {
        if !self.rest().starts_with("_:") {
            return self.err("expected blank node");
        }
        self.pos += 2;
        let end = self
            .rest()
            .find(|c: char| c.is_whitespace())
            .unwrap_or(self.rest().len());
        if end == 0 {
            return self.err("empty blank node label");
        }
        let label = self.rest()[..end].to_string();
        self.pos += end;
        Ok(BlankNode(label))
    }

    fn literal(&mut self) -> Result<Literal, NTriplesError> {
        if !self.eat('"') {
            return self.err("expected `\"`");
        }
        let mut lexical = String::new();
        loop {
            let mut chars = self.rest().chars();
            let Some(c) = chars.next() else {
                return self.err("unterminated literal");
            };
            self.pos += c.len_utf8();
            match c {
                '"' => break,
                '\\' => {
                    let Some(e) = self.rest().chars().next() else {
                        return self.err("dangling escape");
                    };
                    self.pos += 1;
                    match e {
                        'n' => lexical.push('\n'),
                        'r' => lexical.push('\r'),
                        't' => lexical.push('\t'),
                        'b' => lexical.push('\u{8}'),
                        'f' => lexical.push('\u{c}'),
                        '"' => lexical.push('"'),
                        '\'' => lexical.push('\''),
                        '\\' => lexical.push('\\'),
                        'u' | 'U' => {
                            let len = if e == 'u' { 4 } else { 8 };
                            let hex = self.rest().get(..len).unwrap_or("");
                            let Some(ch) = u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
                            else {
                                return self.err("bad unicode escape");
                            };
                            lexical.push(ch);
                            self.pos += len;
                        }
                        other => return self.err(format!("unknown escape `\\{other}`")),
                    }
                }
                c => lexical.push(c),
            }
        }
        if self.eat('@') {
            let end = self
                .rest()
                .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
                .unwrap_or(self.rest().len());
            if end == 0 {
                return self.err("empty language tag");
            }
            let lang = self.rest()[..end].to_string();
            self.pos += end;
            Ok(Literal::lang(lexical, lang))
        } else if self.rest().starts_with("^^") {
            self.pos += 2;
            let dt = self.iri()?;
            Ok(Literal::typed(lexical, dt))
        } else {
            Ok(Literal::simple(lexical))
        }
    }
}

/// Parses one N-Triples or N-Quads line. Blank and comment-only lines yield
/// `None`. A trailing `# comment` after the final `.` is returned alongside
/// the statement.
pub fn parse_nquads_line(line: &str) -> Result<Option<(Statement, Option<String>)>, NTriplesError> {
    let mut cur = Cursor { text: line.trim_end_matches(['\n', '\r']), pos: 0 };
    cur.skip_ws();
    if cur.rest().is_empty() || cur.rest().starts_with('#') {
        return Ok(None);
    }
    let subject = if cur.rest().starts_with('<') {
        Subject::Iri(cur.iri()?)
    } else {
        Subject::BlankNode(cur.blank()?)
    };
    cur.skip_ws();
    let predicate = cur.iri()?;
    cur.skip_ws();
    let object = match cur.rest().chars().next() {
        Some('<') => Term::Iri(cur.iri()?),
        Some('_') => Term::BlankNode(cur.blank()?),
        Some('"') => Term::Literal(cur.literal()?),
        _ => return cur.err("expected object term"),
    };
    cur.skip_ws();
    let graph = if cur.rest().starts_with('<') {
        let g = cur.iri()?;
        cur.skip_ws();
        Some(g)
    } else {
        None
    };
    if !cur.eat('.') {
        return cur.err("expected `.`");
    }
    cur.skip_ws();
    let comment = if cur.eat('#') {
        Some(cur.rest().trim().to_string())
    } else if cur.rest().is_empty() {
        None
    } else {
        return cur.err("trailing characters");
    };
    Ok(Some((
        Statement {
            subject,
            predicate,
            object,
            graph,
        },
        comment,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Iri {
        Iri::parse(s).unwrap()
    }

    #[test]
    fn empty_linkset_is_empty() {
        assert!(serialize_linkset_ntriples(&[]).unwrap().is_empty());
    }

    #[test]
    fn duplicates_collapse() {
        let t = Statement::triple(iri("http://x/a"), iri("http://x/p"), iri("http://x/c"));
        let out = serialize_linkset_ntriples(&[t.clone(), t]).unwrap();
        assert_eq!(out, b"<http://x/a> <http://x/p> <http://x/c> .\n");
    }

    #[test]
    fn lines_sorted() {
        let b = Statement::triple(iri("http://x/b"), iri("http://x/p"), iri("http://x/c"));
        let a = Statement::triple(iri("http://x/a"), iri("http://x/p"), iri("http://x/c"));
        let out = String::from_utf8(serialize_linkset_ntriples(&[b, a]).unwrap()).unwrap();
        assert!(out.starts_with("<http://x/a>"));
        assert_eq!(out.lines().count(), 2);
    }

    #[test]
    fn blank_nodes_and_graphs_rejected() {
        let mut t = Statement::triple(iri("http://x/a"), iri("http://x/p"), Term::BlankNode(BlankNode("b".into())));
        assert_eq!(
            serialize_linkset_ntriples(&[t.clone()]),
            Err(SerializeError::UnsupportedTerm("b".into()))
        );
        t.object = Term::Iri(iri("http://x/c"));
        t.graph = Some(iri("http://x/g"));
        assert!(matches!(serialize_linkset_ntriples(&[t]), Err(SerializeError::NamedGraph(_))));
    }

    #[test]
    fn quad_line_round_trip_with_comment() {
        let stmt = Statement {
            subject: Subject::Iri(iri("http://x/a")),
            predicate: iri("http://x/p"),
            object: Term::Literal(Literal::lang("line\n\"two\" \\ ok", "en")),
            graph: Some(iri("http://x/g")),
        };
        let line = format!("{} # wikidata-fx", statement_line(&stmt));
        let (back, comment) = parse_nquads_line(&line).unwrap().unwrap();
        assert_eq!(back, stmt);
        assert_eq!(comment.as_deref(), Some("wikidata-fx"));
    }

    #[test]
    fn parse_errors() {
        assert!(parse_nquads_line("<http://x/a> <http://x/p> .").is_err());
        assert!(parse_nquads_line("<http://x/a> <http://x/p> \"x\"").is_err());
        assert_eq!(parse_nquads_line("# only a comment").unwrap(), None);
        assert_eq!(parse_nquads_line("   ").unwrap(), None);
    }
}
