//! Minimal RDF term model, SPARQL JSON results parsing and N-Triples /
//! N-Quads line handling.

mod ntriples;
mod results;
mod term;

pub use ntriples::{
    parse_nquads_line, serialize_linkset_ntriples, statement_line, NTriplesError, SerializeError,
};
pub use results::{parse_sparql_results, BindingTable, MalformedResults, Row};
pub use term::{BlankNode, InvalidIri, Iri, Literal, Statement, Subject, Term};

pub const OWL_SAME_AS: &str = "http://www.w3.org/2002/07/owl#sameAs";
pub const SKOS_EXACT_MATCH: &str = "http://www.w3.org/2004/02/skos/core#exactMatch";
pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
