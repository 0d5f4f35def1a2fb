mod common;

use common::{oracle_parse, results_corpus, results_dir};
use lodweaver::rdf::parse_sparql_results;

#[test]
fn corpus_agrees_with_sparesults() {
    let corpus = results_corpus();
    let standalone = corpus.iter().filter(|(n, _)| n.ends_with(".srj")).count();
    assert!(standalone >= 20, "only {standalone} documents in {}", results_dir().display());
    for (name, bytes) in &corpus {
        let ours = parse_sparql_results(bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        let theirs = oracle_parse(bytes).unwrap_or_else(|e| panic!("{name}: oracle: {e}"));
        assert_eq!(ours.vars, theirs.vars, "{name}: variables");
        assert_eq!(ours.rows.len(), theirs.rows.len(), "{name}: row count");
        for (i, (a, b)) in ours.rows.iter().zip(&theirs.rows).enumerate() {
            assert_eq!(a, b, "{name}: row {i}");
        }
    }
}

#[test]
fn corpus_covers_every_term_shape() {
    use lodweaver::Term;
    let (mut iri, mut plain, mut lang, mut typed, mut bnode, mut unbound) = (0, 0, 0, 0, 0, 0);
    for (_, bytes) in results_corpus() {
        let t = parse_sparql_results(&bytes).unwrap();
        for row in &t.rows {
            unbound += t.vars.iter().filter(|v| !row.contains_key(*v)).count();
            for term in row.values() {
                match term {
                    Term::Iri(_) => iri += 1,
                    Term::BlankNode(_) => bnode += 1,
                    Term::Literal(l) if l.language().is_some() => lang += 1,
                    Term::Literal(l) if l.datatype().is_some() => typed += 1,
                    Term::Literal(_) => plain += 1,
                }
            }
        }
    }
    for (kind, n) in [("iri", iri), ("plain", plain), ("lang", lang), ("typed", typed), ("bnode", bnode), ("unbound", unbound)] {
        assert!(n > 0, "no {kind} terms in the corpus");
    }
}
