mod common;

use std::sync::Arc;

use common::*;
use lodweaver::api::ordered_relations;
use lodweaver::config::BlockKind;
use lodweaver::fixture::CannedFetcher;
use lodweaver::relations::{
    assemble_insight, expand_relations, expand_relations_with, template_for, BlockItem, RelationFilter,
    RelationsError,
};

const IMG: &str =
    "http://commons.wikimedia.org/wiki/Special:FilePath/The_Beatles_members_at_New_York_City_in_1964.jpg";

type Row = (&'static str, String, &'static str, bool, bool);

fn beatles_expected() -> Vec<Row> {
    vec![
        ("genre", "rock music".into(), "dbpedia", false, false),
        ("genre", "rock music".into(), "wikidata", false, false),
        ("hometown", "Liverpool".into(), "dbpedia", false, false),
        ("image", IMG.into(), "wikidata", false, false),
        ("instance of", format!("{WD}Q515"), "wikidata", true, false),
        ("label", "The Beatles".into(), "dbpedia", false, false),
        ("label", "The Beatles".into(), "wikidata", false, false),
        ("location of formation", "Liverpool".into(), "wikidata", false, false),
        ("performer", "Yesterday".into(), "wikidata", false, true),
        ("stylistic origin", format!("{DBR}Blues"), "dbpedia", true, false),
    ]
}

fn rows(p: &Pipeline, filter: &RelationFilter) -> Vec<(String, String, String, bool, bool)> {
    let beatles = entity_of(p, &format!("{WD}Q1299")).minted.clone();
    let set = expand_relations(&beatles, &p.store, &p.cfg, &fast_opts(), fetcher().as_ref()).unwrap();
    assert!(set.errors.is_empty());
    ordered_relations(&p.store, &set.relations, filter)
        .into_iter()
        .map(|r| {
            let shown = r.display_object(&p.store);
            (r.predicate_label, shown, r.source, r.transitive, r.inverse)
        })
        .collect()
}

fn owned(v: Vec<Row>) -> Vec<(String, String, String, bool, bool)> {
    v.into_iter()
        .map(|(a, b, c, d, e)| (a.to_string(), b, c.to_string(), d, e))
        .collect()
}

#[test]
fn beatles_relations() {
    let p = run_pipeline();
    assert_eq!(rows(&p, &RelationFilter::default()), owned(beatles_expected()));
}

#[test]
fn resolved_objects_carry_their_category() {
    let p = run_pipeline();
    let beatles = entity_of(&p, &format!("{WD}Q1299")).minted.clone();
    let set = expand_relations(&beatles, &p.store, &p.cfg, &fast_opts(), fetcher().as_ref()).unwrap();
    let rock = entity_of(&p, &format!("{DBR}Rock_music")).minted.clone();
    let to_rock: Vec<_> = set.relations.iter().filter(|r| r.object_entity.as_ref() == Some(&rock)).collect();
    assert_eq!(to_rock.len(), 2);
    assert!(to_rock.iter().all(|r| r.object_category.as_deref() == Some("genres")));
    assert!(set.relations.iter().all(|r| r.subject == beatles));
}

#[test]
fn filters_on_fixture() {
    let p = run_pipeline();
    let by_source = RelationFilter { source: Some("dbpedia".into()), ..Default::default() };
    let expected: Vec<Row> = beatles_expected().into_iter().filter(|r| r.2 == "dbpedia").collect();
    assert_eq!(rows(&p, &by_source), owned(expected));

    let places = RelationFilter { category: Some("places".into()), ..Default::default() };
    let got = rows(&p, &places);
    assert_eq!(got.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(), ["hometown", "location of formation"]);

    let both = RelationFilter {
        category: Some("places".into()),
        source: Some("wikidata".into()),
        relation_type: Some(iri(&format!("{WDT}P740"))),
    };
    assert_eq!(rows(&p, &both).len(), 1);

    let none = RelationFilter { category: Some("instruments".into()), ..Default::default() };
    assert!(rows(&p, &none).is_empty());
}

#[test]
fn no_hop_means_direct_only() {
    let p = run_pipeline();
    let beatles = entity_of(&p, &format!("{WD}Q1299")).minted.clone();
    let set = expand_relations_with(&beatles, &p.store, &p.cfg, &fast_opts(), fetcher().as_ref(), false).unwrap();
    assert_eq!(set.relations.len(), 8);
    assert!(set.relations.iter().all(|r| !r.transitive));
}

#[test]
fn expansion_failure_is_reported_not_fatal() {
    let mut data = fixture_data();
    data.set_down("dbpedia-fx", true);
    let p = run_pipeline();
    let f = CannedFetcher::new(Arc::new(data));
    let beatles = entity_of(&p, &format!("{WD}Q1299")).minted.clone();
    let set = expand_relations(&beatles, &p.store, &p.cfg, &fast_opts(), &f).unwrap();
    assert!(set.errors.iter().any(|e| e.source == "dbpedia"));
    assert!(set.relations.iter().all(|r| r.source == "wikidata"));
    assert!(!set.relations.is_empty());
}

#[test]
fn unknown_entity() {
    let p = run_pipeline();
    let missing = iri("https://lod.example.org/music/entity/0000000000000000");
    let err = expand_relations(&missing, &p.store, &p.cfg, &fast_opts(), fetcher().as_ref()).unwrap_err();
    assert!(matches!(err, RelationsError::UnknownEntity(_)));
}

#[test]
fn beatles_insight_card() {
    let p = run_pipeline();
    let beatles = entity_of(&p, &format!("{WD}Q1299")).minted.clone();
    let template = template_for(&p.cfg, &p.store, &beatles).unwrap();
    let card = assemble_insight(&beatles, template, &p.store, &p.cfg, &fast_opts(), fetcher().as_ref()).unwrap();
    assert_eq!(card.title, "The Beatles");
    let kinds: Vec<BlockKind> = card.blocks.iter().map(|b| b.kind).collect();
    assert_eq!(kinds, [BlockKind::Text, BlockKind::Media, BlockKind::Links, BlockKind::Relations]);

    let text = &card.blocks[0];
    assert_eq!(text.items, [BlockItem::Text("English rock band formed in Liverpool in 1960".into())]);
    assert_eq!(text.source.as_deref(), Some("dbpedia"));
    assert!(text.error_note.is_none());

    assert_eq!(
        card.blocks[1].items,
        [BlockItem::Media { url: IMG.into(), media_type: "image".into() }]
    );
    assert_eq!(
        card.blocks[2].items,
        [BlockItem::Link { label: "The Beatles official site".into(), url: "https://www.thebeatles.com/".into() }]
    );
    let rels: Vec<&str> = card.blocks[3]
        .items
        .iter()
        .map(|i| match i {
            BlockItem::Relation(r) => r.predicate_label.as_str(),
            other => panic!("unexpected item {other:?}"),
        })
        .collect();
    assert_eq!(rels, ["genre", "hometown"]);
}

#[test]
fn entity_without_template() {
    let p = run_pipeline();
    let rock = entity_of(&p, &format!("{DBR}Rock_music")).minted.clone();
    assert!(matches!(template_for(&p.cfg, &p.store, &rock), Err(RelationsError::NoTemplate(_))));
}

#[test]
fn insight_block_failure_is_noted() {
    let mut data = fixture_data();
    data.set_down("dbpedia-fx", true);
    let p = run_pipeline();
    let f = CannedFetcher::new(Arc::new(data));
    let beatles = entity_of(&p, &format!("{WD}Q1299")).minted.clone();
    let template = template_for(&p.cfg, &p.store, &beatles).unwrap();
    let card = assemble_insight(&beatles, template, &p.store, &p.cfg, &fast_opts(), &f).unwrap();
    let text = &card.blocks[0];
    assert!(text.items.is_empty());
    assert!(text.error_note.is_some());
    assert_eq!(card.blocks[1].items.len(), 1);
}
