//! Synthetic inputs for the benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use lodweaver::rdf::OWL_SAME_AS;
use lodweaver::reconcile::EquivalenceStatement;
use lodweaver::{Iri, MergedEntity};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

pub fn node(i: usize) -> Iri {
    Iri::parse(&format!("http://bench.example.org/n{i}")).unwrap()
}

/// `nodes` entities plus `edges` random equivalence statements among them.
pub fn random_graph(nodes: usize, edges: usize, seed: u64) -> (BTreeSet<Iri>, Vec<EquivalenceStatement>) {
    let mut rng = SmallRng::seed_from_u64(seed);
    let same_as = Iri::parse(OWL_SAME_AS).unwrap();
    let statements = (0..edges)
        .map(|_| EquivalenceStatement {
            left: node(rng.gen_range(0..nodes)),
            right: node(rng.gen_range(0..nodes)),
            predicate: same_as.clone(),
            provenance: "bench".into(),
            hop: 0,
        })
        .collect();
    ((0..nodes).map(node).collect(), statements)
}

const SYLLABLES: [&str; 16] = [
    "ba", "be", "ro", "ck", "li", "ver", "pool", "jazz", "son", "ata", "mo", "zart", "é", "ün", "the", "gui",
];

/// `count` single-category entities with two or three labels of one to
/// four words each.
pub fn random_entities(count: usize, seed: u64) -> Vec<MergedEntity> {
    let mut rng = SmallRng::seed_from_u64(seed);
    let word = |rng: &mut SmallRng| -> String {
        (0..rng.gen_range(1..4)).map(|_| SYLLABLES[rng.gen_range(0..SYLLABLES.len())]).collect()
    };
    (0..count)
        .map(|i| {
            let labels: Vec<String> = (0..rng.gen_range(2..4))
                .map(|_| (0..rng.gen_range(1..5)).map(|_| word(&mut rng)).collect::<Vec<_>>().join(" "))
                .collect();
            MergedEntity {
                minted: Iri::parse(&format!("https://bench.example.org/entity/{i:016x}")).unwrap(),
                display_label: labels[0].clone(),
                all_labels: labels,
                categories: ["artists".to_string()].into(),
                sources: ["wikidata".to_string()].into(),
                members: [node(i)].into(),
                member_sources: BTreeMap::new(),
                attributes: BTreeMap::new(),
            }
        })
        .collect()
}
