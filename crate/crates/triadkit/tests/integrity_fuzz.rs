//! Fuzzed integrity checking: plant reference defects in generated schemas
//! and compare detection against an independent reference-graph walker.

mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use triadkit::integrate::{verify_integrity, IntegrityFinding};
use triadkit::schema::Schema;

/// The oracle: an independent walk over every name-shaped reference edge,
/// returning the set of missing targets.
fn reference_walker(schema: &Schema) -> BTreeSet<String> {
    let mut missing = BTreeSet::new();
    for concept in schema.concepts.values() {
        for (_, sort) in &concept.attributes {
            if !schema.sorts.contains_key(sort) {
                missing.insert(sort.clone());
            }
        }
    }
    let extern_concepts: BTreeSet<&String> = schema
        .component
        .as_ref()
        .map(|header| header.requires.iter().collect())
        .unwrap_or_default();
    for individual in schema.individuals.values() {
        if !schema.concepts.contains_key(&individual.concept)
            && !extern_concepts.contains(&individual.concept)
        {
            missing.insert(individual.concept.clone());
        }
    }
    for frame in &schema.frames {
        if !schema.relations.contains(&frame.relation) {
            missing.insert(frame.relation.clone());
        }
    }
    missing
}

#[test]
fn planted_defects_are_detected_with_walker_parity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1D7E6);
    let mut planted_runs = 0;
    for case in 0..200 {
        let mut bundle = common::random_bundle(&mut rng, "g");
        bundle.schema.component = None;
        assert!(verify_integrity(&bundle.schema).is_clean(), "case {case}");

        // Plant up to three defects of independent kinds.
        let mut planted: BTreeSet<String> = BTreeSet::new();
        if rng.gen_bool(0.4) {
            // A concept attribute pointing at a ghost sort.
            if let Some(concept) = bundle.schema.concepts.values_mut().next() {
                concept.attributes.push(("ghostly".into(), "gGhostSort".into()));
                planted.insert("gGhostSort".into());
            }
        }
        if rng.gen_bool(0.4) {
            // An individual of a concept that does not exist.
            if let Some(individual) = bundle.schema.individuals.values_mut().next() {
                individual.concept = "gGhostConcept".into();
                planted.insert("gGhostConcept".into());
            }
        }
        if rng.gen_bool(0.4) {
            // A frame over an undeclared relation.
            if let Some(frame) = bundle.schema.frames.iter().next().cloned() {
                bundle.schema.frames.remove(&frame);
                let mut orphan = frame;
                orphan.relation = "gGhostRel".into();
                bundle.schema.frames.insert(orphan);
                planted.insert("gGhostRel".into());
            }
        }
        if !planted.is_empty() {
            planted_runs += 1;
        }

        let expected = reference_walker(&bundle.schema);
        assert!(planted.iter().all(|name| expected.contains(name)));

        let report = verify_integrity(&bundle.schema);
        let detected: BTreeSet<String> = report
            .findings
            .iter()
            .filter_map(|finding| match finding {
                IntegrityFinding::Dangling { missing, .. } => Some(missing.clone()),
                _ => None,
            })
            .collect();
        // Every walker-found missing target is reported, and nothing that
        // the walker cannot justify as a dangling name is.
        assert_eq!(detected, expected, "case {case}");
        assert_eq!(report.is_clean(), expected.is_empty(), "case {case}");
    }
    assert!(planted_runs > 50, "enough planted-defect cases ran");
}
