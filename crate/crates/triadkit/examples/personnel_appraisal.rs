//! The appraisal functional F((v),(e)) and the metric family: restriction by
//! assignment points, generalization-level analysis, unit scores.
//!
//! ```bash
//! cargo run --example personnel_appraisal
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use triadkit::appraisal::{
    evaluate_metric, generalization_analysis, unit_appraisal, Assignment, Functional,
};
use triadkit::dsl::{parse_document, SourceDocument};
use triadkit::engine::Engine;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("samples/hr_base.tdk");
    let doc = SourceDocument::from_file(&path).expect("sample readable");
    let bundle = parse_document(&doc).into_result().expect("sample parses");
    let engine = Engine::load(bundle).expect("loads");
    let org = engine.org();
    let population = engine.population();

    // F is the most general employee class; assignment points restrict it.
    let general = Functional::general(&org, population.clone());
    println!("F = {:?}", general.extension());
    let s = Assignment::labor_functions(["development", "support"]);
    let p = Assignment::org_units(["IT"]);
    let by_function = general.restrict(&org, s.clone()).expect("restricts");
    println!("F(s) = {:?}", by_function.extension());
    let by_unit = by_function.restrict(&org, p.clone()).expect("restricts");
    println!("F(s)(p) = {:?}", by_unit.extension());

    // Segmentation degree z splits under s and stays put under p.
    let z = &engine.bundle.schema.metrics["z"];
    let under_s = evaluate_metric(&org, z, std::slice::from_ref(&s)).expect("evaluates");
    let under_sp = evaluate_metric(&org, z, &[s.clone(), p.clone()]).expect("evaluates");
    let show = |m: &triadkit::appraisal::MetricEvaluation| {
        m.iter()
            .map(|(key, value)| format!("{key} = {value}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    println!("|z|(s)    = {{{}}}", show(&under_s));
    println!(
        "|z|(s)(p) = {{{}}} (same mapping: {})",
        show(&under_sp),
        under_s == under_sp
    );

    // Overheads q keep refining, so the second point still matters to q
    // while two conceptualization levels stay sufficient overall.
    let metrics: Vec<&triadkit::appraisal::Metric> = ["z", "r", "q"]
        .iter()
        .map(|name| &engine.bundle.schema.metrics[*name])
        .collect();
    let report = generalization_analysis(
        &org,
        &metrics,
        &[s, Assignment::org_units(["IT", "Programming"])],
    )
    .expect("analyzes");
    print!("{report}");

    // A weighted score over one unit's subtree population.
    let weights: BTreeMap<String, f64> = [("z".to_string(), 1.0), ("q".to_string(), 2.0)].into();
    let score = unit_appraisal(
        &org,
        "ITCompany",
        &engine.bundle.schema.metrics,
        &weights,
        &population,
    )
    .expect("scores");
    println!("appraisal(ITCompany) = {score}");
}
