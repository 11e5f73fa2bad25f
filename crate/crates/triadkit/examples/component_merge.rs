//! Component integration: merging the HR components into the base under
//! semantic priority, with an append-only history and rollback.
//!
//! ```bash
//! cargo run --example component_merge
//! ```

use std::path::Path;

use triadkit::dsl::{parse_document, SourceDocument};
use triadkit::integrate::{
    merge_component, verify_integrity, SchemaHistory, SemanticPriority,
};
use triadkit::schema::Bundle;

fn load(name: &str) -> Bundle {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("samples")
        .join(name);
    let doc = SourceDocument::from_file(&path).expect("sample readable");
    parse_document(&doc).into_result().expect("sample parses")
}

fn main() {
    let base = load("hr_base.tdk");
    let mut history = SchemaHistory::init(&base, "t0");
    let priority = SemanticPriority::from_schema(&base.schema);

    let components = [
        "personal_data.tdk",
        "personnel_dynamics.tdk",
        "charges_deductions.tdk",
        "appraisal_testing.tdk",
        "vacancies.tdk",
        "leaves_sick_lists.tdk",
        "training_skills.tdk",
        "equipment_fixing.tdk",
    ];
    for name in components {
        let component = load(name);
        let current = history.current_bundle().expect("current reparses");
        let (merged, report) = merge_component(&current, &component, &priority).expect("merges");
        let label = component
            .schema
            .component
            .as_ref()
            .map(|header| header.name.clone())
            .unwrap_or_else(|| name.to_string());
        if report.rejected() {
            println!("{label}: rejected");
            print!("{report}");
            continue;
        }
        let version = history.record(&merged, format!("merge {label}"), "t");
        println!(
            "{label}: merged as v{version} ({} conflicts resolved)",
            report.entries.len()
        );
    }

    let current = history.current_bundle().expect("current reparses");
    println!(
        "after integration: {} concepts, {} relations, {} metrics",
        current.schema.concepts.len(),
        current.schema.relations.len(),
        current.schema.metrics.len()
    );
    println!(
        "integrity: {}",
        if verify_integrity(&current.schema).is_clean() {
            "clean"
        } else {
            "findings"
        }
    );

    // A conflicting redefinition is rejected wholesale: the base survives.
    let conflicting = parse_document(&SourceDocument::inline(
        "sort Position = {General_Director};",
    ))
    .into_result()
    .expect("parses");
    let (unchanged, report) =
        merge_component(&current, &conflicting, &priority).expect("merk runs");
    println!("conflicting sort redefinition:");
    print!("{report}");
    assert_eq!(
        triadkit::dsl::print_canonical(&unchanged),
        triadkit::dsl::print_canonical(&current)
    );

    // Rollback never destroys history: it appends the old text as new head.
    let before = history.current;
    history.rollback(0, "t").expect("version 0 exists");
    println!(
        "rolled back from v{before} to the content of v0 as v{} ({} versions kept)",
        history.current,
        history.entries.len()
    );
}
