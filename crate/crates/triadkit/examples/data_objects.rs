//! Data objects: sorts, concepts, individuals and event-counted state
//! histories.
//!
//! ```bash
//! cargo run --example data_objects
//! ```

use std::collections::{BTreeMap, BTreeSet};

use triadkit::model::{
    make_data_object, transition_state, variable_domain, Concept, Individual, Sort, Valuation,
    DEFAULT_ENUMERATION_CAP,
};
use triadkit::value::Value;

fn main() {
    let position = Sort::finite(
        "Position",
        [
            Value::symbol("General_Director"),
            Value::symbol("Department_Director"),
        ],
    );
    let mut sorts = BTreeMap::new();
    sorts.insert("Position".to_string(), position);

    let employee = Concept::new("Employee", vec![("position".into(), "Position".into())]);
    let ivanov = Individual::new("ivanov", "Employee").with_property("name", Value::text("Ivanov"));

    // State 0: the pre-change valuation.
    let v0: Valuation = [("position".into(), Value::symbol("General_Director"))].into();
    let obj = make_data_object(&employee, &sorts, ivanov, v0).expect("valid object");
    println!("state {} valuation: {:?}", obj.state(), obj.valuation());

    // The promotion event appends state 1; state 0 stays byte-identical.
    let v1: Valuation = [("position".into(), Value::symbol("Department_Director"))].into();
    let promoted = transition_state(&obj, &employee, &sorts, v1, "promoted").expect("transition");
    println!("after promotion:");
    print!("{}", promoted.canonical_history());

    // A no-op update is still an event: dynamics are counted, not diffed.
    let same = transition_state(
        &promoted,
        &employee,
        &sorts,
        promoted.valuation().clone(),
        "confirmed",
    )
    .expect("transition");
    println!(
        "after a no-op confirmation the ordinal is {} with {} history entries",
        same.state().ordinal,
        same.history.len()
    );

    // Variable domains H_T(I): every total mapping from an index set of
    // individuals into a sort carrier.
    let function = Sort::finite(
        "LaborFunction",
        [Value::symbol("development"), Value::symbol("support")],
    );
    let index: BTreeSet<String> = ["ivanov".to_string(), "petrov".to_string()].into();
    let domain = variable_domain(&function, &index, DEFAULT_ENUMERATION_CAP).expect("enumerable");
    println!(
        "H_LaborFunction({{ivanov, petrov}}) has {} members:",
        domain.members.len()
    );
    for mapping in &domain.members {
        let line = mapping
            .iter()
            .map(|(id, value)| format!("{id} -> {value}"))
            .collect::<Vec<_>>()
            .join(", ");
        println!("  {line}");
    }
}
