//! Situation networks: a state transition rendered as dyadic frames.
//!
//! The scenario: a General_Director changes position to Department_Director,
//! managing a department of more than 50 employees.
//!
//! ```bash
//! cargo run --example situation_network
//! ```

use std::collections::{BTreeMap, BTreeSet};

use triadkit::model::{make_data_object, transition_state, Concept, Individual, Sort, Valuation};
use triadkit::semnet::{situation_from_transition, Frame};
use triadkit::value::Value;

fn main() {
    let mut sorts = BTreeMap::new();
    sorts.insert(
        "Position".to_string(),
        Sort::finite(
            "Position",
            [
                Value::symbol("General_Director"),
                Value::symbol("Department_Director"),
            ],
        ),
    );
    let employee = Concept::new("Employee", vec![("position".into(), "Position".into())]);

    let before = make_data_object(
        &employee,
        &sorts,
        Individual::new("e1", "Employee"),
        [("position".into(), Value::symbol("General_Director"))].into(),
    )
    .expect("valid");
    let after = transition_state(
        &before,
        &employee,
        &sorts,
        Valuation::from([("position".into(), Value::symbol("Department_Director"))]),
        "promoted",
    )
    .expect("transition");

    // The department-size constraint travels as a context frame over a
    // literal constant; comparisons stay in formulas, not in the network.
    let context: BTreeSet<Frame> = [Frame::new(
        "manages_count_over",
        Value::symbol("e1"),
        Value::Integer(50),
    )]
    .into();

    let net = situation_from_transition(&before, &after, &context).expect("same individual");
    println!("situation frames:");
    for frame in &net.frames {
        println!("  {frame}");
    }

    // Frame truth is membership; asking about undeclared symbols errors.
    let queries = [
        Frame::new(
            "has_position",
            Value::symbol("e1"),
            Value::symbol("Department_Director"),
        ),
        Frame::new(
            "had_position",
            Value::symbol("e1"),
            Value::symbol("Department_Director"),
        ),
    ];
    for frame in &queries {
        println!("holds({frame}) = {}", net.holds(frame).expect("well-formed"));
    }
    let unknown = Frame::new("reports_to", Value::symbol("e1"), Value::symbol("e1"));
    println!("holds({unknown}) -> {}", net.holds(&unknown).unwrap_err());
}
