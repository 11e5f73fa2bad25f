//! The evaluation calculus: mapping application, comprehension and
//! individuation, both through the API and through `.tdk` queries.
//!
//! ```bash
//! cargo run --example comprehension_queries
//! ```

use std::collections::BTreeSet;

use triadkit::dsl::{parse_document, parse_query, SourceDocument};
use triadkit::engine::Engine;
use triadkit::eval::{apply, MappingValue};
use triadkit::value::Value;

const DOC: &str = r#"
    sort Position = {General_Director, Department_Director, Specialist};
    sort Name = text;
    concept Employee {
      name: Name;
      position: Position;
    };
    individual e1 : Employee {name = "Ivanov", position = General_Director};
    individual e2 : Employee {name = "Petrov", position = Specialist};
    individual e3 : Employee {name = "Sidorov", position = Specialist};
"#;

fn main() {
    // The evaluation function over B^A is graph lookup: |<f, x>| = f(x).
    let segmentation = MappingValue::new(
        BTreeSet::from([Value::symbol("development"), Value::symbol("support")]),
        BTreeSet::from([Value::symbol("z_devel"), Value::symbol("z_support")]),
        [
            (Value::symbol("development"), Value::symbol("z_devel")),
            (Value::symbol("support"), Value::symbol("z_support")),
        ]
        .into(),
    )
    .expect("total mapping");
    println!(
        "|z|(development) = {}",
        apply(&segmentation, &Value::symbol("development")).expect("in domain")
    );

    let bundle = parse_document(&SourceDocument::inline(DOC))
        .into_result()
        .expect("document parses");
    let engine = Engine::load(bundle).expect("loads");

    // Compression: {x : D | phi} filters the domain.
    let specialists = parse_query(
        "{ x : Employee | x.position = Specialist }",
        &engine.bundle.schema,
    )
    .expect("query parses");
    println!(
        "specialists = {:?}",
        engine.run_query(&specialists).expect("runs")
    );

    // Individuation demands exactly one satisfier.
    let unique_director = parse_query(
        "unique { x : Employee | x.position = General_Director }",
        &engine.bundle.schema,
    )
    .expect("query parses");
    println!(
        "the general director is {:?}",
        engine.run_query(&unique_director).expect("unique")
    );

    let ambiguous = parse_query(
        "unique { x : Employee | x.position = Specialist }",
        &engine.bundle.schema,
    )
    .expect("query parses");
    println!(
        "unique specialist -> {}",
        engine.run_query(&ambiguous).expect_err("two satisfiers")
    );
}
