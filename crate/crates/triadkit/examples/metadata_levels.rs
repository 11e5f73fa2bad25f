//! Stratified metadata: lifting formulas into predicates level by level and
//! manipulating data and metadata through the same verbs.
//!
//! ```bash
//! cargo run --example metadata_levels
//! ```

use std::collections::BTreeMap;

use triadkit::access::{Grants, OrgPosition, SessionManager};
use triadkit::appraisal::{OrgStructure, OrgUnit};
use triadkit::dsl::{parse_document, SourceDocument};
use triadkit::formula::{Comprehension, DomainRef, Formula, Term};
use triadkit::meta::{
    check_stratification, lift_level, uniform_manipulate, UniformOp, UniformPayload,
    UniformTarget, DEFAULT_MAX_LEVEL,
};
use triadkit::semnet::SemanticNetwork;
use triadkit::value::Value;

const DOC: &str = r#"
    sort HireDate = date;
    sort Money = decimal;
    sort Name = text;
    concept Employee {
      name: Name;
      hired: HireDate;
    };
    concept Project {
      budget: Money;
    };
    individual e1 : Employee {name = "Ivanov", hired = 1999-03-14};
"#;

fn main() {
    let bundle = parse_document(&SourceDocument::inline(DOC))
        .into_result()
        .expect("document parses");
    let mut schema = bundle.schema;

    // Level 1: which concepts carry a date-sorted attribute? The formula
    // ranges over level-0 entities, so the lift lands at level 1.
    let dated = lift_level(
        &schema,
        0,
        Comprehension::new(
            "c",
            DomainRef::AllConcepts,
            Formula::Atom {
                pred: "has_attr_sort".into(),
                args: vec![Term::Var("c".into()), Term::Const(Value::symbol("HireDate"))],
            },
        ),
        "HasHireDate",
        DEFAULT_MAX_LEVEL,
    )
    .expect("lift to level 1");
    schema.predicates.insert(dated.name.clone(), dated);

    // Level 2: which level-1 predicates have members at all?
    let busy = lift_level(
        &schema,
        1,
        Comprehension::new(
            "p",
            DomainRef::Level(1),
            Formula::Atom {
                pred: "nonempty".into(),
                args: vec![Term::Var("p".into())],
            },
        ),
        "Inhabited",
        DEFAULT_MAX_LEVEL,
    )
    .expect("lift to level 2");
    schema.predicates.insert(busy.name.clone(), busy);

    let report = check_stratification(&schema);
    println!(
        "stratification: {}",
        if report.is_stratified() { "clean" } else { "violated" }
    );

    // Read both levels through the one uniform verb.
    let org = OrgStructure::new(OrgUnit::new("Corp"));
    let mut sessions = SessionManager::new(["analyst".to_string()]);
    let (session, profile) = sessions
        .open_session(
            &org,
            OrgPosition {
                user: "analyst".into(),
                unit: "Corp".into(),
                role: "analyst".into(),
                admin: false,
            },
            &Grants::default(),
        )
        .expect("session opens");
    let mut objects = BTreeMap::new();
    let network = SemanticNetwork::default();

    for target in [
        UniformTarget::Data {
            concept: "Employee".into(),
            unit: "Corp".into(),
        },
        UniformTarget::Metadata {
            predicate: "HasHireDate".into(),
            unit: "Corp".into(),
        },
        UniformTarget::Metadata {
            predicate: "Inhabited".into(),
            unit: "Corp".into(),
        },
    ] {
        let result = uniform_manipulate(
            &mut schema,
            &mut objects,
            &network,
            &session,
            &profile,
            &target,
            UniformOp::Read,
            UniformPayload::None,
        )
        .expect("read allowed");
        println!("read {target:?} -> {result:?}");
    }

    // Metadata writes demand administrative rights.
    let denied = uniform_manipulate(
        &mut schema,
        &mut objects,
        &network,
        &session,
        &profile,
        &UniformTarget::Metadata {
            predicate: "Anything".into(),
            unit: "Corp".into(),
        },
        UniformOp::Write,
        UniformPayload::Predicate {
            level: 1,
            body: Comprehension::new("c", DomainRef::AllConcepts, Formula::Truth(true)),
        },
    )
    .expect_err("non-admin metadata write");
    println!("non-admin metadata write -> {denied}");
}
