//! The personnel lifecycle machine: enroll, transfer, dismiss, re-enroll,
//! scripts firing in registration order, and all-or-nothing dispatch.
//!
//! ```bash
//! cargo run --example event_replay
//! ```

use std::path::Path;

use triadkit::dsl::{parse_document, SourceDocument};
use triadkit::engine::Engine;
use triadkit::event::{Event, EventKind, ScriptAction, ScriptBinding};

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("samples/hr_base.tdk");
    let doc = SourceDocument::from_file(&path).expect("sample readable");
    let bundle = parse_document(&doc).into_result().expect("sample parses");
    let mut engine = Engine::load(bundle).expect("loads");
    let (session, profile) = engine.open_session_for("president").expect("declared");

    println!("initial personnel state:");
    print!("{}", engine.state.personnel.canonical_text());

    let events = [
        Event::new(EventKind::Dismiss, "ivanov", None),
        Event::new(EventKind::ReEnroll, "ivanov", Some("Programming".into())),
        Event::new(EventKind::Transfer, "petrov", Some("InformationSystems".into())),
        // Illegal: sidorov is enrolled, not a candidate.
        Event::new(EventKind::Enroll, "sidorov", Some("HR".into())),
    ];
    for event in &events {
        match engine.dispatch_event(&session, &profile, event) {
            Ok(outcome) => println!(
                "{} {} -> ok, {} script(s) fired, transition {:?}",
                event.kind,
                event.employee,
                outcome.fired.len(),
                outcome.transition
            ),
            Err(err) => println!("{} {} -> {err}", event.kind, event.employee),
        }
    }

    // A failing action aborts its whole dispatch: the state is untouched.
    engine
        .registry
        .register_script(
            &engine.bundle.schema,
            ScriptBinding {
                event: EventKind::Transfer,
                concept: None,
                unit: None,
                actions: vec![
                    ScriptAction::AdjustCounter {
                        counter: "touched".into(),
                        delta: 1,
                    },
                    ScriptAction::Fail,
                ],
            },
        )
        .expect("registers");
    let before = engine.state.canonical_text();
    let err = engine
        .dispatch_event(
            &session,
            &profile,
            &Event::new(EventKind::Transfer, "ivanov", Some("IT".into())),
        )
        .expect_err("the fail action aborts");
    println!("poisoned transfer -> {err}");
    assert_eq!(engine.state.canonical_text(), before);
    println!("state after the aborted dispatch is byte-identical");

    println!("final personnel state:");
    print!("{}", engine.state.personnel.canonical_text());
}
