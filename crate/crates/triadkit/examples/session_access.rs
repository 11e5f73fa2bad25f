//! Session-scoped access profiles derived from org positions: subtree read
//! scope, own-unit write scope, admin-only metadata writes.
//!
//! ```bash
//! cargo run --example session_access
//! ```

use std::path::Path;

use triadkit::access::{authorize, close_session, AccessOp, AccessTarget};
use triadkit::dsl::{parse_document, SourceDocument};
use triadkit::engine::Engine;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("samples/hr_base.tdk");
    let doc = SourceDocument::from_file(&path).expect("sample readable");
    let bundle = parse_document(&doc).into_result().expect("sample parses");
    let mut engine = Engine::load(bundle).expect("loads");

    for user in ["president", "it_lead", "hr_clerk"] {
        let (session, profile) = engine.open_session_for(user).expect("declared user");
        println!(
            "{user}: read scope {:?}, write scope {:?}, metadata {:?}",
            profile.read_scope, profile.write_scope, profile.metadata
        );
        for (target, op) in [
            (AccessTarget::data("IT"), AccessOp::Read),
            (AccessTarget::data("IT"), AccessOp::Write),
            (AccessTarget::metadata("HR"), AccessOp::Read),
            (AccessTarget::metadata("HR"), AccessOp::Write),
        ] {
            let decision = authorize(&session, &profile, &target, op);
            println!("  {op} {:?} {} -> {decision}", target.kind, target.unit);
        }
        // Profiles die with their session.
        let closed = close_session(session).expect("open");
        let after = authorize(&closed, &profile, &AccessTarget::data("IT"), AccessOp::Read);
        println!("  after close: read IT -> {after}");
    }
}
