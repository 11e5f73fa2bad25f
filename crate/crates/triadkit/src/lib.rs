//! An engine for typed data objects with event-driven state dynamics,
//! a stratified comprehension-based metadata model, a semantic-network
//! scenario language, curried appraisal functionals over an org hierarchy,
//! component-schema integration with rollback, and session-scoped access
//! profiles.
//!
//! Start with the runnable examples (`cargo run --example <name>`):
//!
//! - `data_objects` — sorts, concepts, individuals, state histories
//! - `situation_network` — frames and situation networks
//! - `comprehension_queries` — comprehension, individuation, application
//! - `metadata_levels` — lifting predicates level by level
//! - `personnel_appraisal` — the functional F(s)(p) and the metric family
//! - `component_merge` — schema integration, conflicts and rollback
//! - `session_access` — org-position-derived access profiles
//! - `event_replay` — the personnel lifecycle machine and scripts
//!
//! A thin `triadkit` binary exposes the same machinery over `.tdk`
//! documents for batch use.

pub mod access;
pub mod appraisal;
pub mod cli;
pub mod dsl;
pub mod engine;
pub mod eval;
pub mod event;
pub mod formula;
pub mod integrate;
pub mod meta;
pub mod model;
pub mod schema;
pub mod semnet;
pub mod value;

pub use access::{authorize, close_session, AccessProfile, Decision, Session, SessionManager};
pub use appraisal::{
    evaluate_metric, generalization_analysis, unit_appraisal, Assignment, Functional, Metric,
    OrgStructure, OrgUnit,
};
pub use eval::{apply, comprehend, individuate, Entity, EvalContext, EvalEnv, Evaluator, MappingValue};
pub use event::{dispatch, standard_bindings, EngineState, Event, EventKind, ScriptRegistry};
pub use formula::{CmpOp, Comprehension, DomainRef, Formula, Term};
pub use meta::{check_stratification, lift_level, uniform_manipulate, MetaPredicate};
pub use model::{
    make_data_object, transition_state, variable_domain, Concept, DataObject, Individual, Sort,
    StateIndex, VariableDomain,
};
pub use schema::{Bundle, Query, Schema};
pub use semnet::{situation_from_transition, Frame, NetworkLanguage, SemanticNetwork};
pub use value::{Decimal, ScalarKind, Value};
