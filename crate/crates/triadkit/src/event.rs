//! Event-driven script dispatch and the personnel lifecycle machine.
//!
//! The lifecycle graph has exactly four edges: candidate -> enrolled
//! (enroll), enrolled -> enrolled (transfer), enrolled -> dismissed
//! (dismiss) and dismissed -> enrolled (re_enroll). Dispatch checks access,
//! legality and vacancy availability, applies the lifecycle change, then
//! fires every matching script binding in registration order. All actions of
//! all fired scripts apply atomically or not at all: a failing action aborts
//! the dispatch and the caller keeps the pre-dispatch state.
//!
//! Scripts are declarative action lists, not a programming language. The
//! four standard bindings returned by [`standard_bindings`] carry the
//! vacancy bookkeeping; duplicate bindings are NOT deduplicated — whatever
//! is registered twice fires twice.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::access::{authorize, AccessOp, AccessProfile, AccessTarget, DenyReason, Session};
use crate::model::{transition_state, DataObject, Valuation};
use crate::schema::Schema;
use crate::semnet::SemanticNetwork;
use crate::value::Value;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EventError {
    #[error("access denied: {0}")]
    AccessDenied(DenyReason),
    #[error("event `{event}` is illegal for employee `{employee}` in lifecycle state {from}")]
    IllegalTransition {
        employee: String,
        from: Lifecycle,
        event: String,
    },
    #[error("unit `{0}` has no vacancies left")]
    VacancyExhausted(String),
    #[error("script action failed: {0}")]
    ScriptActionFailure(String),
    #[error("{kind} `{name}` is not declared")]
    UndeclaredEntity { kind: &'static str, name: String },
    #[error("event `{0}` needs a target unit")]
    MissingTargetUnit(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Enroll,
    Transfer,
    Dismiss,
    ReEnroll,
    Custom(String),
}

impl EventKind {
    pub fn parse(word: &str) -> EventKind {
        match word {
            "enroll" => EventKind::Enroll,
            "transfer" => EventKind::Transfer,
            "dismiss" => EventKind::Dismiss,
            "re_enroll" => EventKind::ReEnroll,
            other => EventKind::Custom(other.to_string()),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Enroll => f.write_str("enroll"),
            EventKind::Transfer => f.write_str("transfer"),
            EventKind::Dismiss => f.write_str("dismiss"),
            EventKind::ReEnroll => f.write_str("re_enroll"),
            EventKind::Custom(label) => f.write_str(label),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lifecycle {
    Candidate,
    Enrolled,
    Dismissed,
}

impl fmt::Display for Lifecycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lifecycle::Candidate => f.write_str("candidate"),
            Lifecycle::Enrolled => f.write_str("enrolled"),
            Lifecycle::Dismissed => f.write_str("dismissed"),
        }
    }
}

/// A unit named by a script action, resolved against the event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitRef {
    /// The subject's unit before the dispatch.
    Source,
    /// The event's target unit.
    Target,
    Named(String),
}

impl fmt::Display for UnitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitRef::Source => f.write_str("source"),
            UnitRef::Target => f.write_str("target"),
            UnitRef::Named(name) => f.write_str(name),
        }
    }
}

/// A frame argument in a script action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgRef {
    /// The subject employee id.
    Subject,
    Source,
    Target,
    Const(Value),
}

impl fmt::Display for ArgRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgRef::Subject => f.write_str("subject"),
            ArgRef::Source => f.write_str("source"),
            ArgRef::Target => f.write_str("target"),
            ArgRef::Const(value) => write!(f, "{value}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptAction {
    /// Adjust a unit's vacancy counter; going below zero aborts the dispatch.
    AdjustVacancy { unit: UnitRef, delta: i64 },
    /// Adjust a named auxiliary counter (may go negative).
    AdjustCounter { counter: String, delta: i64 },
    /// Add a frame to the engine's situation network.
    AddFrame {
        relation: String,
        subject: ArgRef,
        object: ArgRef,
    },
    /// Transition the subject's data object, updating the listed attributes
    /// and carrying the rest over.
    Transition {
        label: String,
        updates: Valuation,
    },
    /// Always fails; exists so atomicity can be exercised from documents.
    Fail,
}

/// One registered script: an event pattern and the actions to run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptBinding {
    pub event: EventKind,
    pub concept: Option<String>,
    pub unit: Option<String>,
    pub actions: Vec<ScriptAction>,
}

/// The registry holds bindings in registration order; that order is the
/// dispatch order, and duplicates fire once per registration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptRegistry {
    pub bindings: Vec<ScriptBinding>,
}

impl ScriptRegistry {
    pub fn register_script(
        &mut self,
        schema: &Schema,
        binding: ScriptBinding,
    ) -> Result<(), EventError> {
        if let EventKind::Custom(label) = &binding.event {
            if !schema.custom_events.contains(label) {
                return Err(EventError::UndeclaredEntity {
                    kind: "event",
                    name: label.clone(),
                });
            }
        }
        if let Some(concept) = &binding.concept {
            if !schema.concepts.contains_key(concept) {
                return Err(EventError::UndeclaredEntity {
                    kind: "concept",
                    name: concept.clone(),
                });
            }
        }
        if let Some(unit) = &binding.unit {
            let known = schema
                .org
                .as_ref()
                .map(|org| org.contains_unit(unit))
                .unwrap_or(false);
            if !known {
                return Err(EventError::UndeclaredEntity {
                    kind: "unit",
                    name: unit.clone(),
                });
            }
        }
        for action in &binding.actions {
            match action {
                ScriptAction::AddFrame { relation, .. } => {
                    if !schema.relations.contains(relation) {
                        return Err(EventError::UndeclaredEntity {
                            kind: "relation",
                            name: relation.clone(),
                        });
                    }
                }
                ScriptAction::AdjustVacancy {
                    unit: UnitRef::Named(name),
                    ..
                } => {
                    let known = schema
                        .org
                        .as_ref()
                        .map(|org| org.contains_unit(name))
                        .unwrap_or(false);
                    if !known {
                        return Err(EventError::UndeclaredEntity {
                            kind: "unit",
                            name: name.clone(),
                        });
                    }
                }
                _ => {}
            }
        }
        self.bindings.push(binding);
        Ok(())
    }
}

/// The standard personnel bookkeeping: enroll and re-enroll consume a target
/// vacancy, transfer consumes a target vacancy then releases the source one,
/// dismissal releases the source vacancy.
pub fn standard_bindings() -> Vec<ScriptBinding> {
    vec![
        ScriptBinding {
            event: EventKind::Enroll,
            concept: None,
            unit: None,
            actions: vec![ScriptAction::AdjustVacancy {
                unit: UnitRef::Target,
                delta: -1,
            }],
        },
        ScriptBinding {
            event: EventKind::Transfer,
            concept: None,
            unit: None,
            actions: vec![
                ScriptAction::AdjustVacancy {
                    unit: UnitRef::Target,
                    delta: -1,
                },
                ScriptAction::AdjustVacancy {
                    unit: UnitRef::Source,
                    delta: 1,
                },
            ],
        },
        ScriptBinding {
            event: EventKind::Dismiss,
            concept: None,
            unit: None,
            actions: vec![ScriptAction::AdjustVacancy {
                unit: UnitRef::Source,
                delta: 1,
            }],
        },
        ScriptBinding {
            event: EventKind::ReEnroll,
            concept: None,
            unit: None,
            actions: vec![ScriptAction::AdjustVacancy {
                unit: UnitRef::Target,
                delta: -1,
            }],
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmployeeRecord {
    pub lifecycle: Lifecycle,
    pub unit: Option<String>,
}

/// Lifecycle, unit assignment and counters for every known employee and unit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PersonnelState {
    pub employees: BTreeMap<String, EmployeeRecord>,
    pub vacancies: BTreeMap<String, u32>,
    pub counters: BTreeMap<String, i64>,
}

impl PersonnelState {
    /// Canonical line-oriented form, used for the byte-exact atomicity
    /// checks.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (id, record) in &self.employees {
            out.push_str(&format!(
                "employee {id} {} {}\n",
                record.lifecycle,
                record.unit.as_deref().unwrap_or("-")
            ));
        }
        for (unit, vacancies) in &self.vacancies {
            out.push_str(&format!("vacancies {unit} {vacancies}\n"));
        }
        for (counter, value) in &self.counters {
            out.push_str(&format!("counter {counter} {value}\n"));
        }
        out
    }
}

/// Everything a dispatch may touch: the personnel ledger, the materialized
/// data objects, and the situation network scripts write frames into.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EngineState {
    pub personnel: PersonnelState,
    pub objects: BTreeMap<String, DataObject>,
    pub network: SemanticNetwork,
}

impl EngineState {
    pub fn canonical_text(&self) -> String {
        let mut out = self.personnel.canonical_text();
        for frame in &self.network.frames {
            out.push_str(&format!("frame {frame}\n"));
        }
        for object in self.objects.values() {
            out.push_str(&format!("object {} {}\n", object.individual.id, {
                let mut h = object.canonical_history();
                h.pop();
                h.replace('\n', " | ")
            }));
        }
        out
    }
}

/// One user-triggered event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub employee: String,
    pub unit: Option<String>,
}

impl Event {
    pub fn new(kind: EventKind, employee: impl Into<String>, unit: Option<String>) -> Self {
        Event {
            kind,
            employee: employee.into(),
            unit,
        }
    }
}

/// A successfully applied dispatch: the new state and which bindings fired,
/// by registry index, in firing order.
#[derive(Debug, Clone, PartialEq)]
pub struct DispatchOutcome {
    pub state: EngineState,
    pub fired: Vec<usize>,
    pub transition: Option<(Lifecycle, Lifecycle)>,
}

fn resolve_unit(
    reference: &UnitRef,
    source: Option<&str>,
    target: Option<&str>,
) -> Result<String, EventError> {
    match reference {
        UnitRef::Named(name) => Ok(name.clone()),
        UnitRef::Source => source.map(str::to_string).ok_or_else(|| {
            EventError::ScriptActionFailure("no source unit for this event".into())
        }),
        UnitRef::Target => target.map(str::to_string).ok_or_else(|| {
            EventError::ScriptActionFailure("no target unit for this event".into())
        }),
    }
}

fn resolve_arg(
    arg: &ArgRef,
    subject: &str,
    source: Option<&str>,
    target: Option<&str>,
) -> Result<Value, EventError> {
    Ok(match arg {
        ArgRef::Subject => Value::symbol(subject),
        ArgRef::Source => Value::symbol(resolve_unit(&UnitRef::Source, source, target)?),
        ArgRef::Target => Value::symbol(resolve_unit(&UnitRef::Target, source, target)?),
        ArgRef::Const(value) => value.clone(),
    })
}

/// Apply one event: access check, lifecycle legality, vacancy availability,
/// the lifecycle change itself, then every matching script in registration
/// order. Returns the next state; on any error the caller's state is
/// untouched.
pub fn dispatch(
    state: &EngineState,
    schema: &Schema,
    registry: &ScriptRegistry,
    session: &Session,
    profile: &AccessProfile,
    event: &Event,
) -> Result<DispatchOutcome, EventError> {
    let record = state.personnel.employees.get(&event.employee).ok_or_else(|| {
        EventError::UndeclaredEntity {
            kind: "employee",
            name: event.employee.clone(),
        }
    })?;
    let source_unit = record.unit.clone();
    let target_unit = event.unit.clone();
    if let Some(unit) = &target_unit {
        if !state.personnel.vacancies.contains_key(unit) {
            return Err(EventError::UndeclaredEntity {
                kind: "unit",
                name: unit.clone(),
            });
        }
    }

    // The subject's unit for the access decision: where the employee is
    // filed now, or the target for employees not yet assigned anywhere.
    let access_unit = source_unit
        .clone()
        .or_else(|| target_unit.clone())
        .ok_or_else(|| EventError::MissingTargetUnit(event.kind.to_string()))?;
    if let crate::access::Decision::Deny(reason) = authorize(
        session,
        profile,
        &AccessTarget::data(access_unit),
        AccessOp::Write,
    ) {
        return Err(EventError::AccessDenied(reason));
    }

    let from = record.lifecycle;
    let needs_target = matches!(
        event.kind,
        EventKind::Enroll | EventKind::Transfer | EventKind::ReEnroll
    );
    if needs_target && target_unit.is_none() {
        return Err(EventError::MissingTargetUnit(event.kind.to_string()));
    }
    let to = match (&event.kind, from) {
        (EventKind::Enroll, Lifecycle::Candidate) => Lifecycle::Enrolled,
        (EventKind::Transfer, Lifecycle::Enrolled) => Lifecycle::Enrolled,
        (EventKind::Dismiss, Lifecycle::Enrolled) => Lifecycle::Dismissed,
        (EventKind::ReEnroll, Lifecycle::Dismissed) => Lifecycle::Enrolled,
        (EventKind::Custom(_), current) => current,
        (kind, from) => {
            return Err(EventError::IllegalTransition {
                employee: event.employee.clone(),
                from,
                event: kind.to_string(),
            })
        }
    };

    // Availability check before anything moves.
    if needs_target {
        let unit = target_unit.as_deref().expect("checked above");
        let available = state.personnel.vacancies.get(unit).copied().unwrap_or(0);
        if available == 0 {
            return Err(EventError::VacancyExhausted(unit.to_string()));
        }
    }

    let mut next = state.clone();
    {
        let record = next
            .personnel
            .employees
            .get_mut(&event.employee)
            .expect("looked up above");
        record.lifecycle = to;
        match event.kind {
            EventKind::Enroll | EventKind::Transfer | EventKind::ReEnroll => {
                record.unit = target_unit.clone();
            }
            EventKind::Dismiss => {
                record.unit = None;
            }
            EventKind::Custom(_) => {}
        }
    }

    // Matching and firing, in registration order.
    let subject_concept = state
        .objects
        .get(&event.employee)
        .map(|object| object.concept.clone());
    let filter_unit = target_unit.clone().or_else(|| source_unit.clone());
    let mut fired = Vec::new();
    for (index, binding) in registry.bindings.iter().enumerate() {
        if binding.event != event.kind {
            continue;
        }
        if let Some(concept) = &binding.concept {
            if subject_concept.as_deref() != Some(concept.as_str()) {
                continue;
            }
        }
        if let Some(unit) = &binding.unit {
            if filter_unit.as_deref() != Some(unit.as_str()) {
                continue;
            }
        }
        for action in &binding.actions {
            apply_action(
                &mut next,
                schema,
                action,
                &event.employee,
                source_unit.as_deref(),
                target_unit.as_deref(),
            )?;
        }
        fired.push(index);
    }

    Ok(DispatchOutcome {
        state: next,
        fired,
        transition: Some((from, to)),
    })
}

fn apply_action(
    state: &mut EngineState,
    schema: &Schema,
    action: &ScriptAction,
    subject: &str,
    source: Option<&str>,
    target: Option<&str>,
) -> Result<(), EventError> {
    match action {
        ScriptAction::AdjustVacancy { unit, delta } => {
            let unit = resolve_unit(unit, source, target)?;
            let counter = state.personnel.vacancies.get(&unit).copied().ok_or_else(|| {
                EventError::ScriptActionFailure(format!("unit `{unit}` has no vacancy counter"))
            })?;
            let next = counter as i64 + delta;
            if next < 0 {
                return Err(EventError::ScriptActionFailure(format!(
                    "vacancy counter of `{unit}` would drop below zero"
                )));
            }
            state.personnel.vacancies.insert(unit, next as u32);
        }
        ScriptAction::AdjustCounter { counter, delta } => {
            *state.personnel.counters.entry(counter.clone()).or_insert(0) += delta;
        }
        ScriptAction::AddFrame {
            relation,
            subject: subject_ref,
            object,
        } => {
            let subject_value = resolve_arg(subject_ref, subject, source, target)?;
            let object_value = resolve_arg(object, subject, source, target)?;
            state.network = state
                .network
                .add_frame(relation.clone(), subject_value, object_value)
                .map_err(|err| EventError::ScriptActionFailure(err.to_string()))?;
        }
        ScriptAction::Transition { label, updates } => {
            let object = state.objects.get(subject).ok_or_else(|| {
                EventError::ScriptActionFailure(format!(
                    "employee `{subject}` has no data object to transition"
                ))
            })?;
            let concept = schema.concepts.get(&object.concept).ok_or_else(|| {
                EventError::ScriptActionFailure(format!(
                    "concept `{}` is not declared",
                    object.concept
                ))
            })?;
            let mut valuation = object.valuation().clone();
            for (attr, value) in updates {
                valuation.insert(attr.clone(), value.clone());
            }
            let next = transition_state(object, concept, &schema.sorts, valuation, label.clone())
                .map_err(|err| EventError::ScriptActionFailure(err.to_string()))?;
            state.objects.insert(subject.to_string(), next);
        }
        ScriptAction::Fail => {
            return Err(EventError::ScriptActionFailure("fail action".into()));
        }
    }
    Ok(())
}

/// Seed an engine state from a schema: vacancy counters from the org tree,
/// one employee record per individual (enrolled when its object carries a
/// `unit` attribute naming a declared unit, candidate otherwise), and the
/// document's ambient network.
pub fn initial_state(schema: &Schema, objects: BTreeMap<String, DataObject>) -> EngineState {
    let mut personnel = PersonnelState::default();
    let mut known_units = BTreeSet::new();
    if let Some(org) = &schema.org {
        for (unit, (vacancies, _)) in org.parameters() {
            known_units.insert(unit.clone());
            personnel.vacancies.insert(unit, vacancies);
        }
    }
    for individual in schema.individuals.values() {
        let unit = objects
            .get(&individual.id)
            .and_then(|object| object.valuation().get("unit"))
            .and_then(|value| value.as_symbol())
            .filter(|unit| known_units.contains(*unit))
            .map(str::to_string);
        let record = match unit {
            Some(unit) => EmployeeRecord {
                lifecycle: Lifecycle::Enrolled,
                unit: Some(unit),
            },
            None => EmployeeRecord {
                lifecycle: Lifecycle::Candidate,
                unit: None,
            },
        };
        personnel.employees.insert(individual.id.clone(), record);
    }
    EngineState {
        personnel,
        objects,
        network: schema.network(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::access::{Grants, OrgPosition, SessionManager};
    use crate::appraisal::{OrgStructure, OrgUnit};

    fn schema_fixture() -> Schema {
        let mut schema = Schema {
            org: Some(OrgStructure::new(
                OrgUnit::new("Corp")
                    .with_child(OrgUnit::new("IT").with_vacancies(1))
                    .with_child(OrgUnit::new("HR").with_vacancies(2)),
            )),
            ..Schema::default()
        };
        schema.relations.insert("enrolled_in".into());
        schema
    }

    fn state_fixture(schema: &Schema) -> EngineState {
        let mut state = initial_state(schema, BTreeMap::new());
        for id in ["ivanov", "petrov"] {
            state.personnel.employees.insert(
                id.into(),
                EmployeeRecord {
                    lifecycle: Lifecycle::Candidate,
                    unit: None,
                },
            );
        }
        state
    }

    fn session_fixture(schema: &Schema) -> (Session, AccessProfile) {
        let mut manager = SessionManager::new(["president".to_string()]);
        let grants = Grants {
            write_units: ["IT".to_string(), "HR".to_string()].into(),
            ..Grants::default()
        };
        manager
            .open_session(
                schema.org.as_ref().unwrap(),
                OrgPosition {
                    user: "root".into(),
                    unit: "Corp".into(),
                    role: "president".into(),
                    admin: true,
                },
                &grants,
            )
            .unwrap()
    }

    fn standard_registry(schema: &Schema) -> ScriptRegistry {
        let mut registry = ScriptRegistry::default();
        for binding in standard_bindings() {
            registry.register_script(schema, binding).unwrap();
        }
        registry
    }

    #[test]
    fn enroll_consumes_a_vacancy_and_fires_one_script() {
        let schema = schema_fixture();
        let state = state_fixture(&schema);
        let registry = standard_registry(&schema);
        let (session, profile) = session_fixture(&schema);
        let outcome = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap();
        assert_eq!(outcome.fired.len(), 1);
        assert_eq!(outcome.state.personnel.vacancies["IT"], 0);
        let record = &outcome.state.personnel.employees["ivanov"];
        assert_eq!(record.lifecycle, Lifecycle::Enrolled);
        assert_eq!(record.unit.as_deref(), Some("IT"));
    }

    #[test]
    fn dismissal_then_re_enrollment() {
        let schema = schema_fixture();
        let registry = standard_registry(&schema);
        let (session, profile) = session_fixture(&schema);
        let state = state_fixture(&schema);
        let s1 = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap()
        .state;
        let s2 = dispatch(
            &s1,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Dismiss, "ivanov", None),
        )
        .unwrap()
        .state;
        assert_eq!(s2.personnel.employees["ivanov"].lifecycle, Lifecycle::Dismissed);
        assert_eq!(s2.personnel.vacancies["IT"], 1);
        let s3 = dispatch(
            &s2,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::ReEnroll, "ivanov", Some("HR".into())),
        )
        .unwrap()
        .state;
        assert_eq!(s3.personnel.employees["ivanov"].lifecycle, Lifecycle::Enrolled);
        assert_eq!(s3.personnel.employees["ivanov"].unit.as_deref(), Some("HR"));
        assert_eq!(s3.personnel.vacancies["HR"], 1);
    }

    #[test]
    fn dispatch_without_matching_binding_still_transitions() {
        let schema = schema_fixture();
        let registry = ScriptRegistry::default();
        let (session, profile) = session_fixture(&schema);
        let state = state_fixture(&schema);
        let outcome = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap();
        assert!(outcome.fired.is_empty());
        assert_eq!(
            outcome.state.personnel.employees["ivanov"].lifecycle,
            Lifecycle::Enrolled
        );
        // No binding means no bookkeeping either.
        assert_eq!(outcome.state.personnel.vacancies["IT"], 1);
    }

    #[test]
    fn illegal_transitions_are_refused() {
        let schema = schema_fixture();
        let registry = standard_registry(&schema);
        let (session, profile) = session_fixture(&schema);
        let state = state_fixture(&schema);
        let err = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Dismiss, "ivanov", None),
        )
        .unwrap_err();
        assert!(matches!(err, EventError::MissingTargetUnit(_) | EventError::IllegalTransition { .. }));
        let err = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Transfer, "ivanov", Some("HR".into())),
        )
        .unwrap_err();
        assert_eq!(
            err,
            EventError::IllegalTransition {
                employee: "ivanov".into(),
                from: Lifecycle::Candidate,
                event: "transfer".into()
            }
        );
    }

    #[test]
    fn vacancy_exhaustion_blocks_enrollment() {
        let schema = schema_fixture();
        let registry = standard_registry(&schema);
        let (session, profile) = session_fixture(&schema);
        let state = state_fixture(&schema);
        let s1 = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap()
        .state;
        let err = dispatch(
            &s1,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "petrov", Some("IT".into())),
        )
        .unwrap_err();
        assert_eq!(err, EventError::VacancyExhausted("IT".into()));
    }

    #[test]
    fn transfer_consumes_target_then_releases_source() {
        let schema = schema_fixture();
        let registry = standard_registry(&schema);
        let (session, profile) = session_fixture(&schema);
        let state = state_fixture(&schema);
        let s1 = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap()
        .state;
        let s2 = dispatch(
            &s1,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Transfer, "ivanov", Some("HR".into())),
        )
        .unwrap()
        .state;
        assert_eq!(s2.personnel.vacancies["IT"], 1);
        assert_eq!(s2.personnel.vacancies["HR"], 1);
        assert_eq!(s2.personnel.employees["ivanov"].unit.as_deref(), Some("HR"));
    }

    #[test]
    fn failing_action_rolls_back_the_whole_dispatch() {
        let schema = schema_fixture();
        let mut registry = standard_registry(&schema);
        registry
            .register_script(
                &schema,
                ScriptBinding {
                    event: EventKind::Enroll,
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
            .unwrap();
        let (session, profile) = session_fixture(&schema);
        let state = state_fixture(&schema);
        let before = state.canonical_text();
        let err = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap_err();
        assert_eq!(err, EventError::ScriptActionFailure("fail action".into()));
        assert_eq!(state.canonical_text(), before);
    }

    #[test]
    fn duplicate_bindings_fire_twice() {
        let schema = schema_fixture();
        let mut registry = ScriptRegistry::default();
        let counting = ScriptBinding {
            event: EventKind::Enroll,
            concept: None,
            unit: None,
            actions: vec![ScriptAction::AdjustCounter {
                counter: "enrollments".into(),
                delta: 1,
            }],
        };
        registry.register_script(&schema, counting.clone()).unwrap();
        registry.register_script(&schema, counting).unwrap();
        let (session, profile) = session_fixture(&schema);
        let state = state_fixture(&schema);
        let outcome = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap();
        assert_eq!(outcome.fired, vec![0, 1]);
        assert_eq!(outcome.state.personnel.counters["enrollments"], 2);
    }

    #[test]
    fn identical_inputs_give_identical_fired_logs() {
        let schema = schema_fixture();
        let registry = standard_registry(&schema);
        let (session, profile) = session_fixture(&schema);
        let events = [
            Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
            Event::new(EventKind::Transfer, "ivanov", Some("HR".into())),
            Event::new(EventKind::Dismiss, "ivanov", None),
        ];
        let run = || {
            let mut state = state_fixture(&schema);
            let mut log = Vec::new();
            for event in &events {
                let outcome =
                    dispatch(&state, &schema, &registry, &session, &profile, event).unwrap();
                log.push(outcome.fired.clone());
                state = outcome.state;
            }
            (state, log)
        };
        let (state_a, log_a) = run();
        let (state_b, log_b) = run();
        assert_eq!(log_a, log_b);
        assert_eq!(state_a.canonical_text(), state_b.canonical_text());
    }

    #[test]
    fn binding_with_undeclared_references_is_rejected() {
        let schema = schema_fixture();
        let mut registry = ScriptRegistry::default();
        let err = registry
            .register_script(
                &schema,
                ScriptBinding {
                    event: EventKind::Enroll,
                    concept: Some("Ghost".into()),
                    unit: None,
                    actions: vec![ScriptAction::Fail],
                },
            )
            .unwrap_err();
        assert_eq!(
            err,
            EventError::UndeclaredEntity {
                kind: "concept",
                name: "Ghost".into()
            }
        );
        let err = registry
            .register_script(
                &schema,
                ScriptBinding {
                    event: EventKind::Custom("review".into()),
                    concept: None,
                    unit: None,
                    actions: vec![ScriptAction::Fail],
                },
            )
            .unwrap_err();
        assert_eq!(
            err,
            EventError::UndeclaredEntity {
                kind: "event",
                name: "review".into()
            }
        );
    }

    #[test]
    fn scripts_can_log_frames() {
        let schema = schema_fixture();
        let mut registry = standard_registry(&schema);
        registry
            .register_script(
                &schema,
                ScriptBinding {
                    event: EventKind::Enroll,
                    concept: None,
                    unit: Some("IT".into()),
                    actions: vec![ScriptAction::AddFrame {
                        relation: "enrolled_in".into(),
                        subject: ArgRef::Subject,
                        object: ArgRef::Target,
                    }],
                },
            )
            .unwrap();
        let (session, profile) = session_fixture(&schema);
        let mut state = state_fixture(&schema);
        // The network language must know the subject and unit symbols.
        state.network.language.constants.insert("ivanov".into());
        state.network.language.constants.insert("IT".into());
        let outcome = dispatch(
            &state,
            &schema,
            &registry,
            &session,
            &profile,
            &Event::new(EventKind::Enroll, "ivanov", Some("IT".into())),
        )
        .unwrap();
        let frame = crate::semnet::Frame::new(
            "enrolled_in",
            Value::symbol("ivanov"),
            Value::symbol("IT"),
        );
        assert!(outcome.state.network.holds(&frame).unwrap());
    }
}
