//! The runtime: a loaded bundle materialized into data objects, a live
//! situation network, a script registry and a session manager, with query
//! execution on top.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::access::{AccessError, AccessProfile, Session, SessionManager, SessionState};
use crate::appraisal::{
    evaluate_metric, AppraisalError, Employee, Functional, OrgStructure, OrgUnit,
};
use crate::eval::{EvalContext, EvalEnv, EvalError, Evaluator};
use crate::event::{
    dispatch, initial_state, standard_bindings, DispatchOutcome, EngineState, Event, EventError,
    ScriptRegistry,
};
use crate::model::make_data_object;
use crate::schema::{Bundle, Query};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("individual `{individual}` cannot be materialized: {source}")]
    Materialize {
        individual: String,
        source: crate::model::ModelError,
    },
    #[error(transparent)]
    Script(#[from] EventError),
    #[error(transparent)]
    Access(#[from] AccessError),
    #[error("user `{0}` is not declared")]
    UnknownUser(String),
}

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Appraisal(#[from] AppraisalError),
    #[error("`{0}` is not declared")]
    Unknown(String),
}

/// A loaded world. Schema and queries stay as parsed; objects, personnel
/// counters and the network evolve through dispatch.
pub struct Engine {
    pub bundle: Bundle,
    pub state: EngineState,
    pub registry: ScriptRegistry,
    sessions: SessionManager,
}

impl Engine {
    /// Materialize every individual into a state-0 data object, seed the
    /// personnel ledger and register the standard personnel bindings
    /// followed by the document's scripts, in source order.
    pub fn load(bundle: Bundle) -> Result<Engine, EngineError> {
        let mut objects = BTreeMap::new();
        for individual in bundle.schema.individuals.values() {
            let Some(concept) = bundle.schema.concepts.get(&individual.concept) else {
                // Individuals of concepts a component expects from its merge
                // base materialize only after the merge.
                continue;
            };
            let object = make_data_object(
                concept,
                &bundle.schema.sorts,
                individual.clone(),
                individual.identifying.clone(),
            )
            .map_err(|source| EngineError::Materialize {
                individual: individual.id.clone(),
                source,
            })?;
            objects.insert(individual.id.clone(), object);
        }
        let state = initial_state(&bundle.schema, objects);
        let mut registry = ScriptRegistry::default();
        for binding in standard_bindings() {
            registry.register_script(&bundle.schema, binding)?;
        }
        for script in &bundle.schema.scripts {
            registry.register_script(&bundle.schema, script.clone())?;
        }
        let sessions = SessionManager::new(
            bundle
                .schema
                .users
                .values()
                .map(|user| user.role.clone()),
        );
        Ok(Engine {
            bundle,
            state,
            registry,
            sessions,
        })
    }

    pub fn org(&self) -> OrgStructure {
        self.bundle
            .schema
            .org
            .clone()
            .unwrap_or_else(|| OrgStructure::new(OrgUnit::new("unassigned")))
    }

    /// Open a session for a declared user at the current org structure.
    pub fn open_session_for(
        &mut self,
        user: &str,
    ) -> Result<(Session, AccessProfile), EngineError> {
        let decl = self
            .bundle
            .schema
            .users
            .get(user)
            .cloned()
            .ok_or_else(|| EngineError::UnknownUser(user.to_string()))?;
        let org = self.org();
        Ok(self
            .sessions
            .open_session(&org, decl.position(), &decl.grants)?)
    }

    /// An unrestricted maintenance session covering every unit, used by
    /// batch replay when no user is named.
    pub fn open_system_session(&mut self) -> (Session, AccessProfile) {
        let org = self.org();
        let units = org.unit_names();
        let session = Session {
            id: u64::MAX,
            position: crate::access::OrgPosition {
                user: "<system>".into(),
                unit: org.root.name.clone(),
                role: "<system>".into(),
                admin: true,
            },
            state: SessionState::Open,
        };
        let profile = AccessProfile {
            session: session.id,
            read_scope: units.clone(),
            write_scope: units,
            metadata: crate::access::MetadataRights::ReadWrite,
            required_attributes: BTreeMap::new(),
        };
        (session, profile)
    }

    fn evaluator(&self) -> Evaluator<'_> {
        Evaluator::new(EvalEnv {
            schema: &self.bundle.schema,
            objects: &self.state.objects,
            network: &self.state.network,
        })
    }

    /// The employee population the functional ranges over: every data object
    /// carrying symbol-valued `labor_function` and `unit` attributes.
    pub fn population(&self) -> Vec<Employee> {
        let mut out = Vec::new();
        for (id, object) in &self.state.objects {
            let valuation = object.valuation();
            let labor_function = valuation
                .get("labor_function")
                .and_then(|value| value.as_symbol());
            let unit = valuation.get("unit").and_then(|value| value.as_symbol());
            if let (Some(labor_function), Some(unit)) = (labor_function, unit) {
                out.push(Employee::new(id.clone(), labor_function, unit));
            }
        }
        out
    }

    /// Execute one query, producing sorted display lines.
    pub fn run_query(&self, query: &Query) -> Result<Vec<String>, QueryError> {
        match query {
            Query::Extension(name) => self.extension_lines(name),
            Query::Comprehend(comp) => {
                let extension = self.evaluator().comprehend(comp, &EvalContext::current())?;
                Ok(extension.iter().map(|entity| entity.to_string()).collect())
            }
            Query::Individuate(comp) => {
                let entity = self.evaluator().individuate(comp, &EvalContext::current())?;
                Ok(vec![entity.to_string()])
            }
            Query::Functional(assignments) => {
                let org = self.org();
                let mut functional = Functional::general(&org, self.population());
                for assignment in assignments {
                    functional = functional.restrict(&org, assignment.clone())?;
                }
                Ok(functional.extension().iter().cloned().collect())
            }
            Query::Metric(name, assignments) => {
                let metric = self
                    .bundle
                    .schema
                    .metrics
                    .get(name)
                    .ok_or_else(|| QueryError::Unknown(name.clone()))?;
                let org = self.org();
                let evaluation = evaluate_metric(&org, metric, assignments)?;
                Ok(evaluation
                    .iter()
                    .map(|(key, value)| format!("{key} = {value}"))
                    .collect())
            }
        }
    }

    fn extension_lines(&self, name: &str) -> Result<Vec<String>, QueryError> {
        let schema = &self.bundle.schema;
        if let Some(sort) = schema.sorts.get(name) {
            return match &sort.carrier {
                crate::model::Carrier::Finite(members) => {
                    Ok(members.iter().map(|value| value.to_string()).collect())
                }
                crate::model::Carrier::Scalar(kind) => Ok(vec![format!("<scalar {kind}>")]),
            };
        }
        if schema.concepts.contains_key(name) {
            let mut ids: Vec<String> = schema
                .individuals_of(name)
                .iter()
                .map(|individual| individual.id.clone())
                .collect();
            ids.sort();
            return Ok(ids);
        }
        if schema.predicates.contains_key(name) {
            let extension = self.evaluator().predicate_extension(name)?;
            return Ok(extension.iter().map(|entity| entity.to_string()).collect());
        }
        if let Some(metric) = schema.metrics.get(name) {
            let evaluation = evaluate_metric(&self.org(), metric, &[])?;
            return Ok(evaluation
                .iter()
                .map(|(key, value)| format!("{key} = {value}"))
                .collect());
        }
        Err(QueryError::Unknown(name.to_string()))
    }

    /// Apply one event through the access and lifecycle machinery.
    pub fn dispatch_event(
        &mut self,
        session: &Session,
        profile: &AccessProfile,
        event: &Event,
    ) -> Result<DispatchOutcome, EventError> {
        let outcome = dispatch(
            &self.state,
            &self.bundle.schema,
            &self.registry,
            session,
            profile,
            event,
        )?;
        self.state = outcome.state.clone();
        Ok(outcome)
    }
}
