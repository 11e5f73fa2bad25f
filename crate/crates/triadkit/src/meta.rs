//! Stratified metadata: lifting formulas into level-(j+1) predicates by
//! compression, checking the level discipline, and the uniform read/write
//! vocabulary over data and metadata.
//!
//! Predicativity is strict: a predicate at level j+1 quantifies over level-j
//! entities and may reference only levels <= j. Extensions are cached per
//! evaluator; any write produces a new schema version and therefore a fresh
//! evaluator, which invalidates every cached extension below it.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::access::{authorize, AccessOp, AccessProfile, AccessTarget, DenyReason, Session};
use crate::eval::{EvalEnv, EvalError, Evaluator};
use crate::formula::{Comprehension, DomainRef};
use crate::model::{make_data_object, transition_state, DataObject, Individual, ModelError, Valuation};
use crate::schema::Schema;
use crate::semnet::SemanticNetwork;

/// Default bound on metadata levels. The lift notation is unbounded on
/// paper; in practice nothing above a couple of levels is ever exercised.
pub const DEFAULT_MAX_LEVEL: u32 = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetaError {
    #[error("`{referenced}` is a level-{referenced_level} entity; a level-{level} predicate may only reference levels below it")]
    LevelViolation {
        referenced: String,
        referenced_level: u32,
        level: u32,
    },
    #[error("name `{0}` is already declared")]
    NameCollision(String),
    #[error("level {level} exceeds the configured maximum of {max}")]
    LevelOutOfRange { level: u32, max: u32 },
    #[error("domain {domain} holds level-{actual} entities; lifting from level {expected} requires a level-{expected} domain")]
    DomainLevelMismatch {
        domain: String,
        expected: u32,
        actual: u32,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A metadata predicate: a compression of a formula over one level's
/// entities. Its extension is computed on demand and cached by the
/// evaluator for the schema version it was built against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPredicate {
    pub name: String,
    pub level: u32,
    pub body: Comprehension,
}

/// Level of the entities a domain reference ranges over, given a schema.
pub fn domain_level(schema: &Schema, domain: &DomainRef) -> Option<u32> {
    match domain {
        DomainRef::Values(_) | DomainRef::Sort(_) | DomainRef::AllConcepts => Some(0),
        DomainRef::Concept(name) => schema.concepts.get(name).map(|c| c.level),
        DomainRef::Predicate(name) => schema
            .predicates
            .get(name)
            .map(|p| p.level.saturating_sub(1)),
        DomainRef::Level(level) => Some(*level),
    }
}

/// Lift a formula over level-j entities into a fresh level-(j+1) predicate.
pub fn lift_level(
    schema: &Schema,
    j: u32,
    body: Comprehension,
    name: impl Into<String>,
    max_level: u32,
) -> Result<MetaPredicate, MetaError> {
    let name = name.into();
    let level = j + 1;
    if level > max_level {
        return Err(MetaError::LevelOutOfRange { level, max: max_level });
    }
    if schema.entity_level(&name).is_some() {
        return Err(MetaError::NameCollision(name));
    }
    let actual = domain_level(schema, &body.domain).unwrap_or(0);
    if actual != j {
        return Err(MetaError::DomainLevelMismatch {
            domain: body.domain.to_string(),
            expected: j,
            actual,
        });
    }
    for symbol in body.body.referenced_symbols() {
        if let Some(referenced_level) = schema.entity_level(&symbol) {
            if referenced_level > j {
                return Err(MetaError::LevelViolation {
                    referenced: symbol,
                    referenced_level,
                    level,
                });
            }
        }
    }
    Ok(MetaPredicate { name, level, body })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// The body references an entity at the predicate's own level or above.
    Reference,
    /// The bound variable does not range over the level directly below.
    Domain,
    /// The predicate sits at level 0, which holds only data concepts.
    InvalidLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StratificationViolation {
    pub predicate: String,
    pub predicate_level: u32,
    pub referenced: String,
    pub referenced_level: u32,
    pub kind: ViolationKind,
}

impl fmt::Display for StratificationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::Reference => write!(
                f,
                "level-{} predicate `{}` references level-{} entity `{}`",
                self.predicate_level, self.predicate, self.referenced_level, self.referenced
            ),
            ViolationKind::Domain => write!(
                f,
                "level-{} predicate `{}` ranges over level-{} domain `{}`",
                self.predicate_level, self.predicate, self.referenced_level, self.referenced
            ),
            ViolationKind::InvalidLevel => write!(
                f,
                "predicate `{}` is declared at level 0, which holds only data concepts",
                self.predicate
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StratificationReport {
    pub violations: Vec<StratificationViolation>,
}

impl StratificationReport {
    pub fn is_stratified(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for StratificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for violation in &self.violations {
            writeln!(f, "{violation}")?;
        }
        Ok(())
    }
}

/// Scan every declared predicate for level-discipline violations. The empty
/// report is the definition of a stratified schema.
pub fn check_stratification(schema: &Schema) -> StratificationReport {
    let mut violations = Vec::new();
    for predicate in schema.predicates.values() {
        if predicate.level == 0 {
            violations.push(StratificationViolation {
                predicate: predicate.name.clone(),
                predicate_level: 0,
                referenced: predicate.name.clone(),
                referenced_level: 0,
                kind: ViolationKind::InvalidLevel,
            });
            continue;
        }
        let expected_domain = predicate.level - 1;
        match domain_level(schema, &predicate.body.domain) {
            Some(actual) if actual == expected_domain => {}
            Some(actual) => violations.push(StratificationViolation {
                predicate: predicate.name.clone(),
                predicate_level: predicate.level,
                referenced: predicate.body.domain.to_string(),
                referenced_level: actual,
                kind: ViolationKind::Domain,
            }),
            // Unresolvable domains are integrity findings, not level issues.
            None => {}
        }
        for symbol in predicate.body.body.referenced_symbols() {
            if let Some(referenced_level) = schema.entity_level(&symbol) {
                if referenced_level >= predicate.level {
                    violations.push(StratificationViolation {
                        predicate: predicate.name.clone(),
                        predicate_level: predicate.level,
                        referenced: symbol,
                        referenced_level,
                        kind: ViolationKind::Reference,
                    });
                }
            }
        }
    }
    violations.sort_by(|a, b| {
        (&a.predicate, &a.referenced).cmp(&(&b.predicate, &b.referenced))
    });
    StratificationReport { violations }
}

/// Target of a uniform operation: a concept's data or a meta-predicate, filed
/// under an org unit for the access decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UniformTarget {
    Data { concept: String, unit: String },
    Metadata { predicate: String, unit: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformOp {
    Read,
    Write,
}

/// Payload of a uniform write.
#[derive(Debug, Clone, PartialEq)]
pub enum UniformPayload {
    None,
    /// Create or transition one individual's data object.
    DataEntry {
        individual: String,
        valuation: Valuation,
        label: String,
    },
    /// Define or replace a meta-predicate.
    Predicate { level: u32, body: Comprehension },
}

#[derive(Debug, Clone, PartialEq)]
pub enum UniformResult {
    /// Sorted display lines, one per extension member.
    Extension(Vec<String>),
    Written,
}

#[derive(Debug, Error, PartialEq)]
pub enum UniformError {
    #[error("access denied: {0}")]
    AccessDenied(DenyReason),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("target `{0}` is not declared")]
    UnknownTarget(String),
    #[error("payload does not fit the target: {0}")]
    BadPayload(String),
    #[error("profile requires attribute `{attribute}` on every `{concept}` write")]
    MissingMandatoryField { concept: String, attribute: String },
}

/// Read or write data and metadata through one verb vocabulary. Access rules
/// apply to both kinds; only the metadata write path demands administrative
/// rights, which `authorize` enforces through the profile.
#[allow(clippy::too_many_arguments)]
pub fn uniform_manipulate(
    schema: &mut Schema,
    objects: &mut BTreeMap<String, DataObject>,
    network: &SemanticNetwork,
    session: &Session,
    profile: &AccessProfile,
    target: &UniformTarget,
    op: UniformOp,
    payload: UniformPayload,
) -> Result<UniformResult, UniformError> {
    let (access_target, access_op) = match (target, op) {
        (UniformTarget::Data { unit, .. }, UniformOp::Read) => {
            (AccessTarget::data(unit.clone()), AccessOp::Read)
        }
        (UniformTarget::Data { unit, .. }, UniformOp::Write) => {
            (AccessTarget::data(unit.clone()), AccessOp::Write)
        }
        (UniformTarget::Metadata { unit, .. }, UniformOp::Read) => {
            (AccessTarget::metadata(unit.clone()), AccessOp::Read)
        }
        (UniformTarget::Metadata { unit, .. }, UniformOp::Write) => {
            (AccessTarget::metadata(unit.clone()), AccessOp::Write)
        }
    };
    if let crate::access::Decision::Deny(reason) =
        authorize(session, profile, &access_target, access_op)
    {
        return Err(UniformError::AccessDenied(reason));
    }

    match (target, op) {
        (UniformTarget::Data { concept, .. }, UniformOp::Read) => {
            if !schema.concepts.contains_key(concept) {
                return Err(UniformError::UnknownTarget(concept.clone()));
            }
            let mut lines: Vec<String> = schema
                .individuals_of(concept)
                .iter()
                .map(|individual| individual.id.clone())
                .collect();
            lines.sort();
            Ok(UniformResult::Extension(lines))
        }
        (UniformTarget::Metadata { predicate, .. }, UniformOp::Read) => {
            let env = EvalEnv {
                schema,
                objects,
                network,
            };
            let evaluator = Evaluator::new(env);
            let extension = evaluator.predicate_extension(predicate)?;
            let lines: Vec<String> = extension.iter().map(|e| e.to_string()).collect();
            Ok(UniformResult::Extension(lines))
        }
        (UniformTarget::Data { concept, .. }, UniformOp::Write) => {
            let UniformPayload::DataEntry {
                individual,
                valuation,
                label,
            } = payload
            else {
                return Err(UniformError::BadPayload(
                    "data writes carry a data entry".into(),
                ));
            };
            let concept_decl = schema
                .concepts
                .get(concept)
                .cloned()
                .ok_or_else(|| UniformError::UnknownTarget(concept.clone()))?;
            if let Some(required) = profile.required_attributes.get(concept) {
                for attribute in required {
                    if !valuation.contains_key(attribute) {
                        return Err(UniformError::MissingMandatoryField {
                            concept: concept.clone(),
                            attribute: attribute.clone(),
                        });
                    }
                }
            }
            match objects.get(&individual) {
                Some(existing) => {
                    let next = transition_state(
                        existing,
                        &concept_decl,
                        &schema.sorts,
                        valuation,
                        label,
                    )?;
                    objects.insert(individual, next);
                }
                None => {
                    let subject = Individual::new(individual.clone(), concept.clone());
                    let object =
                        make_data_object(&concept_decl, &schema.sorts, subject.clone(), valuation)?;
                    schema.individuals.insert(individual.clone(), subject);
                    objects.insert(individual, object);
                }
            }
            Ok(UniformResult::Written)
        }
        (UniformTarget::Metadata { predicate, .. }, UniformOp::Write) => {
            let UniformPayload::Predicate { level, body } = payload else {
                return Err(UniformError::BadPayload(
                    "metadata writes carry a predicate definition".into(),
                ));
            };
            if level == 0 {
                return Err(UniformError::Meta(MetaError::LevelOutOfRange {
                    level: 0,
                    max: DEFAULT_MAX_LEVEL,
                }));
            }
            // Replacing an existing predicate is a write, not a collision.
            let previous = schema.predicates.remove(predicate);
            match lift_level(schema, level - 1, body, predicate.clone(), DEFAULT_MAX_LEVEL) {
                Ok(lifted) => {
                    schema.predicates.insert(predicate.clone(), lifted);
                    Ok(UniformResult::Written)
                }
                Err(err) => {
                    if let Some(previous) = previous {
                        schema.predicates.insert(predicate.clone(), previous);
                    }
                    Err(err.into())
                }
            }
        }
    }
}
