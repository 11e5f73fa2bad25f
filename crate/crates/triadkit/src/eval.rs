//! The evaluation calculus: mapping application, formula truth, compression
//! (comprehension) and individuation with the uniqueness requirement.
//!
//! Truth is two-valued and judged at one state index; unknown symbols are
//! errors, never a third truth value. Evaluation is pure: the same inputs
//! give the same answers, and an `Evaluator` may be shared across queries
//! against one immutable schema. Meta-predicate extensions are cached inside
//! the evaluator; a write produces a new schema and therefore a new
//! evaluator, which is what invalidates the cache.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::formula::{CmpOp, Comprehension, DomainRef, Formula, Term};
use crate::model::DataObject;
use crate::schema::Schema;
use crate::semnet::{Frame, SemanticNetwork};
use crate::value::Value;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("argument `{value}` lies outside the mapping's domain")]
    OutsideDomain { value: String },
    #[error("no element of the domain satisfies the formula")]
    NoSatisfier,
    #[error("{0} elements satisfy the formula; individuation requires exactly one")]
    NotUnique(usize),
    #[error("symbol `{symbol}` cannot be resolved")]
    UnboundSymbol { symbol: String },
    #[error("values `{lhs}` and `{rhs}` are not comparable")]
    SortMismatch { lhs: String, rhs: String },
    #[error("individual `{individual}` has no state {ordinal}")]
    StateNotFound { individual: String, ordinal: u64 },
    #[error("predicate `{0}` is defined in terms of itself")]
    PredicateCycle(String),
    #[error("sort `{0}` has a scalar carrier and cannot serve as a finite domain")]
    InfiniteDomain(String),
    #[error("mapping is malformed: {0}")]
    MalformedMapping(String),
    #[error("`{pred}` expects {expected} arguments, got {actual}")]
    ArityViolation {
        pred: String,
        expected: usize,
        actual: usize,
    },
}

/// A finite total mapping `f : A -> B`, the carrier of `B^A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingValue {
    pub domain: BTreeSet<Value>,
    pub codomain: BTreeSet<Value>,
    pub graph: BTreeMap<Value, Value>,
}

impl MappingValue {
    /// Build a mapping, checking totality on the domain and that every image
    /// lies in the codomain.
    pub fn new(
        domain: BTreeSet<Value>,
        codomain: BTreeSet<Value>,
        graph: BTreeMap<Value, Value>,
    ) -> Result<Self, EvalError> {
        for key in &domain {
            match graph.get(key) {
                None => {
                    return Err(EvalError::MalformedMapping(format!(
                        "no image for `{key}`"
                    )))
                }
                Some(image) if !codomain.contains(image) => {
                    return Err(EvalError::MalformedMapping(format!(
                        "image `{image}` of `{key}` is outside the codomain"
                    )));
                }
                Some(_) => {}
            }
        }
        for key in graph.keys() {
            if !domain.contains(key) {
                return Err(EvalError::MalformedMapping(format!(
                    "graph key `{key}` is outside the domain"
                )));
            }
        }
        Ok(MappingValue {
            domain,
            codomain,
            graph,
        })
    }

    pub fn identity(domain: BTreeSet<Value>) -> Self {
        let graph = domain.iter().map(|v| (v.clone(), v.clone())).collect();
        MappingValue {
            codomain: domain.clone(),
            domain,
            graph,
        }
    }
}

/// `|<f, x>| = f(x)`: evaluation is graph lookup, with no side effects.
pub fn apply(f: &MappingValue, x: &Value) -> Result<Value, EvalError> {
    f.graph
        .get(x)
        .cloned()
        .ok_or_else(|| EvalError::OutsideDomain {
            value: x.to_string(),
        })
}

/// A member of some level's entity population.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Entity {
    Value(Value),
    Individual(String),
    Concept(String),
    Predicate(String),
}

impl Entity {
    /// The constant a term naming this entity denotes.
    pub fn as_value(&self) -> Value {
        match self {
            Entity::Value(v) => v.clone(),
            Entity::Individual(id) => Value::symbol(id.clone()),
            Entity::Concept(name) | Entity::Predicate(name) => Value::symbol(name.clone()),
        }
    }
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Value(v) => write!(f, "{v}"),
            Entity::Individual(id) => f.write_str(id),
            Entity::Concept(name) | Entity::Predicate(name) => f.write_str(name),
        }
    }
}

/// Which state index attribute projections are judged at.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StateSelector {
    #[default]
    Current,
    At(u64),
}

/// Evaluation context: the state index plus named bindings for the bound
/// variable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EvalContext {
    pub state: StateSelector,
    pub bindings: BTreeMap<String, Entity>,
}

impl EvalContext {
    pub fn current() -> Self {
        EvalContext::default()
    }

    pub fn at_state(ordinal: u64) -> Self {
        EvalContext {
            state: StateSelector::At(ordinal),
            bindings: BTreeMap::new(),
        }
    }
}

/// Everything evaluation reads: the schema, the materialized data objects,
/// and the situation network frame atoms are judged against.
#[derive(Clone, Copy)]
pub struct EvalEnv<'a> {
    pub schema: &'a Schema,
    pub objects: &'a BTreeMap<String, DataObject>,
    pub network: &'a SemanticNetwork,
}

/// Shared evaluation state for one schema version: caches meta-predicate
/// extensions and guards against cyclic predicate definitions.
pub struct Evaluator<'a> {
    pub env: EvalEnv<'a>,
    extension_cache: RefCell<BTreeMap<String, BTreeSet<Entity>>>,
    in_progress: RefCell<BTreeSet<String>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(env: EvalEnv<'a>) -> Self {
        Evaluator {
            env,
            extension_cache: RefCell::new(BTreeMap::new()),
            in_progress: RefCell::new(BTreeSet::new()),
        }
    }

    /// The entity population a domain reference denotes.
    pub fn domain_entities(&self, domain: &DomainRef) -> Result<Vec<Entity>, EvalError> {
        match domain {
            DomainRef::Values(values) => {
                Ok(values.iter().cloned().map(Entity::Value).collect())
            }
            DomainRef::Sort(name) => {
                let sort = self
                    .env
                    .schema
                    .sorts
                    .get(name)
                    .ok_or_else(|| EvalError::UnboundSymbol {
                        symbol: name.clone(),
                    })?;
                match &sort.carrier {
                    crate::model::Carrier::Finite(members) => {
                        Ok(members.iter().cloned().map(Entity::Value).collect())
                    }
                    crate::model::Carrier::Scalar(_) => {
                        Err(EvalError::InfiniteDomain(name.clone()))
                    }
                }
            }
            DomainRef::Concept(name) => {
                if !self.env.schema.concepts.contains_key(name) {
                    return Err(EvalError::UnboundSymbol {
                        symbol: name.clone(),
                    });
                }
                Ok(self
                    .env
                    .schema
                    .individuals_of(name)
                    .into_iter()
                    .map(|individual| Entity::Individual(individual.id.clone()))
                    .collect())
            }
            DomainRef::AllConcepts => Ok(self
                .env
                .schema
                .concepts
                .values()
                .filter(|concept| concept.level == 0)
                .map(|concept| Entity::Concept(concept.name.clone()))
                .collect()),
            DomainRef::Predicate(name) => {
                Ok(self.predicate_extension(name)?.into_iter().collect())
            }
            DomainRef::Level(level) => {
                let mut out: Vec<Entity> = self
                    .env
                    .schema
                    .predicates
                    .values()
                    .filter(|p| p.level == *level)
                    .map(|p| Entity::Predicate(p.name.clone()))
                    .collect();
                out.extend(
                    self.env
                        .schema
                        .concepts
                        .values()
                        .filter(|c| c.level == *level && *level > 0)
                        .map(|c| Entity::Concept(c.name.clone())),
                );
                Ok(out)
            }
        }
    }

    /// The stratification level of a domain's members.
    pub fn domain_level(&self, domain: &DomainRef) -> Result<u32, EvalError> {
        match domain {
            DomainRef::Values(_) | DomainRef::Sort(_) | DomainRef::AllConcepts => Ok(0),
            DomainRef::Concept(name) => self
                .env
                .schema
                .concepts
                .get(name)
                .map(|c| c.level)
                .ok_or_else(|| EvalError::UnboundSymbol {
                    symbol: name.clone(),
                }),
            DomainRef::Predicate(name) => self
                .env
                .schema
                .predicates
                .get(name)
                .map(|p| p.level.saturating_sub(1))
                .ok_or_else(|| EvalError::UnboundSymbol {
                    symbol: name.clone(),
                }),
            DomainRef::Level(level) => Ok(*level),
        }
    }

    /// Compute (or fetch) the extension of a declared meta-predicate.
    pub fn predicate_extension(&self, name: &str) -> Result<BTreeSet<Entity>, EvalError> {
        if let Some(cached) = self.extension_cache.borrow().get(name) {
            return Ok(cached.clone());
        }
        let predicate =
            self.env
                .schema
                .predicates
                .get(name)
                .ok_or_else(|| EvalError::UnboundSymbol {
                    symbol: name.to_string(),
                })?;
        if !self.in_progress.borrow_mut().insert(name.to_string()) {
            return Err(EvalError::PredicateCycle(name.to_string()));
        }
        let result = self.comprehend(&predicate.body, &EvalContext::current());
        self.in_progress.borrow_mut().remove(name);
        let extension = result?;
        self.extension_cache
            .borrow_mut()
            .insert(name.to_string(), extension.clone());
        Ok(extension)
    }

    /// `{ x : D | phi }`: the members of the domain satisfying the body.
    /// An empty domain gives the empty extension rather than an error.
    pub fn comprehend(
        &self,
        comp: &Comprehension,
        ctx: &EvalContext,
    ) -> Result<BTreeSet<Entity>, EvalError> {
        let mut out = BTreeSet::new();
        for entity in self.domain_entities(&comp.domain)? {
            if self.evaluate_formula(&comp.body, &comp.var, &entity, ctx)? {
                out.insert(entity);
            }
        }
        Ok(out)
    }

    /// Individuation: the unique domain member satisfying the body. Zero
    /// satisfiers and two or more are both errors; the error carries the
    /// match count.
    pub fn individuate(
        &self,
        comp: &Comprehension,
        ctx: &EvalContext,
    ) -> Result<Entity, EvalError> {
        let mut matches: Vec<Entity> = Vec::new();
        for entity in self.domain_entities(&comp.domain)? {
            if self.evaluate_formula(&comp.body, &comp.var, &entity, ctx)? {
                matches.push(entity);
            }
        }
        match matches.len() {
            0 => Err(EvalError::NoSatisfier),
            1 => Ok(matches.pop().expect("one element")),
            n => Err(EvalError::NotUnique(n)),
        }
    }

    fn entity_for_symbol(&self, symbol: &str) -> Option<Entity> {
        if self.env.schema.individuals.contains_key(symbol) {
            Some(Entity::Individual(symbol.to_string()))
        } else if self.env.schema.concepts.contains_key(symbol) {
            Some(Entity::Concept(symbol.to_string()))
        } else if self.env.schema.predicates.contains_key(symbol) {
            Some(Entity::Predicate(symbol.to_string()))
        } else {
            None
        }
    }

    fn resolve_entity(
        &self,
        term: &Term,
        var: &str,
        entity: &Entity,
        ctx: &EvalContext,
    ) -> Result<Entity, EvalError> {
        match term {
            Term::Var(name) if name == var => Ok(entity.clone()),
            Term::Var(name) => {
                ctx.bindings
                    .get(name)
                    .cloned()
                    .ok_or_else(|| EvalError::UnboundSymbol {
                        symbol: name.clone(),
                    })
            }
            Term::Const(Value::Symbol(symbol)) => self
                .entity_for_symbol(symbol)
                .or_else(|| Some(Entity::Value(Value::symbol(symbol.clone()))))
                .ok_or_else(|| EvalError::UnboundSymbol {
                    symbol: symbol.clone(),
                }),
            Term::Const(value) => Ok(Entity::Value(value.clone())),
            Term::Attr(..) => Ok(Entity::Value(self.term_value(term, var, entity, ctx)?)),
        }
    }

    fn term_value(
        &self,
        term: &Term,
        var: &str,
        entity: &Entity,
        ctx: &EvalContext,
    ) -> Result<Value, EvalError> {
        match term {
            Term::Const(value) => Ok(value.clone()),
            Term::Var(name) if name == var => Ok(entity.as_value()),
            Term::Var(name) => ctx
                .bindings
                .get(name)
                .map(Entity::as_value)
                .ok_or_else(|| EvalError::UnboundSymbol {
                    symbol: name.clone(),
                }),
            Term::Attr(name, attr) => {
                let subject = if name == var {
                    entity.clone()
                } else {
                    ctx.bindings
                        .get(name)
                        .cloned()
                        .ok_or_else(|| EvalError::UnboundSymbol {
                            symbol: name.clone(),
                        })?
                };
                let id = match subject {
                    Entity::Individual(id) => id,
                    other => {
                        return Err(EvalError::UnboundSymbol {
                            symbol: format!("{other}.{attr}"),
                        })
                    }
                };
                let object =
                    self.env
                        .objects
                        .get(&id)
                        .ok_or_else(|| EvalError::UnboundSymbol {
                            symbol: id.clone(),
                        })?;
                let valuation = match ctx.state {
                    StateSelector::Current => object.valuation(),
                    StateSelector::At(ordinal) => object.valuation_at(ordinal).ok_or(
                        EvalError::StateNotFound {
                            individual: id.clone(),
                            ordinal,
                        },
                    )?,
                };
                valuation
                    .get(attr)
                    .cloned()
                    .ok_or_else(|| EvalError::UnboundSymbol {
                        symbol: format!("{id}.{attr}"),
                    })
            }
        }
    }

    /// Compositional truth at the context's state index.
    pub fn evaluate_formula(
        &self,
        formula: &Formula,
        var: &str,
        entity: &Entity,
        ctx: &EvalContext,
    ) -> Result<bool, EvalError> {
        match formula {
            Formula::Truth(b) => Ok(*b),
            Formula::Not(inner) => Ok(!self.evaluate_formula(inner, var, entity, ctx)?),
            Formula::And(a, b) => Ok(self.evaluate_formula(a, var, entity, ctx)?
                && self.evaluate_formula(b, var, entity, ctx)?),
            Formula::Or(a, b) => Ok(self.evaluate_formula(a, var, entity, ctx)?
                || self.evaluate_formula(b, var, entity, ctx)?),
            Formula::Compare { lhs, op, rhs } => {
                let left = self.term_value(lhs, var, entity, ctx)?;
                let right = self.term_value(rhs, var, entity, ctx)?;
                match op {
                    CmpOp::Eq => Ok(left.same_value(&right)),
                    CmpOp::Ne => Ok(!left.same_value(&right)),
                    CmpOp::Lt | CmpOp::Gt => {
                        let ordering = left.compare(&right).ok_or_else(|| {
                            EvalError::SortMismatch {
                                lhs: left.to_string(),
                                rhs: right.to_string(),
                            }
                        })?;
                        Ok(match op {
                            CmpOp::Lt => ordering == std::cmp::Ordering::Less,
                            _ => ordering == std::cmp::Ordering::Greater,
                        })
                    }
                }
            }
            Formula::Member { lhs, set } => {
                let left = self.term_value(lhs, var, entity, ctx)?;
                Ok(set.iter().any(|member| left.same_value(member)))
            }
            Formula::Atom { pred, args } => self.evaluate_atom(pred, args, var, entity, ctx),
        }
    }

    fn evaluate_atom(
        &self,
        pred: &str,
        args: &[Term],
        var: &str,
        entity: &Entity,
        ctx: &EvalContext,
    ) -> Result<bool, EvalError> {
        let expect_arity = |expected: usize| {
            if args.len() == expected {
                Ok(())
            } else {
                Err(EvalError::ArityViolation {
                    pred: pred.to_string(),
                    expected,
                    actual: args.len(),
                })
            }
        };
        match pred {
            // Builtin structural vocabulary over schema entities.
            "has_attr" => {
                expect_arity(2)?;
                let concept = self.resolve_concept(&args[0], var, entity, ctx)?;
                let attr = match self.term_value(&args[1], var, entity, ctx)? {
                    Value::Text(text) => text,
                    other => {
                        return Err(EvalError::UnboundSymbol {
                            symbol: other.to_string(),
                        })
                    }
                };
                Ok(concept.has_attribute(&attr))
            }
            "has_attr_sort" => {
                expect_arity(2)?;
                let concept = self.resolve_concept(&args[0], var, entity, ctx)?;
                let sort = self.term_value(&args[1], var, entity, ctx)?;
                let sort = sort.as_symbol().ok_or_else(|| EvalError::UnboundSymbol {
                    symbol: sort.to_string(),
                })?;
                Ok(concept
                    .attributes
                    .iter()
                    .any(|(_, attr_sort)| attr_sort == sort))
            }
            "nonempty" => {
                expect_arity(1)?;
                match self.resolve_entity(&args[0], var, entity, ctx)? {
                    Entity::Predicate(name) => {
                        Ok(!self.predicate_extension(&name)?.is_empty())
                    }
                    Entity::Concept(name) => Ok(!self.env.schema.individuals_of(&name).is_empty()),
                    other => Err(EvalError::UnboundSymbol {
                        symbol: other.to_string(),
                    }),
                }
            }
            "mentions" => {
                expect_arity(2)?;
                let subject = self.resolve_entity(&args[0], var, entity, ctx)?;
                let symbol = self.term_value(&args[1], var, entity, ctx)?;
                let symbol = symbol
                    .as_symbol()
                    .ok_or_else(|| EvalError::UnboundSymbol {
                        symbol: symbol.to_string(),
                    })?
                    .to_string();
                match subject {
                    Entity::Predicate(name) => {
                        let predicate = self.env.schema.predicates.get(&name).ok_or_else(|| {
                            EvalError::UnboundSymbol {
                                symbol: name.clone(),
                            }
                        })?;
                        Ok(predicate.body.body.referenced_symbols().contains(&symbol)
                            || matches!(&predicate.body.domain, DomainRef::Sort(d) | DomainRef::Concept(d) | DomainRef::Predicate(d) if *d == symbol))
                    }
                    other => Err(EvalError::UnboundSymbol {
                        symbol: other.to_string(),
                    }),
                }
            }
            _ if self.env.schema.relations.contains(pred) => {
                expect_arity(2)?;
                let subject = self.term_value(&args[0], var, entity, ctx)?;
                let object = self.term_value(&args[1], var, entity, ctx)?;
                let frame = Frame::new(pred, subject, object);
                self.env
                    .network
                    .holds(&frame)
                    .map_err(|_| EvalError::UnboundSymbol {
                        symbol: frame.to_string(),
                    })
            }
            _ if self.env.schema.predicates.contains_key(pred) => {
                expect_arity(1)?;
                let member = self.resolve_entity(&args[0], var, entity, ctx)?;
                Ok(self.predicate_extension(pred)?.contains(&member))
            }
            _ => Err(EvalError::UnboundSymbol {
                symbol: pred.to_string(),
            }),
        }
    }

    fn resolve_concept(
        &self,
        term: &Term,
        var: &str,
        entity: &Entity,
        ctx: &EvalContext,
    ) -> Result<&crate::model::Concept, EvalError> {
        let resolved = self.resolve_entity(term, var, entity, ctx)?;
        let name = match &resolved {
            Entity::Concept(name) => name.clone(),
            Entity::Value(Value::Symbol(name)) => name.clone(),
            other => {
                return Err(EvalError::UnboundSymbol {
                    symbol: other.to_string(),
                })
            }
        };
        self.env
            .schema
            .concepts
            .get(&name)
            .ok_or(EvalError::UnboundSymbol { symbol: name })
    }
}

/// One-shot formula evaluation without building an `Evaluator` by hand.
pub fn evaluate_formula(
    env: EvalEnv<'_>,
    formula: &Formula,
    var: &str,
    entity: &Entity,
    ctx: &EvalContext,
) -> Result<bool, EvalError> {
    Evaluator::new(env).evaluate_formula(formula, var, entity, ctx)
}

/// One-shot comprehension.
pub fn comprehend(
    env: EvalEnv<'_>,
    comp: &Comprehension,
    ctx: &EvalContext,
) -> Result<BTreeSet<Entity>, EvalError> {
    Evaluator::new(env).comprehend(comp, ctx)
}

/// One-shot individuation.
pub fn individuate(
    env: EvalEnv<'_>,
    comp: &Comprehension,
    ctx: &EvalContext,
) -> Result<Entity, EvalError> {
    Evaluator::new(env).individuate(comp, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_data_object, Concept, Individual, Sort, Valuation};
    use crate::semnet::NetworkLanguage;

    fn empty_network() -> SemanticNetwork {
        SemanticNetwork::default()
    }

    fn env_fixture() -> (Schema, BTreeMap<String, DataObject>, SemanticNetwork) {
        let mut schema = Schema::default();
        schema.sorts.insert(
            "Position".into(),
            Sort::finite(
                "Position",
                [
                    Value::symbol("General_Director"),
                    Value::symbol("Department_Director"),
                    Value::symbol("Clerk"),
                ],
            ),
        );
        let concept = Concept::new("Employee", vec![("position".into(), "Position".into())]);
        schema.concepts.insert("Employee".into(), concept.clone());
        let mut objects = BTreeMap::new();
        for (id, position) in [
            ("e1", "General_Director"),
            ("e2", "Clerk"),
            ("e3", "Clerk"),
        ] {
            let individual = Individual::new(id, "Employee");
            schema
                .individuals
                .insert(id.to_string(), individual.clone());
            let valuation: Valuation = [("position".into(), Value::symbol(position))].into();
            let object =
                make_data_object(&concept, &schema.sorts, individual, valuation).unwrap();
            objects.insert(id.to_string(), object);
        }
        (schema, objects, empty_network())
    }

    fn mapping_fixture() -> MappingValue {
        MappingValue::new(
            [Value::symbol("development"), Value::symbol("support")].into(),
            [Value::symbol("z_devel"), Value::symbol("z_support")].into(),
            [
                (Value::symbol("development"), Value::symbol("z_devel")),
                (Value::symbol("support"), Value::symbol("z_support")),
            ]
            .into(),
        )
        .unwrap()
    }

    #[test]
    fn apply_is_graph_lookup() {
        let f = mapping_fixture();
        assert_eq!(
            apply(&f, &Value::symbol("development")).unwrap(),
            Value::symbol("z_devel")
        );
        assert_eq!(
            apply(&f, &Value::symbol("sales")).unwrap_err(),
            EvalError::OutsideDomain {
                value: "sales".into()
            }
        );
    }

    #[test]
    fn apply_is_pure() {
        let f = mapping_fixture();
        let first = apply(&f, &Value::symbol("support")).unwrap();
        let second = apply(&f, &Value::symbol("support")).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn identity_mapping_returns_its_argument() {
        let domain: BTreeSet<Value> = (1..=5).map(Value::Integer).collect();
        let id = MappingValue::identity(domain.clone());
        for v in &domain {
            assert_eq!(&apply(&id, v).unwrap(), v);
        }
    }

    #[test]
    fn exhaustive_function_space_matches_direct_lookup() {
        // Every f in B^A for |A| = |B| = 2, checked on every argument.
        let a = [Value::symbol("a0"), Value::symbol("a1")];
        let b = [Value::symbol("b0"), Value::symbol("b1")];
        let mut count = 0;
        for image0 in &b {
            for image1 in &b {
                let graph: BTreeMap<Value, Value> = [
                    (a[0].clone(), image0.clone()),
                    (a[1].clone(), image1.clone()),
                ]
                .into();
                let f = MappingValue::new(
                    a.iter().cloned().collect(),
                    b.iter().cloned().collect(),
                    graph.clone(),
                )
                .unwrap();
                for x in &a {
                    assert_eq!(apply(&f, x).unwrap(), graph[x]);
                }
                count += 1;
            }
        }
        assert_eq!(count, 4); // |B|^|A| = 2^2
    }

    #[test]
    fn partial_graph_is_rejected() {
        let err = MappingValue::new(
            [Value::Integer(1), Value::Integer(2)].into(),
            [Value::Integer(1)].into(),
            [(Value::Integer(1), Value::Integer(1))].into(),
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::MalformedMapping(_)));
    }

    fn evens() -> Comprehension {
        Comprehension::new(
            "x",
            DomainRef::Values((1..=10).map(Value::Integer).collect()),
            Formula::Member {
                lhs: Term::Var("x".into()),
                set: [2, 4, 6, 8, 10].map(Value::Integer).into(),
            },
        )
    }

    #[test]
    fn comprehension_filters_the_domain() {
        let (schema, objects, network) = env_fixture();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let extension = comprehend(env, &evens(), &EvalContext::current()).unwrap();
        let expected: BTreeSet<Entity> = [2, 4, 6, 8, 10]
            .map(|n| Entity::Value(Value::Integer(n)))
            .into();
        assert_eq!(extension, expected);
    }

    #[test]
    fn comprehension_extremes() {
        let (schema, objects, network) = env_fixture();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let domain = DomainRef::Values((1..=4).map(Value::Integer).collect());
        let all = Comprehension::new("x", domain.clone(), Formula::Truth(true));
        assert_eq!(
            comprehend(env, &all, &EvalContext::current()).unwrap().len(),
            4
        );
        let none = Comprehension::new("x", domain, Formula::Truth(false));
        assert!(comprehend(env, &none, &EvalContext::current())
            .unwrap()
            .is_empty());
        // Empty domain comprehends to the empty set, not an error.
        let empty = Comprehension::new(
            "x",
            DomainRef::Values(BTreeSet::new()),
            Formula::Truth(true),
        );
        assert!(comprehend(env, &empty, &EvalContext::current())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn individuation_requires_exactly_one_satisfier() {
        let (schema, objects, network) = env_fixture();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let director = Comprehension::new(
            "x",
            DomainRef::Concept("Employee".into()),
            Formula::Compare {
                lhs: Term::Attr("x".into(), "position".into()),
                op: CmpOp::Eq,
                rhs: Term::Const(Value::symbol("General_Director")),
            },
        );
        assert_eq!(
            individuate(env, &director, &EvalContext::current()).unwrap(),
            Entity::Individual("e1".into())
        );
        let clerk = Comprehension::new(
            "x",
            DomainRef::Concept("Employee".into()),
            Formula::Compare {
                lhs: Term::Attr("x".into(), "position".into()),
                op: CmpOp::Eq,
                rhs: Term::Const(Value::symbol("Clerk")),
            },
        );
        assert_eq!(
            individuate(env, &clerk, &EvalContext::current()).unwrap_err(),
            EvalError::NotUnique(2)
        );
        let nobody = Comprehension::new(
            "x",
            DomainRef::Concept("Employee".into()),
            Formula::Compare {
                lhs: Term::Attr("x".into(), "position".into()),
                op: CmpOp::Eq,
                rhs: Term::Const(Value::symbol("Department_Director")),
            },
        );
        assert_eq!(
            individuate(env, &nobody, &EvalContext::current()).unwrap_err(),
            EvalError::NoSatisfier
        );
    }

    #[test]
    fn individuation_agrees_with_comprehension_cardinality() {
        let (schema, objects, network) = env_fixture();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        for position in ["General_Director", "Clerk", "Department_Director"] {
            let comp = Comprehension::new(
                "x",
                DomainRef::Concept("Employee".into()),
                Formula::Compare {
                    lhs: Term::Attr("x".into(), "position".into()),
                    op: CmpOp::Eq,
                    rhs: Term::Const(Value::symbol(position)),
                },
            );
            let evaluator = Evaluator::new(env);
            let extension = evaluator.comprehend(&comp, &EvalContext::current()).unwrap();
            let unique = evaluator.individuate(&comp, &EvalContext::current());
            match extension.len() {
                1 => assert_eq!(unique.unwrap(), extension.into_iter().next().unwrap()),
                0 => assert_eq!(unique.unwrap_err(), EvalError::NoSatisfier),
                n => assert_eq!(unique.unwrap_err(), EvalError::NotUnique(n)),
            }
        }
    }

    #[test]
    fn frame_atoms_consult_the_network() {
        let (mut schema, objects, _) = env_fixture();
        schema.relations.insert("has_position".into());
        schema.relations.insert("manages_count_over".into());
        let language = NetworkLanguage::new(
            ["has_position".to_string(), "manages_count_over".to_string()],
            ["e1".to_string(), "Department_Director".to_string()],
        );
        let network = SemanticNetwork::new(language)
            .add_frame(
                "has_position",
                Value::symbol("e1"),
                Value::symbol("Department_Director"),
            )
            .unwrap()
            .add_frame("manages_count_over", Value::symbol("e1"), Value::Integer(50))
            .unwrap();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let formula = Formula::Atom {
            pred: "has_position".into(),
            args: vec![
                Term::Var("x".into()),
                Term::Const(Value::symbol("Department_Director")),
            ],
        }
        .and(Formula::Atom {
            pred: "manages_count_over".into(),
            args: vec![Term::Var("x".into()), Term::Const(Value::Integer(50))],
        });
        let holds = evaluate_formula(
            env,
            &formula,
            "x",
            &Entity::Individual("e1".into()),
            &EvalContext::current(),
        )
        .unwrap();
        assert!(holds);
        // Negation flips it.
        let negated = formula.negate();
        assert!(!evaluate_formula(
            env,
            &negated,
            "x",
            &Entity::Individual("e1".into()),
            &EvalContext::current(),
        )
        .unwrap());
    }

    #[test]
    fn connectives_match_the_truth_table_oracle() {
        // Random formula skeletons over k atom slots; every assignment of the
        // atoms is checked against an independent recursive oracle.
        use rand::{Rng, SeedableRng};

        #[derive(Clone)]
        enum Skeleton {
            Atom(usize),
            Not(Box<Skeleton>),
            And(Box<Skeleton>, Box<Skeleton>),
            Or(Box<Skeleton>, Box<Skeleton>),
        }

        fn random_skeleton(
            rng: &mut impl Rng,
            depth: u32,
            atoms: usize,
            used: &mut usize,
        ) -> Skeleton {
            if depth == 0 || rng.gen_bool(0.3) {
                let slot = rng.gen_range(0..atoms);
                *used = (*used).max(slot + 1);
                return Skeleton::Atom(slot);
            }
            match rng.gen_range(0..3) {
                0 => Skeleton::Not(Box::new(random_skeleton(rng, depth - 1, atoms, used))),
                1 => Skeleton::And(
                    Box::new(random_skeleton(rng, depth - 1, atoms, used)),
                    Box::new(random_skeleton(rng, depth - 1, atoms, used)),
                ),
                _ => Skeleton::Or(
                    Box::new(random_skeleton(rng, depth - 1, atoms, used)),
                    Box::new(random_skeleton(rng, depth - 1, atoms, used)),
                ),
            }
        }

        fn oracle(s: &Skeleton, assignment: &[bool]) -> bool {
            match s {
                Skeleton::Atom(i) => assignment[*i],
                Skeleton::Not(inner) => !oracle(inner, assignment),
                Skeleton::And(a, b) => oracle(a, assignment) && oracle(b, assignment),
                Skeleton::Or(a, b) => oracle(a, assignment) || oracle(b, assignment),
            }
        }

        fn reify(s: &Skeleton, assignment: &[bool]) -> Formula {
            match s {
                Skeleton::Atom(i) => Formula::Truth(assignment[*i]),
                Skeleton::Not(inner) => reify(inner, assignment).negate(),
                Skeleton::And(a, b) => reify(a, assignment).and(reify(b, assignment)),
                Skeleton::Or(a, b) => reify(a, assignment).or(reify(b, assignment)),
            }
        }

        let (schema, objects, network) = env_fixture();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let mut used = 0;
            let skeleton = random_skeleton(&mut rng, 4, 4, &mut used);
            let k = used.max(1);
            for mask in 0..(1u32 << k) {
                let assignment: Vec<bool> = (0..k).map(|i| mask & (1 << i) != 0).collect();
                let formula = reify(&skeleton, &assignment);
                let got = evaluate_formula(
                    env,
                    &formula,
                    "x",
                    &Entity::Value(Value::Integer(0)),
                    &EvalContext::current(),
                )
                .unwrap();
                assert_eq!(got, oracle(&skeleton, &assignment));
            }
        }
    }

    #[test]
    fn monotone_domain_restriction() {
        let (schema, objects, network) = env_fixture();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let full: BTreeSet<Value> = (1..=12).map(Value::Integer).collect();
        let sub: BTreeSet<Value> = (4..=9).map(Value::Integer).collect();
        let body = Formula::Member {
            lhs: Term::Var("x".into()),
            set: [2, 3, 5, 7, 11].map(Value::Integer).into(),
        };
        let on_full = comprehend(
            env,
            &Comprehension::new("x", DomainRef::Values(full), body.clone()),
            &EvalContext::current(),
        )
        .unwrap();
        let on_sub = comprehend(
            env,
            &Comprehension::new("x", DomainRef::Values(sub.clone()), body),
            &EvalContext::current(),
        )
        .unwrap();
        let expected: BTreeSet<Entity> = on_full
            .into_iter()
            .filter(|e| match e {
                Entity::Value(v) => sub.contains(v),
                _ => false,
            })
            .collect();
        assert_eq!(on_sub, expected);
    }

    #[test]
    fn state_indexed_judgement() {
        let (schema, mut objects, network) = env_fixture();
        // Promote e2 at state 1.
        let concept = schema.concepts["Employee"].clone();
        let promoted = crate::model::transition_state(
            &objects["e2"],
            &concept,
            &schema.sorts,
            [("position".into(), Value::symbol("Department_Director"))].into(),
            "promoted",
        )
        .unwrap();
        objects.insert("e2".into(), promoted);
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let is_director = Formula::Compare {
            lhs: Term::Attr("x".into(), "position".into()),
            op: CmpOp::Eq,
            rhs: Term::Const(Value::symbol("Department_Director")),
        };
        let e2 = Entity::Individual("e2".into());
        assert!(!evaluate_formula(env, &is_director, "x", &e2, &EvalContext::at_state(0)).unwrap());
        assert!(evaluate_formula(env, &is_director, "x", &e2, &EvalContext::at_state(1)).unwrap());
        assert!(evaluate_formula(env, &is_director, "x", &e2, &EvalContext::current()).unwrap());
        assert_eq!(
            evaluate_formula(env, &is_director, "x", &e2, &EvalContext::at_state(7)).unwrap_err(),
            EvalError::StateNotFound {
                individual: "e2".into(),
                ordinal: 7
            }
        );
    }

    #[test]
    fn unknown_symbols_are_errors_not_falsity() {
        let (schema, objects, network) = env_fixture();
        let env = EvalEnv {
            schema: &schema,
            objects: &objects,
            network: &network,
        };
        let formula = Formula::Atom {
            pred: "undeclared_rel".into(),
            args: vec![Term::Var("x".into()), Term::Var("x".into())],
        };
        let err = evaluate_formula(
            env,
            &formula,
            "x",
            &Entity::Value(Value::Integer(1)),
            &EvalContext::current(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            EvalError::UnboundSymbol {
                symbol: "undeclared_rel".into()
            }
        );
    }
}
