//! The schema: one stratified collection of every declaration kind a
//! document can introduce, plus the parsed bundle (schema + queries).

use std::collections::{BTreeMap, BTreeSet};

use crate::access::UserDecl;
use crate::appraisal::{Assignment, Metric, OrgStructure};
use crate::event::ScriptBinding;
use crate::formula::Comprehension;
use crate::meta::MetaPredicate;
use crate::model::{Carrier, Concept, Individual, Sort};
use crate::semnet::{Frame, NetworkLanguage, SemanticNetwork};
use crate::value::Value;

/// Component header: the component's name and the base concepts it expects
/// to find at merge time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentHeader {
    pub name: String,
    pub requires: BTreeSet<String>,
}

/// Kinds of named declarations, used for namespace and integrity reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeclKind {
    Sort,
    Concept,
    Relation,
    Predicate,
    Metric,
    Individual,
}

impl DeclKind {
    pub fn label(self) -> &'static str {
        match self {
            DeclKind::Sort => "sort",
            DeclKind::Concept => "concept",
            DeclKind::Relation => "relation",
            DeclKind::Predicate => "predicate",
            DeclKind::Metric => "metric",
            DeclKind::Individual => "individual",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    pub sorts: BTreeMap<String, Sort>,
    pub concepts: BTreeMap<String, Concept>,
    /// Dyadic relation symbols of the network language.
    pub relations: BTreeSet<String>,
    pub predicates: BTreeMap<String, MetaPredicate>,
    pub metrics: BTreeMap<String, Metric>,
    pub org: Option<OrgStructure>,
    /// Unit rank overrides for merge priority (lower rank wins).
    pub priorities: BTreeMap<String, u32>,
    pub users: BTreeMap<String, UserDecl>,
    pub individuals: BTreeMap<String, Individual>,
    /// The document's ambient situation network, as a frame set.
    pub frames: BTreeSet<Frame>,
    /// Scripts keep their registration order; it is their dispatch order.
    pub scripts: Vec<ScriptBinding>,
    pub custom_events: BTreeSet<String>,
    pub component: Option<ComponentHeader>,
}

impl Schema {
    /// Every named declaration with its kind, for duplicate detection.
    pub fn declared_names(&self) -> Vec<(DeclKind, &str)> {
        let mut out: Vec<(DeclKind, &str)> = Vec::new();
        out.extend(self.sorts.keys().map(|n| (DeclKind::Sort, n.as_str())));
        out.extend(self.concepts.keys().map(|n| (DeclKind::Concept, n.as_str())));
        out.extend(self.relations.iter().map(|n| (DeclKind::Relation, n.as_str())));
        out.extend(self.predicates.keys().map(|n| (DeclKind::Predicate, n.as_str())));
        out.extend(self.metrics.keys().map(|n| (DeclKind::Metric, n.as_str())));
        out.extend(
            self.individuals
                .keys()
                .map(|n| (DeclKind::Individual, n.as_str())),
        );
        out
    }

    /// Constants of the network language: finite-carrier symbols, individual
    /// ids and org unit names. Scalar literals are constants implicitly.
    pub fn constant_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for sort in self.sorts.values() {
            if let Carrier::Finite(members) = &sort.carrier {
                for member in members {
                    if let Value::Symbol(name) = member {
                        out.insert(name.clone());
                    }
                }
            }
        }
        out.extend(self.individuals.keys().cloned());
        if let Some(org) = &self.org {
            out.extend(org.unit_names());
        }
        out
    }

    pub fn network_language(&self) -> NetworkLanguage {
        NetworkLanguage {
            relations: self.relations.clone(),
            constants: self.constant_symbols(),
        }
    }

    /// The document's ambient situation network.
    pub fn network(&self) -> SemanticNetwork {
        SemanticNetwork {
            language: self.network_language(),
            frames: self.frames.clone(),
        }
    }

    /// Stratification level of a named entity, if the name is declared.
    /// Data-level declarations are level 0; meta-predicates carry their own
    /// level; concepts carry a declared level (0 by default).
    pub fn entity_level(&self, name: &str) -> Option<u32> {
        if let Some(predicate) = self.predicates.get(name) {
            return Some(predicate.level);
        }
        if let Some(concept) = self.concepts.get(name) {
            return Some(concept.level);
        }
        if self.sorts.contains_key(name)
            || self.relations.contains(name)
            || self.individuals.contains_key(name)
            || self.metrics.contains_key(name)
        {
            return Some(0);
        }
        if let Some(org) = &self.org {
            if org.contains_unit(name) {
                return Some(0);
            }
        }
        None
    }

    /// Highest declared predicate or concept level.
    pub fn max_level(&self) -> u32 {
        let mut max = 0;
        for predicate in self.predicates.values() {
            max = max.max(predicate.level);
        }
        for concept in self.concepts.values() {
            max = max.max(concept.level);
        }
        max
    }

    /// The level map: which concepts and predicates sit at each level.
    pub fn levels(&self) -> BTreeMap<u32, (BTreeSet<String>, BTreeSet<String>)> {
        let mut out: BTreeMap<u32, (BTreeSet<String>, BTreeSet<String>)> = BTreeMap::new();
        for concept in self.concepts.values() {
            out.entry(concept.level)
                .or_default()
                .0
                .insert(concept.name.clone());
        }
        for predicate in self.predicates.values() {
            out.entry(predicate.level)
                .or_default()
                .1
                .insert(predicate.name.clone());
        }
        out
    }

    pub fn individuals_of(&self, concept: &str) -> Vec<&Individual> {
        self.individuals
            .values()
            .filter(|individual| individual.concept == concept)
            .collect()
    }
}

/// One query statement.
#[derive(Debug, Clone, PartialEq)]
pub enum Query {
    /// `eval NAME;` — read the extension of a concept, predicate, sort or
    /// metric by the same verb.
    Extension(String),
    /// `eval { x : D | phi };`
    Comprehend(Comprehension),
    /// `eval unique { x : D | phi };`
    Individuate(Comprehension),
    /// `eval F(s={..})(p={..});` — restrict the general employee functional.
    Functional(Vec<Assignment>),
    /// `eval NAME(s={..})...;` — project a metric's components.
    Metric(String, Vec<Assignment>),
}

/// A parsed document: declarations plus the queries it carries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle {
    pub schema: Schema,
    pub queries: Vec<Query>,
}
