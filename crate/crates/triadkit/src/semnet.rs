//! The semantic network language: a pair of a dyadic relation symbol set and
//! a constant symbol set, with situations described as sets of frames.
//!
//! Relations are fixed at arity 2; n-ary facts must be reified through
//! auxiliary constants. Scalar literals (integers, text, decimals, dates)
//! are constants of the language without declaration; identifier symbols
//! must be declared. Networks are immutable values.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::model::DataObject;
use crate::value::Value;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("symbol `{symbol}` is not declared in the network language")]
    UndeclaredSymbol { symbol: String },
    #[error("relation `{relation}` applied to {arity} terms; relations are dyadic")]
    ArityViolation { relation: String, arity: usize },
    #[error("data objects describe individuals `{before}` and `{after}`, not the same one")]
    IndividualMismatch { before: String, after: String },
}

/// `L = <R, C>`: the dyadic relation symbols and the constants.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NetworkLanguage {
    pub relations: BTreeSet<String>,
    pub constants: BTreeSet<String>,
}

impl NetworkLanguage {
    pub fn new(
        relations: impl IntoIterator<Item = String>,
        constants: impl IntoIterator<Item = String>,
    ) -> Self {
        NetworkLanguage {
            relations: relations.into_iter().collect(),
            constants: constants.into_iter().collect(),
        }
    }

    pub fn declares_relation(&self, relation: &str) -> bool {
        self.relations.contains(relation)
    }

    /// Literal constants are always part of the language; symbols must be
    /// declared.
    pub fn declares_term(&self, term: &Value) -> bool {
        match term {
            Value::Symbol(name) => self.constants.contains(name),
            _ => true,
        }
    }
}

/// One dyadic relation instance over two constants.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Frame {
    pub relation: String,
    pub subject: Value,
    pub object: Value,
}

impl Frame {
    pub fn new(relation: impl Into<String>, subject: Value, object: Value) -> Self {
        Frame {
            relation: relation.into(),
            subject,
            object,
        }
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.relation, self.subject, self.object)
    }
}

/// A situation: a duplicate-free set of frames over one language.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SemanticNetwork {
    pub language: NetworkLanguage,
    pub frames: BTreeSet<Frame>,
}

impl SemanticNetwork {
    pub fn new(language: NetworkLanguage) -> Self {
        SemanticNetwork {
            language,
            frames: BTreeSet::new(),
        }
    }

    fn check_frame(&self, frame: &Frame) -> Result<(), NetError> {
        if !self.language.declares_relation(&frame.relation) {
            return Err(NetError::UndeclaredSymbol {
                symbol: frame.relation.clone(),
            });
        }
        for term in [&frame.subject, &frame.object] {
            if !self.language.declares_term(term) {
                return Err(NetError::UndeclaredSymbol {
                    symbol: term.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Return a network extended with the frame. Set semantics: adding an
    /// existing frame returns an equal network.
    pub fn add_frame(
        &self,
        relation: impl Into<String>,
        subject: Value,
        object: Value,
    ) -> Result<SemanticNetwork, NetError> {
        let frame = Frame::new(relation, subject, object);
        self.check_frame(&frame)?;
        let mut next = self.clone();
        next.frames.insert(frame);
        Ok(next)
    }

    /// Frame truth is set membership; querying with undeclared symbols is an
    /// error, not falsity.
    pub fn holds(&self, frame: &Frame) -> Result<bool, NetError> {
        self.check_frame(frame)?;
        Ok(self.frames.contains(frame))
    }
}

/// Build the situation network for one state transition: for every attribute
/// of the object's concept, a `had_<attr>` frame records the old value and a
/// `has_<attr>` frame the new one, and the caller's context frames are merged
/// in. Symbols appearing in the transition or the context are declared into
/// the situation's language.
pub fn situation_from_transition(
    before: &DataObject,
    after: &DataObject,
    context: &BTreeSet<Frame>,
) -> Result<SemanticNetwork, NetError> {
    if before.individual.id != after.individual.id {
        return Err(NetError::IndividualMismatch {
            before: before.individual.id.clone(),
            after: after.individual.id.clone(),
        });
    }
    let mut language = NetworkLanguage::default();
    language.constants.insert(before.individual.id.clone());
    let mut frames = BTreeSet::new();

    let subject = Value::symbol(before.individual.id.clone());
    for (attr, old_value) in before.valuation() {
        let relation = format!("had_{attr}");
        language.relations.insert(relation.clone());
        if let Value::Symbol(name) = old_value {
            language.constants.insert(name.clone());
        }
        frames.insert(Frame::new(relation, subject.clone(), old_value.clone()));
    }
    for (attr, new_value) in after.valuation() {
        let relation = format!("has_{attr}");
        language.relations.insert(relation.clone());
        if let Value::Symbol(name) = new_value {
            language.constants.insert(name.clone());
        }
        frames.insert(Frame::new(relation, subject.clone(), new_value.clone()));
    }
    for frame in context {
        language.relations.insert(frame.relation.clone());
        for term in [&frame.subject, &frame.object] {
            if let Value::Symbol(name) = term {
                language.constants.insert(name.clone());
            }
        }
        frames.insert(frame.clone());
    }
    Ok(SemanticNetwork { language, frames })
}
