//! The data object model: sorts, concepts, individuals, state histories and
//! assignment-dependent variable domains.
//!
//! A data object is the triple of a concept, an individual and a current
//! state. States are ordinal-counted events: every transition appends a new
//! history entry, even when the valuation did not change, so the audit
//! history survives no-op updates. Values are immutable after construction;
//! a transition produces a new object.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::value::{ScalarKind, Value};

/// Default ceiling on materialized variable-domain members.
pub const DEFAULT_ENUMERATION_CAP: usize = 10_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown attribute `{attribute}` on concept `{concept}`")]
    UnknownAttribute { concept: String, attribute: String },
    #[error("value `{value}` does not belong to sort `{sort}` (attribute `{attribute}`)")]
    SortMismatch {
        attribute: String,
        sort: String,
        value: String,
    },
    #[error("valuation for concept `{concept}` is missing attribute `{attribute}`")]
    PartialValuation { concept: String, attribute: String },
    #[error("individual `{individual}` belongs to concept `{expected}`, not `{actual}`")]
    ConceptMismatch {
        individual: String,
        expected: String,
        actual: String,
    },
    #[error("enumerating {required} mappings exceeds the cap of {cap}")]
    EnumerationTooLarge { required: u128, cap: usize },
    #[error("sort `{sort}` has a {kind} carrier and cannot be enumerated")]
    InfiniteCarrier { sort: String, kind: ScalarKind },
    #[error("finite carrier of sort `{sort}` is empty")]
    EmptyCarrier { sort: String },
}

/// The carrier of a sort: an explicit finite set of constants or one of the
/// builtin scalar kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Carrier {
    Finite(BTreeSet<Value>),
    Scalar(ScalarKind),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sort {
    pub name: String,
    pub carrier: Carrier,
}

impl Sort {
    pub fn finite(name: impl Into<String>, members: impl IntoIterator<Item = Value>) -> Self {
        Sort {
            name: name.into(),
            carrier: Carrier::Finite(members.into_iter().collect()),
        }
    }

    pub fn scalar(name: impl Into<String>, kind: ScalarKind) -> Self {
        Sort {
            name: name.into(),
            carrier: Carrier::Scalar(kind),
        }
    }

    /// Whether `value` lies in this sort's carrier.
    pub fn admits(&self, value: &Value) -> bool {
        match &self.carrier {
            Carrier::Finite(members) => members.contains(value),
            Carrier::Scalar(kind) => value.scalar_kind() == Some(*kind),
        }
    }
}

/// A named attribute signature: a collection of functions sharing the same
/// definition area, one per attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub name: String,
    /// Ordered attribute list: (attribute name, sort name).
    pub attributes: Vec<(String, String)>,
    /// Stratification level; 0 is the data level.
    pub level: u32,
    /// Optional governing org unit, used for merge priority.
    pub governed_by: Option<String>,
}

impl Concept {
    pub fn new(name: impl Into<String>, attributes: Vec<(String, String)>) -> Self {
        Concept {
            name: name.into(),
            attributes,
            level: 0,
            governed_by: None,
        }
    }

    pub fn attribute_sort(&self, attribute: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(name, _)| name == attribute)
            .map(|(_, sort)| sort.as_str())
    }

    pub fn has_attribute(&self, attribute: &str) -> bool {
        self.attribute_sort(attribute).is_some()
    }
}

/// An essence selected by a problem-domain expert, with its identifying
/// properties. Identifying properties are declarations; they are kept apart
/// from the mutable state valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Individual {
    pub id: String,
    pub concept: String,
    pub identifying: BTreeMap<String, Value>,
}

impl Individual {
    pub fn new(id: impl Into<String>, concept: impl Into<String>) -> Self {
        Individual {
            id: id.into(),
            concept: concept.into(),
            identifying: BTreeMap::new(),
        }
    }

    pub fn with_property(mut self, attribute: impl Into<String>, value: Value) -> Self {
        self.identifying.insert(attribute.into(), value);
        self
    }
}

/// An ordinal point in an individual's event history.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StateIndex {
    pub ordinal: u64,
    pub label: Option<String>,
}

impl StateIndex {
    pub fn initial() -> Self {
        StateIndex {
            ordinal: 0,
            label: None,
        }
    }

    pub fn labeled(ordinal: u64, label: impl Into<String>) -> Self {
        StateIndex {
            ordinal,
            label: Some(label.into()),
        }
    }
}

impl fmt::Display for StateIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Some(label) => write!(f, "{} ({label})", self.ordinal),
            None => write!(f, "{}", self.ordinal),
        }
    }
}

pub type Valuation = BTreeMap<String, Value>;

/// The triple of concept, individual and current state, together with the
/// full state history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataObject {
    pub concept: String,
    pub individual: Individual,
    pub history: Vec<(StateIndex, Valuation)>,
}

impl DataObject {
    pub fn state(&self) -> &StateIndex {
        &self.history.last().expect("history is never empty").0
    }

    pub fn valuation(&self) -> &Valuation {
        &self.history.last().expect("history is never empty").1
    }

    /// Valuation at a given ordinal, if that state exists in the history.
    pub fn valuation_at(&self, ordinal: u64) -> Option<&Valuation> {
        self.history
            .iter()
            .find(|(state, _)| state.ordinal == ordinal)
            .map(|(_, valuation)| valuation)
    }

    /// Canonical single-line form of one history entry, used by the
    /// byte-exact immutability checks.
    pub fn canonical_history(&self) -> String {
        let mut out = String::new();
        for (state, valuation) in &self.history {
            out.push_str(&format!("{}:", state.ordinal));
            if let Some(label) = &state.label {
                out.push_str(&crate::value::quote_text(label));
            }
            for (attr, value) in valuation {
                out.push_str(&format!(" {attr}={value}"));
            }
            out.push('\n');
        }
        out
    }
}

fn check_valuation(
    concept: &Concept,
    sorts: &BTreeMap<String, Sort>,
    valuation: &Valuation,
) -> Result<(), ModelError> {
    for attr in valuation.keys() {
        if !concept.has_attribute(attr) {
            return Err(ModelError::UnknownAttribute {
                concept: concept.name.clone(),
                attribute: attr.clone(),
            });
        }
    }
    for (attr, sort_name) in &concept.attributes {
        let value = valuation
            .get(attr)
            .ok_or_else(|| ModelError::PartialValuation {
                concept: concept.name.clone(),
                attribute: attr.clone(),
            })?;
        if let Some(sort) = sorts.get(sort_name) {
            if !sort.admits(value) {
                return Err(ModelError::SortMismatch {
                    attribute: attr.clone(),
                    sort: sort_name.clone(),
                    value: value.to_string(),
                });
            }
        }
    }
    Ok(())
}

/// Build a data object at state 0 with a single-entry history.
///
/// The valuation must be total over the concept's attributes and every value
/// must lie in its attribute's sort carrier.
pub fn make_data_object(
    concept: &Concept,
    sorts: &BTreeMap<String, Sort>,
    individual: Individual,
    initial_valuation: Valuation,
) -> Result<DataObject, ModelError> {
    if individual.concept != concept.name {
        return Err(ModelError::ConceptMismatch {
            individual: individual.id.clone(),
            expected: individual.concept.clone(),
            actual: concept.name.clone(),
        });
    }
    check_valuation(concept, sorts, &initial_valuation)?;
    Ok(DataObject {
        concept: concept.name.clone(),
        individual,
        history: vec![(StateIndex::initial(), initial_valuation)],
    })
}

/// Append one state to the object's history. Prior entries are untouched;
/// the new ordinal is the previous one plus one.
pub fn transition_state(
    obj: &DataObject,
    concept: &Concept,
    sorts: &BTreeMap<String, Sort>,
    new_valuation: Valuation,
    label: impl Into<String>,
) -> Result<DataObject, ModelError> {
    check_valuation(concept, sorts, &new_valuation)?;
    let mut next = obj.clone();
    let ordinal = obj.state().ordinal + 1;
    next.history
        .push((StateIndex::labeled(ordinal, label), new_valuation));
    Ok(next)
}

/// The variable domain `H_T(I)`: every total mapping from the index set into
/// the sort carrier, materialized eagerly under a cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDomain {
    pub sort: String,
    pub index_set: Vec<String>,
    pub members: Vec<BTreeMap<String, Value>>,
}

/// Enumerate `H_T(I)` for a finite sort. The member count is
/// `|carrier|^|I|`; anything above `cap` is refused rather than truncated.
pub fn variable_domain(
    sort: &Sort,
    index_set: &BTreeSet<String>,
    cap: usize,
) -> Result<VariableDomain, ModelError> {
    let members = match &sort.carrier {
        Carrier::Scalar(kind) => {
            return Err(ModelError::InfiniteCarrier {
                sort: sort.name.clone(),
                kind: *kind,
            })
        }
        Carrier::Finite(members) if members.is_empty() => {
            return Err(ModelError::EmptyCarrier {
                sort: sort.name.clone(),
            })
        }
        Carrier::Finite(members) => members.iter().cloned().collect::<Vec<_>>(),
    };
    let indices: Vec<String> = index_set.iter().cloned().collect();
    let required = (members.len() as u128)
        .checked_pow(indices.len() as u32)
        .unwrap_or(u128::MAX);
    if required > cap as u128 {
        return Err(ModelError::EnumerationTooLarge { required, cap });
    }

    // Odometer over the index positions; index 0 varies slowest.
    let mut out = Vec::with_capacity(required as usize);
    let mut counters = vec![0usize; indices.len()];
    loop {
        let mapping: BTreeMap<String, Value> = indices
            .iter()
            .zip(&counters)
            .map(|(id, &c)| (id.clone(), members[c].clone()))
            .collect();
        out.push(mapping);
        let mut pos = indices.len();
        loop {
            if pos == 0 {
                return Ok(VariableDomain {
                    sort: sort.name.clone(),
                    index_set: indices,
                    members: out,
                });
            }
            pos -= 1;
            counters[pos] += 1;
            if counters[pos] < members.len() {
                break;
            }
            counters[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn position_sort() -> Sort {
        Sort::finite(
            "Position",
            [
                Value::symbol("General_Director"),
                Value::symbol("Department_Director"),
            ],
        )
    }

    fn employee_concept() -> Concept {
        Concept::new("Employee", vec![("position".into(), "Position".into())])
    }

    fn sorts() -> BTreeMap<String, Sort> {
        let mut sorts = BTreeMap::new();
        sorts.insert("Position".into(), position_sort());
        sorts
    }

    fn ivanov() -> Individual {
        Individual::new("e1", "Employee").with_property("name", Value::text("Ivanov"))
    }

    #[test]
    fn make_object_starts_at_state_zero() {
        let concept = employee_concept();
        let valuation: Valuation =
            [("position".into(), Value::symbol("General_Director"))].into();
        let obj = make_data_object(&concept, &sorts(), ivanov(), valuation).unwrap();
        assert_eq!(obj.state().ordinal, 0);
        assert_eq!(obj.history.len(), 1);
        assert_eq!(
            obj.valuation().get("position"),
            Some(&Value::symbol("General_Director"))
        );
    }

    #[test]
    fn zero_attribute_concept_accepts_empty_valuation() {
        let concept = Concept::new("Marker", vec![]);
        let individual = Individual::new("m1", "Marker");
        let obj = make_data_object(&concept, &BTreeMap::new(), individual, Valuation::new())
            .unwrap();
        assert!(obj.valuation().is_empty());
    }

    #[test]
    fn missing_attribute_is_partial_valuation() {
        let err = make_data_object(&employee_concept(), &sorts(), ivanov(), Valuation::new())
            .unwrap_err();
        assert_eq!(
            err,
            ModelError::PartialValuation {
                concept: "Employee".into(),
                attribute: "position".into()
            }
        );
    }

    #[test]
    fn sort_mismatch_is_rejected() {
        let valuation: Valuation = [("position".into(), Value::symbol("Janitor"))].into();
        let err = make_data_object(&employee_concept(), &sorts(), ivanov(), valuation)
            .unwrap_err();
        assert!(matches!(err, ModelError::SortMismatch { .. }));
    }

    #[test]
    fn transition_extends_history_and_keeps_the_past() {
        let concept = employee_concept();
        let sorts = sorts();
        let v0: Valuation = [("position".into(), Value::symbol("General_Director"))].into();
        let obj = make_data_object(&concept, &sorts, ivanov(), v0).unwrap();
        let before = obj.canonical_history();

        let v1: Valuation = [("position".into(), Value::symbol("Department_Director"))].into();
        let obj1 = transition_state(&obj, &concept, &sorts, v1, "promoted").unwrap();
        assert_eq!(obj1.state().ordinal, 1);
        assert_eq!(obj1.history.len(), 2);
        // The prior entry is byte-identical.
        assert_eq!(obj.canonical_history(), before);
        assert!(obj1.canonical_history().starts_with(&before));
    }

    #[test]
    fn identical_valuation_still_advances_state() {
        let concept = employee_concept();
        let sorts = sorts();
        let v: Valuation = [("position".into(), Value::symbol("General_Director"))].into();
        let obj = make_data_object(&concept, &sorts, ivanov(), v.clone()).unwrap();
        let obj1 = transition_state(&obj, &concept, &sorts, v.clone(), "noop").unwrap();
        assert_eq!(obj1.state().ordinal, 1);
        assert_eq!(obj1.history.len(), 2);
    }

    #[test]
    fn successive_transitions_count_zero_through_three() {
        let concept = employee_concept();
        let sorts = sorts();
        let v: Valuation = [("position".into(), Value::symbol("General_Director"))].into();
        let mut obj = make_data_object(&concept, &sorts, ivanov(), v.clone()).unwrap();
        for _ in 0..3 {
            obj = transition_state(&obj, &concept, &sorts, v.clone(), "step").unwrap();
        }
        let ordinals: Vec<u64> = obj.history.iter().map(|(s, _)| s.ordinal).collect();
        assert_eq!(ordinals, vec![0, 1, 2, 3]);
    }

    #[test]
    fn variable_domain_counts_match_the_enumeration_oracle() {
        // |I| = 2 over a 2-member carrier: 2^2 = 4 total mappings.
        let sort = Sort::finite(
            "LaborFunction",
            [Value::symbol("development"), Value::symbol("support")],
        );
        let index: BTreeSet<String> = ["h1".to_string(), "h2".to_string()].into();
        let domain = variable_domain(&sort, &index, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(domain.members.len(), 4);
        // Brute-force oracle: generate all pairs independently and compare.
        let carrier = [Value::symbol("development"), Value::symbol("support")];
        let mut oracle = Vec::new();
        for a in &carrier {
            for b in &carrier {
                let m: BTreeMap<String, Value> =
                    [("h1".to_string(), a.clone()), ("h2".to_string(), b.clone())].into();
                oracle.push(m);
            }
        }
        let mut got = domain.members.clone();
        got.sort();
        oracle.sort();
        assert_eq!(got, oracle);
    }

    #[test]
    fn empty_index_set_has_exactly_the_empty_mapping() {
        let sort = position_sort();
        let domain = variable_domain(&sort, &BTreeSet::new(), 10).unwrap();
        assert_eq!(domain.members.len(), 1);
        assert!(domain.members[0].is_empty());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let sort = Sort::finite(
            "Digit",
            (0..10).map(Value::Integer).collect::<Vec<_>>(),
        );
        let index: BTreeSet<String> =
            ["a".to_string(), "b".to_string(), "c".to_string()].into();
        let err = variable_domain(&sort, &index, 500).unwrap_err();
        assert_eq!(
            err,
            ModelError::EnumerationTooLarge {
                required: 1000,
                cap: 500
            }
        );
    }

    #[test]
    fn scalar_carrier_cannot_be_enumerated() {
        let sort = Sort::scalar("Name", ScalarKind::Text);
        let err = variable_domain(&sort, &BTreeSet::new(), 10).unwrap_err();
        assert!(matches!(err, ModelError::InfiniteCarrier { .. }));
    }
}
