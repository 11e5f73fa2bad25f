//! Personnel appraisal: the parameterized employee-set functional, assignment
//! points, the metric family and generalization-level analysis.
//!
//! The functional starts as the most general employee class and is restricted
//! by assignment points: a labor-function point narrows by function
//! membership, an org-unit point narrows to employees enrolled in the listed
//! units or their descendants. Metrics declare which assignment kinds they
//! depend on; projecting a metric by an assignment of a kind it does not
//! depend on leaves its component mapping unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::value::Decimal;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AppraisalError {
    #[error("assignment has an empty value set")]
    EmptyAssignment,
    #[error("value `{value}` is not valid for assignment kind {kind}")]
    KindValueMismatch { kind: AssignmentKind, value: String },
    #[error("metric `{0}` is not declared")]
    UnknownMetric(String),
    #[error("org unit `{0}` does not exist")]
    UnknownUnit(String),
    #[error("weights reference undeclared metric `{0}`")]
    MissingMetric(String),
    #[error("unit name `{0}` declared more than once")]
    DuplicateUnit(String),
}

/// One node of the corporation tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrgUnit {
    pub name: String,
    pub vacancies: u32,
    pub enrolled: u32,
    pub children: Vec<OrgUnit>,
}

impl OrgUnit {
    pub fn new(name: impl Into<String>) -> Self {
        OrgUnit {
            name: name.into(),
            vacancies: 0,
            enrolled: 0,
            children: Vec::new(),
        }
    }

    pub fn with_vacancies(mut self, vacancies: u32) -> Self {
        self.vacancies = vacancies;
        self
    }

    pub fn with_child(mut self, child: OrgUnit) -> Self {
        self.children.push(child);
        self
    }

    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a OrgUnit, u32), depth: u32) {
        f(self, depth);
        for child in &self.children {
            child.walk(f, depth + 1);
        }
    }
}

/// The corporation hierarchy plus the declared labor-function vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrgStructure {
    pub root: OrgUnit,
    pub functions: BTreeSet<String>,
}

impl OrgStructure {
    pub fn new(root: OrgUnit) -> Self {
        OrgStructure {
            root,
            functions: BTreeSet::new(),
        }
    }

    pub fn with_functions(mut self, functions: impl IntoIterator<Item = String>) -> Self {
        self.functions = functions.into_iter().collect();
        self
    }

    /// All unit names are required to be unique within the tree.
    pub fn validate(&self) -> Result<(), AppraisalError> {
        let mut seen = BTreeSet::new();
        let mut dup = None;
        self.root.walk(
            &mut |unit, _| {
                if !seen.insert(unit.name.clone()) && dup.is_none() {
                    dup = Some(unit.name.clone());
                }
            },
            0,
        );
        match dup {
            Some(name) => Err(AppraisalError::DuplicateUnit(name)),
            None => Ok(()),
        }
    }

    pub fn unit(&self, name: &str) -> Option<&OrgUnit> {
        fn find<'a>(unit: &'a OrgUnit, name: &str) -> Option<&'a OrgUnit> {
            if unit.name == name {
                return Some(unit);
            }
            unit.children.iter().find_map(|child| find(child, name))
        }
        find(&self.root, name)
    }

    pub fn contains_unit(&self, name: &str) -> bool {
        self.unit(name).is_some()
    }

    /// Depth of a unit below the root (the root itself is depth 0).
    pub fn depth(&self, name: &str) -> Option<u32> {
        let mut found = None;
        self.root.walk(
            &mut |unit, depth| {
                if unit.name == name {
                    found = Some(depth);
                }
            },
            0,
        );
        found
    }

    pub fn unit_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.root
            .walk(&mut |unit, _| {
                out.insert(unit.name.clone());
            }, 0);
        out
    }

    /// The unit and every descendant, as a name set.
    pub fn subtree(&self, name: &str) -> Option<BTreeSet<String>> {
        let start = self.unit(name)?;
        let mut out = BTreeSet::new();
        start.walk(
            &mut |unit, _| {
                out.insert(unit.name.clone());
            },
            0,
        );
        Some(out)
    }

    /// Per-unit (vacancies, enrolled) snapshot: the functional's parameters.
    pub fn parameters(&self) -> BTreeMap<String, (u32, u32)> {
        let mut out = BTreeMap::new();
        self.root.walk(
            &mut |unit, _| {
                out.insert(unit.name.clone(), (unit.vacancies, unit.enrolled));
            },
            0,
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AssignmentKind {
    LaborFunction,
    OrgUnit,
}

impl fmt::Display for AssignmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssignmentKind::LaborFunction => f.write_str("labor_function"),
            AssignmentKind::OrgUnit => f.write_str("org_unit"),
        }
    }
}

/// An assignment point: a non-empty finite value set of one kind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub kind: AssignmentKind,
    pub values: BTreeSet<String>,
}

impl Assignment {
    pub fn labor_functions<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Assignment {
            kind: AssignmentKind::LaborFunction,
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    pub fn org_units<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Assignment {
            kind: AssignmentKind::OrgUnit,
            values: values.into_iter().map(Into::into).collect(),
        }
    }

    fn validate(&self, org: &OrgStructure) -> Result<(), AppraisalError> {
        if self.values.is_empty() {
            return Err(AppraisalError::EmptyAssignment);
        }
        for value in &self.values {
            let ok = match self.kind {
                AssignmentKind::OrgUnit => org.contains_unit(value),
                AssignmentKind::LaborFunction => {
                    org.functions.is_empty() || org.functions.contains(value)
                }
            };
            if !ok {
                return Err(AppraisalError::KindValueMismatch {
                    kind: self.kind,
                    value: value.clone(),
                });
            }
        }
        Ok(())
    }
}

/// One member of the employee population, as the functional sees it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Employee {
    pub id: String,
    pub labor_function: String,
    pub unit: String,
}

impl Employee {
    pub fn new(
        id: impl Into<String>,
        labor_function: impl Into<String>,
        unit: impl Into<String>,
    ) -> Self {
        Employee {
            id: id.into(),
            labor_function: labor_function.into(),
            unit: unit.into(),
        }
    }
}

/// The employee-set valuation `F((v), (e), ...)` with the assignments applied
/// so far. Restriction is a conjunctive filter, so the extension only ever
/// shrinks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Functional {
    pub population: Vec<Employee>,
    pub applied: Vec<Assignment>,
    /// Per-unit (vacancies, enrolled) parameters snapshotted at construction.
    pub parameters: BTreeMap<String, (u32, u32)>,
    extension: BTreeSet<String>,
}

impl Functional {
    /// The most general class: every employee, no assignments applied.
    pub fn general(org: &OrgStructure, population: Vec<Employee>) -> Self {
        let extension = population.iter().map(|e| e.id.clone()).collect();
        Functional {
            population,
            applied: Vec::new(),
            parameters: org.parameters(),
            extension,
        }
    }

    pub fn extension(&self) -> &BTreeSet<String> {
        &self.extension
    }

    /// Apply one assignment point, narrowing the extension.
    pub fn restrict(
        &self,
        org: &OrgStructure,
        assignment: Assignment,
    ) -> Result<Functional, AppraisalError> {
        assignment.validate(org)?;
        let keep: BTreeSet<String> = match assignment.kind {
            AssignmentKind::LaborFunction => self
                .population
                .iter()
                .filter(|e| assignment.values.contains(&e.labor_function))
                .map(|e| e.id.clone())
                .collect(),
            AssignmentKind::OrgUnit => {
                let mut covered = BTreeSet::new();
                for unit in &assignment.values {
                    covered.extend(org.subtree(unit).unwrap_or_default());
                }
                self.population
                    .iter()
                    .filter(|e| covered.contains(&e.unit))
                    .map(|e| e.id.clone())
                    .collect()
            }
        };
        let mut next = self.clone();
        next.extension = next.extension.intersection(&keep).cloned().collect();
        next.applied.push(assignment);
        Ok(next)
    }
}

/// Component label: present coordinates match the metric's resolved
/// dependency kinds, absent ones are still generalized.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ComponentKey {
    pub labor_function: Option<String>,
    pub unit: Option<String>,
}

impl ComponentKey {
    pub fn generalized() -> Self {
        ComponentKey::default()
    }

    pub fn for_labor_function(lf: impl Into<String>) -> Self {
        ComponentKey {
            labor_function: Some(lf.into()),
            unit: None,
        }
    }

    pub fn full(lf: impl Into<String>, unit: impl Into<String>) -> Self {
        ComponentKey {
            labor_function: Some(lf.into()),
            unit: Some(unit.into()),
        }
    }
}

impl fmt::Display for ComponentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.labor_function, &self.unit) {
            (None, None) => f.write_str("*"),
            (Some(lf), None) => f.write_str(lf),
            (None, Some(unit)) => write!(f, "(*, {unit})"),
            (Some(lf), Some(unit)) => write!(f, "({lf}, {unit})"),
        }
    }
}

/// A declared appraisal metric with an explicit dependency set and a
/// component value table at full resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Metric {
    pub name: String,
    pub depends: BTreeSet<AssignmentKind>,
    /// Scalar value used when no component entry applies.
    pub base: Option<Decimal>,
    pub components: BTreeMap<ComponentKey, Decimal>,
}

impl Metric {
    pub fn new(name: impl Into<String>, depends: impl IntoIterator<Item = AssignmentKind>) -> Self {
        Metric {
            name: name.into(),
            depends: depends.into_iter().collect(),
            base: None,
            components: BTreeMap::new(),
        }
    }

    pub fn with_component(mut self, key: ComponentKey, value: Decimal) -> Self {
        self.components.insert(key, value);
        self
    }

    pub fn with_base(mut self, base: Decimal) -> Self {
        self.base = Some(base);
        self
    }

    fn fallback(&self) -> f64 {
        self.base.map(|d| d.to_f64()).unwrap_or(0.0)
    }
}

pub type MetricEvaluation = BTreeMap<ComponentKey, f64>;

/// Project a metric's components onto the value sets of the applied
/// assignments. Kinds the metric does not depend on are ignored, so applying
/// them returns the same mapping; dimensions not yet applied stay generalized
/// and are reported as the mean over the component table.
pub fn evaluate_metric(
    org: &OrgStructure,
    metric: &Metric,
    assignments: &[Assignment],
) -> Result<MetricEvaluation, AppraisalError> {
    let mut applied: BTreeMap<AssignmentKind, BTreeSet<String>> = BTreeMap::new();
    for assignment in assignments {
        assignment.validate(org)?;
        applied
            .entry(assignment.kind)
            .and_modify(|values| {
                *values = values.intersection(&assignment.values).cloned().collect()
            })
            .or_insert_with(|| assignment.values.clone());
    }
    let resolved: Vec<AssignmentKind> = metric
        .depends
        .iter()
        .copied()
        .filter(|kind| applied.contains_key(kind))
        .collect();

    let keys: Vec<ComponentKey> = if resolved.is_empty() {
        vec![ComponentKey::generalized()]
    } else {
        let lf_values: Vec<Option<String>> =
            if resolved.contains(&AssignmentKind::LaborFunction) {
                applied[&AssignmentKind::LaborFunction]
                    .iter()
                    .map(|v| Some(v.clone()))
                    .collect()
            } else {
                vec![None]
            };
        let unit_values: Vec<Option<String>> = if resolved.contains(&AssignmentKind::OrgUnit) {
            applied[&AssignmentKind::OrgUnit]
                .iter()
                .map(|v| Some(v.clone()))
                .collect()
        } else {
            vec![None]
        };
        let mut keys = Vec::new();
        for lf in &lf_values {
            for unit in &unit_values {
                keys.push(ComponentKey {
                    labor_function: lf.clone(),
                    unit: unit.clone(),
                });
            }
        }
        keys
    };

    let mut out = MetricEvaluation::new();
    for key in keys {
        let matching: Vec<f64> = metric
            .components
            .iter()
            .filter(|(entry, _)| {
                (key.labor_function.is_none() || entry.labor_function == key.labor_function)
                    && (key.unit.is_none() || entry.unit == key.unit)
            })
            .map(|(_, v)| v.to_f64())
            .collect();
        let value = if matching.is_empty() {
            metric.fallback()
        } else {
            matching.iter().sum::<f64>() / matching.len() as f64
        };
        out.insert(key, value);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepClass {
    Refining,
    Inert,
}

impl fmt::Display for StepClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepClass::Refining => f.write_str("REFINING"),
            StepClass::Inert => f.write_str("INERT"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationReport {
    /// Per metric, one classification per assignment step, in order.
    pub steps: BTreeMap<String, Vec<StepClass>>,
    /// Two conceptualization levels suffice when no metric keeps refining
    /// past the second assignment step.
    pub two_levels_sufficient: bool,
}

impl fmt::Display for GeneralizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (metric, steps) in &self.steps {
            write!(f, "{metric}:")?;
            for step in steps {
                write!(f, " {step}")?;
            }
            writeln!(f)?;
        }
        writeln!(
            f,
            "verdict: two levels {}",
            if self.two_levels_sufficient {
                "sufficient"
            } else {
                "insufficient"
            }
        )
    }
}

/// Classify each assignment step as refining or inert per metric and decide
/// whether two conceptualization levels suffice.
pub fn generalization_analysis(
    org: &OrgStructure,
    metrics: &[&Metric],
    assignments: &[Assignment],
) -> Result<GeneralizationReport, AppraisalError> {
    let mut steps: BTreeMap<String, Vec<StepClass>> = BTreeMap::new();
    let mut two_levels_sufficient = true;
    for metric in metrics {
        let mut previous = evaluate_metric(org, metric, &[])?;
        let mut classes = Vec::with_capacity(assignments.len());
        for end in 1..=assignments.len() {
            let current = evaluate_metric(org, metric, &assignments[..end])?;
            let class = if current == previous {
                StepClass::Inert
            } else {
                StepClass::Refining
            };
            if class == StepClass::Refining && end > 2 {
                two_levels_sufficient = false;
            }
            classes.push(class);
            previous = current;
        }
        steps.insert(metric.name.clone(), classes);
    }
    Ok(GeneralizationReport {
        steps,
        two_levels_sufficient,
    })
}

/// Weighted aggregate of metric components over the unit's subtree
/// population. Each enrolled employee contributes the component value its
/// own (labor function, unit) coordinates resolve to.
pub fn unit_appraisal(
    org: &OrgStructure,
    unit: &str,
    metrics: &BTreeMap<String, Metric>,
    weights: &BTreeMap<String, f64>,
    population: &[Employee],
) -> Result<f64, AppraisalError> {
    if !org.contains_unit(unit) {
        return Err(AppraisalError::UnknownUnit(unit.to_string()));
    }
    for name in weights.keys() {
        if !metrics.contains_key(name) {
            return Err(AppraisalError::MissingMetric(name.clone()));
        }
    }
    let general = Functional::general(org, population.to_vec());
    let scoped = general.restrict(org, Assignment::org_units([unit.to_string()]))?;
    let mut score = 0.0;
    for employee in &scoped.population {
        if !scoped.extension().contains(&employee.id) {
            continue;
        }
        for (name, weight) in weights {
            let metric = &metrics[name];
            let assignments = [
                Assignment::labor_functions([employee.labor_function.clone()]),
                Assignment::org_units([employee.unit.clone()]),
            ];
            let evaluation = evaluate_metric(org, metric, &assignments)?;
            let value = evaluation.values().next().copied().unwrap_or(0.0);
            score += weight * value;
        }
    }
    Ok(score)
}
