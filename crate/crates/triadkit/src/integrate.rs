//! Component integration: merging a component schema into a base under
//! semantic priority, integrity verification, and the append-only version
//! history with rollback.
//!
//! Merging is all-or-nothing. Disjoint declarations are unioned; colliding
//! concept declarations are resolved by the priority rank of their governing
//! org units (lower rank wins, unit-name tie-break); any conflict that no
//! rule resolves is REJECTED and the base comes back unchanged. A successful
//! merge always passes integrity verification — a merge that would introduce
//! new findings is rejected as a whole.
//!
//! The history never destroys a version: rollback appends a new version
//! whose content is the byte-exact stored text of the target.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsl::{parse_document, print_canonical, ParseDiagnostic, SourceDocument};
use crate::meta::{check_stratification, StratificationViolation};
use crate::model::Carrier;
use crate::schema::{Bundle, DeclKind, Schema};
use crate::value::Value;

#[derive(Debug, Error)]
pub enum MergeError {
    #[error("component is not well-formed: {0}")]
    IllFormedComponent(String),
}

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("version {0} does not exist in the history")]
    UnknownVersion(u32),
    #[error("history store is corrupt: {0}")]
    Corrupt(String),
    #[error("stored version no longer parses: {0:?}")]
    Parse(Vec<ParseDiagnostic>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

// ---- semantic priority ---------------------------------------------------

/// Conflict-resolution ranks for governing units: the unit's org depth by
/// default (lower depth = higher priority), overridable by `priority`
/// declarations. Declarations without a governing unit rank as the root.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SemanticPriority {
    ranks: std::collections::BTreeMap<String, u32>,
    root: String,
}

impl SemanticPriority {
    /// Derive ranks from the base schema's org tree and its `priority`
    /// overrides.
    pub fn from_schema(schema: &Schema) -> Self {
        let mut out = SemanticPriority::default();
        if let Some(org) = &schema.org {
            out.root = org.root.name.clone();
            for unit in org.unit_names() {
                let rank = schema
                    .priorities
                    .get(&unit)
                    .copied()
                    .or_else(|| org.depth(&unit))
                    .unwrap_or(0);
                out.ranks.insert(unit, rank);
            }
        }
        for (unit, rank) in &schema.priorities {
            out.ranks.insert(unit.clone(), *rank);
        }
        out
    }

    /// (rank, unit) for a declaration governed by `unit`; ungoverned
    /// declarations rank as the root unit.
    fn rank_of(&self, unit: Option<&str>) -> (u32, String) {
        let unit = unit.unwrap_or(&self.root);
        let rank = self.ranks.get(unit).copied().unwrap_or(0);
        (rank, unit.to_string())
    }
}

// ---- conflict report -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictKind {
    NameCollision,
    AttributeMismatch,
    SortRedefinition,
    LevelViolation,
    DanglingDependency,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConflictKind::NameCollision => f.write_str("NameCollision"),
            ConflictKind::AttributeMismatch => f.write_str("AttributeMismatch"),
            ConflictKind::SortRedefinition => f.write_str("SortRedefinition"),
            ConflictKind::LevelViolation => f.write_str("LevelViolation"),
            ConflictKind::DanglingDependency => f.write_str("DanglingDependency"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    TakenBase,
    TakenComponent,
    Rejected,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resolution::TakenBase => f.write_str("taken: base"),
            Resolution::TakenComponent => f.write_str("taken: component"),
            Resolution::Rejected => f.write_str("REJECTED"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictEntry {
    pub kind: ConflictKind,
    pub name: String,
    pub resolution: Resolution,
    /// The priority rule applied, or why no rule resolves the conflict.
    pub rule: String,
}

impl fmt::Display for ConflictEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} `{}`: {} ({})",
            self.kind, self.name, self.resolution, self.rule
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConflictReport {
    pub entries: Vec<ConflictEntry>,
}

impl ConflictReport {
    pub fn rejected(&self) -> bool {
        self.entries
            .iter()
            .any(|entry| entry.resolution == Resolution::Rejected)
    }
}

impl fmt::Display for ConflictReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for entry in &self.entries {
            writeln!(f, "{entry}")?;
        }
        Ok(())
    }
}

// ---- integrity -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum IntegrityFinding {
    Dangling {
        subject: String,
        missing: String,
    },
    DuplicateName {
        name: String,
        kinds: String,
    },
    OrgOrphan {
        subject: String,
        unit: String,
    },
    PartialValuation {
        individual: String,
        attribute: String,
    },
    Stratification(String),
}

impl fmt::Display for IntegrityFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrityFinding::Dangling { subject, missing } => {
                write!(f, "dangling reference: {subject} -> `{missing}`")
            }
            IntegrityFinding::DuplicateName { name, kinds } => {
                write!(f, "duplicate name `{name}` ({kinds})")
            }
            IntegrityFinding::OrgOrphan { subject, unit } => {
                write!(f, "org orphan: {subject} names unknown unit `{unit}`")
            }
            IntegrityFinding::PartialValuation {
                individual,
                attribute,
            } => write!(
                f,
                "individual `{individual}` gives no value for attribute `{attribute}`"
            ),
            IntegrityFinding::Stratification(text) => write!(f, "stratification: {text}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntegrityReport {
    pub findings: Vec<IntegrityFinding>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

impl fmt::Display for IntegrityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for finding in &self.findings {
            writeln!(f, "{finding}")?;
        }
        Ok(())
    }
}

/// Referential integrity, duplicate names, org orphans and stratification in
/// one report. The empty report defines an integral schema. Concepts listed
/// in a component's `requires` clause count as declared.
pub fn verify_integrity(schema: &Schema) -> IntegrityReport {
    let mut findings = Vec::new();
    let extern_concepts: BTreeSet<String> = schema
        .component
        .as_ref()
        .map(|header| header.requires.clone())
        .unwrap_or_default();
    let constants = schema.constant_symbols();
    let has_concept = |name: &str| {
        schema.concepts.contains_key(name) || extern_concepts.contains(name)
    };

    // Duplicate names across declaration kinds.
    let mut seen: std::collections::BTreeMap<&str, Vec<DeclKind>> =
        std::collections::BTreeMap::new();
    for (kind, name) in schema.declared_names() {
        seen.entry(name).or_default().push(kind);
    }
    for (name, kinds) in seen {
        if kinds.len() > 1 {
            findings.push(IntegrityFinding::DuplicateName {
                name: name.to_string(),
                kinds: kinds
                    .iter()
                    .map(|k| k.label())
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
    }

    // Unit references resolve against the merge base when the document has
    // no org of its own; org-dependent checks apply once an org exists.
    let has_org = schema.org.is_some();
    for concept in schema.concepts.values() {
        for (attr, sort) in &concept.attributes {
            if !schema.sorts.contains_key(sort) {
                findings.push(IntegrityFinding::Dangling {
                    subject: format!("concept `{}` attribute `{attr}`", concept.name),
                    missing: sort.clone(),
                });
            }
        }
        if let Some(unit) = &concept.governed_by {
            if has_org && !unit_exists(schema, unit) {
                findings.push(IntegrityFinding::OrgOrphan {
                    subject: format!("concept `{}`", concept.name),
                    unit: unit.clone(),
                });
            }
        }
    }

    for individual in schema.individuals.values() {
        if !has_concept(&individual.concept) {
            findings.push(IntegrityFinding::Dangling {
                subject: format!("individual `{}`", individual.id),
                missing: individual.concept.clone(),
            });
            continue;
        }
        if let Some(concept) = schema.concepts.get(&individual.concept) {
            for attr in individual.identifying.keys() {
                if !concept.has_attribute(attr) {
                    findings.push(IntegrityFinding::Dangling {
                        subject: format!("individual `{}` attribute", individual.id),
                        missing: attr.clone(),
                    });
                }
            }
            for (attr, sort_name) in &concept.attributes {
                match individual.identifying.get(attr) {
                    None => findings.push(IntegrityFinding::PartialValuation {
                        individual: individual.id.clone(),
                        attribute: attr.clone(),
                    }),
                    Some(value) => {
                        if let Some(sort) = schema.sorts.get(sort_name) {
                            if !sort.admits(value) {
                                findings.push(IntegrityFinding::Dangling {
                                    subject: format!(
                                        "individual `{}` value `{value}`",
                                        individual.id
                                    ),
                                    missing: sort_name.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
    }

    for frame in &schema.frames {
        if !schema.relations.contains(&frame.relation) {
            findings.push(IntegrityFinding::Dangling {
                subject: format!("frame {frame}"),
                missing: frame.relation.clone(),
            });
        }
        for term in [&frame.subject, &frame.object] {
            if let Value::Symbol(symbol) = term {
                if !constants.contains(symbol) && !has_concept(symbol) {
                    findings.push(IntegrityFinding::Dangling {
                        subject: format!("frame {frame}"),
                        missing: symbol.clone(),
                    });
                }
            }
        }
    }

    for predicate in schema.predicates.values() {
        let domain_known = match &predicate.body.domain {
            crate::formula::DomainRef::Sort(name) => schema.sorts.contains_key(name),
            crate::formula::DomainRef::Concept(name) => has_concept(name),
            crate::formula::DomainRef::Predicate(name) => schema.predicates.contains_key(name),
            crate::formula::DomainRef::AllConcepts
            | crate::formula::DomainRef::Level(_)
            | crate::formula::DomainRef::Values(_) => true,
        };
        if !domain_known {
            findings.push(IntegrityFinding::Dangling {
                subject: format!("predicate `{}` domain", predicate.name),
                missing: predicate.body.domain.to_string(),
            });
        }
    }

    if has_org {
        for (subject, unit) in named_units(schema) {
            if !unit_exists(schema, &unit) {
                findings.push(IntegrityFinding::OrgOrphan { subject, unit });
            }
        }
    }

    for violation in check_stratification(schema).violations {
        findings.push(IntegrityFinding::Stratification(format_violation(&violation)));
    }

    findings.sort();
    findings.dedup();
    IntegrityReport { findings }
}

fn format_violation(violation: &StratificationViolation) -> String {
    violation.to_string()
}

fn unit_exists(schema: &Schema, unit: &str) -> bool {
    schema
        .org
        .as_ref()
        .map(|org| org.contains_unit(unit))
        .unwrap_or(false)
}

/// Every (subject, unit) pair of org-unit references outside the org tree
/// itself.
fn named_units(schema: &Schema) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for user in schema.users.values() {
        out.push((format!("user `{}`", user.name), user.unit.clone()));
        for unit in user.grants.read_units.iter().chain(&user.grants.write_units) {
            out.push((format!("grant of user `{}`", user.name), unit.clone()));
        }
    }
    for (index, script) in schema.scripts.iter().enumerate() {
        if let Some(unit) = &script.unit {
            out.push((format!("script #{index}"), unit.clone()));
        }
        for action in &script.actions {
            if let crate::event::ScriptAction::AdjustVacancy {
                unit: crate::event::UnitRef::Named(name),
                ..
            } = action
            {
                out.push((format!("script #{index} vacancy action"), name.clone()));
            }
        }
    }
    for unit in schema.priorities.keys() {
        out.push(("priority declaration".to_string(), unit.clone()));
    }
    for metric in schema.metrics.values() {
        for key in metric.components.keys() {
            if let Some(unit) = &key.unit {
                out.push((format!("metric `{}` component", metric.name), unit.clone()));
            }
        }
    }
    out
}

// ---- merge -----------------------------------------------------------------

fn describe_diagnostics(diagnostics: &[ParseDiagnostic]) -> String {
    diagnostics
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Merge a component bundle into a base bundle under the given priority.
///
/// Every REJECTED entry means the base is returned unchanged; otherwise the
/// merged schema is integral (it introduces no integrity finding the base
/// did not already have) and the component's header is consumed.
pub fn merge_component(
    base: &Bundle,
    comp: &Bundle,
    priority: &SemanticPriority,
) -> Result<(Bundle, ConflictReport), MergeError> {
    let comp_strata = check_stratification(&comp.schema);
    if !comp_strata.is_stratified() {
        return Err(MergeError::IllFormedComponent(comp_strata.to_string()));
    }

    let mut report = ConflictReport::default();
    let mut merged = base.clone();
    merged.schema.component = None;

    // Concepts the component expects from the base.
    if let Some(header) = &comp.schema.component {
        for required in &header.requires {
            if !base.schema.concepts.contains_key(required) {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::DanglingDependency,
                    name: required.clone(),
                    resolution: Resolution::Rejected,
                    rule: format!(
                        "component `{}` requires a concept the base does not declare",
                        header.name
                    ),
                });
            }
        }
    }

    // Cross-kind name collisions.
    let base_kinds: std::collections::BTreeMap<&str, DeclKind> =
        base.schema.declared_names().into_iter().map(|(k, n)| (n, k)).collect();
    for (kind, name) in comp.schema.declared_names() {
        if let Some(existing) = base_kinds.get(name) {
            if *existing != kind {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::NameCollision,
                    name: name.to_string(),
                    resolution: Resolution::Rejected,
                    rule: format!(
                        "declared as {} in the base and {} in the component",
                        existing.label(),
                        kind.label()
                    ),
                });
            }
        }
    }

    // Sorts: only identical redeclarations merge.
    for (name, sort) in &comp.schema.sorts {
        match base.schema.sorts.get(name) {
            None => {
                merged.schema.sorts.insert(name.clone(), sort.clone());
            }
            Some(existing) if existing == sort => {}
            Some(existing) => {
                let rule = match (&existing.carrier, &sort.carrier) {
                    (Carrier::Finite(a), Carrier::Finite(b)) => format!(
                        "carriers differ ({} vs {} members); no priority rule covers sorts",
                        a.len(),
                        b.len()
                    ),
                    _ => "carrier kinds differ; no priority rule covers sorts".to_string(),
                };
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::SortRedefinition,
                    name: name.clone(),
                    resolution: Resolution::Rejected,
                    rule,
                });
            }
        }
    }

    // Concepts: resolved by governing-unit priority.
    for (name, concept) in &comp.schema.concepts {
        match base.schema.concepts.get(name) {
            None => {
                merged.schema.concepts.insert(name.clone(), concept.clone());
            }
            Some(existing) if existing == concept => {}
            Some(existing) => {
                let (base_rank, base_unit) = priority.rank_of(existing.governed_by.as_deref());
                let (comp_rank, comp_unit) = priority.rank_of(concept.governed_by.as_deref());
                let entry = if (base_rank, &base_unit) < (comp_rank, &comp_unit) {
                    ConflictEntry {
                        kind: ConflictKind::AttributeMismatch,
                        name: name.clone(),
                        resolution: Resolution::TakenBase,
                        rule: format!(
                            "unit `{base_unit}` (rank {base_rank}) outranks `{comp_unit}` (rank {comp_rank})"
                        ),
                    }
                } else if (comp_rank, &comp_unit) < (base_rank, &base_unit) {
                    merged.schema.concepts.insert(name.clone(), concept.clone());
                    ConflictEntry {
                        kind: ConflictKind::AttributeMismatch,
                        name: name.clone(),
                        resolution: Resolution::TakenComponent,
                        rule: format!(
                            "unit `{comp_unit}` (rank {comp_rank}) outranks `{base_unit}` (rank {base_rank})"
                        ),
                    }
                } else {
                    ConflictEntry {
                        kind: ConflictKind::AttributeMismatch,
                        name: name.clone(),
                        resolution: Resolution::Rejected,
                        rule: format!(
                            "both sides governed by `{base_unit}` at rank {base_rank}; no order"
                        ),
                    }
                };
                report.entries.push(entry);
            }
        }
    }

    for relation in &comp.schema.relations {
        merged.schema.relations.insert(relation.clone());
    }

    // Predicates: levels must agree; equal-level redefinitions have no
    // governing unit to rank them.
    for (name, predicate) in &comp.schema.predicates {
        match base.schema.predicates.get(name) {
            None => {
                merged
                    .schema
                    .predicates
                    .insert(name.clone(), predicate.clone());
            }
            Some(existing) if existing == predicate => {}
            Some(existing) if existing.level != predicate.level => {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::LevelViolation,
                    name: name.clone(),
                    resolution: Resolution::Rejected,
                    rule: format!(
                        "declared at level {} in the base and level {} in the component",
                        existing.level, predicate.level
                    ),
                });
            }
            Some(_) => {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::NameCollision,
                    name: name.clone(),
                    resolution: Resolution::Rejected,
                    rule: "predicate bodies differ; no priority rule covers predicates".into(),
                });
            }
        }
    }

    for (name, metric) in &comp.schema.metrics {
        match base.schema.metrics.get(name) {
            None => {
                merged.schema.metrics.insert(name.clone(), metric.clone());
            }
            Some(existing) if existing == metric => {}
            Some(_) => {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::NameCollision,
                    name: name.clone(),
                    resolution: Resolution::Rejected,
                    rule: "metric declarations differ".into(),
                });
            }
        }
    }

    for (id, individual) in &comp.schema.individuals {
        match base.schema.individuals.get(id) {
            None => {
                merged
                    .schema
                    .individuals
                    .insert(id.clone(), individual.clone());
            }
            Some(existing) if existing == individual => {}
            Some(_) => {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::NameCollision,
                    name: id.clone(),
                    resolution: Resolution::Rejected,
                    rule: "individual declarations differ".into(),
                });
            }
        }
    }

    match (&base.schema.org, &comp.schema.org) {
        (_, None) => {}
        (None, Some(org)) => merged.schema.org = Some(org.clone()),
        (Some(existing), Some(org)) if existing == org => {}
        (Some(_), Some(_)) => {
            report.entries.push(ConflictEntry {
                kind: ConflictKind::NameCollision,
                name: "org".into(),
                resolution: Resolution::Rejected,
                rule: "both sides declare a different org tree".into(),
            });
        }
    }

    for (unit, rank) in &comp.schema.priorities {
        match base.schema.priorities.get(unit) {
            None => {
                merged.schema.priorities.insert(unit.clone(), *rank);
            }
            Some(existing) if existing == rank => {}
            Some(existing) => {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::NameCollision,
                    name: unit.clone(),
                    resolution: Resolution::Rejected,
                    rule: format!("priority rank {existing} in the base, {rank} in the component"),
                });
            }
        }
    }

    for (name, user) in &comp.schema.users {
        match base.schema.users.get(name) {
            None => {
                merged.schema.users.insert(name.clone(), user.clone());
            }
            Some(existing) if existing == user => {}
            Some(_) => {
                report.entries.push(ConflictEntry {
                    kind: ConflictKind::NameCollision,
                    name: name.clone(),
                    resolution: Resolution::Rejected,
                    rule: "user declarations differ".into(),
                });
            }
        }
    }

    merged.schema.frames.extend(comp.schema.frames.iter().cloned());
    merged
        .schema
        .custom_events
        .extend(comp.schema.custom_events.iter().cloned());
    // Scripts and queries union structurally, keeping base order first, so
    // re-merging the same component does not double its bindings.
    for script in &comp.schema.scripts {
        if !merged.schema.scripts.contains(script) {
            merged.schema.scripts.push(script.clone());
        }
    }
    for query in &comp.queries {
        if !merged.queries.contains(query) {
            merged.queries.push(query.clone());
        }
    }

    if report.rejected() {
        return Ok((base.clone(), report));
    }

    // All-or-nothing: a merge may not introduce integrity findings the base
    // did not already have.
    let base_findings: BTreeSet<IntegrityFinding> =
        verify_integrity(&base.schema).findings.into_iter().collect();
    let new_findings: Vec<IntegrityFinding> = verify_integrity(&merged.schema)
        .findings
        .into_iter()
        .filter(|finding| !base_findings.contains(finding))
        .collect();
    if !new_findings.is_empty() {
        for finding in new_findings {
            report.entries.push(ConflictEntry {
                kind: ConflictKind::DanglingDependency,
                name: "integrity".into(),
                resolution: Resolution::Rejected,
                rule: finding.to_string(),
            });
        }
        return Ok((base.clone(), report));
    }

    Ok((merged, report))
}

// ---- history ---------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryEntry {
    pub version: u32,
    pub parent: Option<u32>,
    pub operation: String,
    pub timestamp: String,
    pub canonical: String,
}

/// Append-only version history. Every entry stores the full canonical text;
/// `current` names the live version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaHistory {
    pub entries: Vec<HistoryEntry>,
    pub current: u32,
}

impl SchemaHistory {
    pub fn init(bundle: &Bundle, timestamp: impl Into<String>) -> Self {
        SchemaHistory {
            entries: vec![HistoryEntry {
                version: 0,
                parent: None,
                operation: "init".into(),
                timestamp: timestamp.into(),
                canonical: print_canonical(bundle),
            }],
            current: 0,
        }
    }

    pub fn entry(&self, version: u32) -> Option<&HistoryEntry> {
        self.entries.iter().find(|entry| entry.version == version)
    }

    fn parse_entry(&self, version: u32) -> Result<Bundle, HistoryError> {
        let entry = self
            .entry(version)
            .ok_or(HistoryError::UnknownVersion(version))?;
        parse_document(&SourceDocument {
            text: entry.canonical.clone(),
            origin: format!("history v{version}"),
        })
        .into_result()
        .map_err(HistoryError::Parse)
    }

    pub fn current_bundle(&self) -> Result<Bundle, HistoryError> {
        self.parse_entry(self.current)
    }

    /// Append a new version holding `bundle` and make it current.
    pub fn record(
        &mut self,
        bundle: &Bundle,
        operation: impl Into<String>,
        timestamp: impl Into<String>,
    ) -> u32 {
        let version = self.entries.last().map(|e| e.version + 1).unwrap_or(0);
        self.entries.push(HistoryEntry {
            version,
            parent: Some(self.current),
            operation: operation.into(),
            timestamp: timestamp.into(),
            canonical: print_canonical(bundle),
        });
        self.current = version;
        version
    }

    /// Roll back to `version` by appending a new version with the stored
    /// text, byte for byte. History is never truncated.
    pub fn rollback(
        &mut self,
        version: u32,
        timestamp: impl Into<String>,
    ) -> Result<Bundle, HistoryError> {
        let target = self
            .entry(version)
            .ok_or(HistoryError::UnknownVersion(version))?
            .clone();
        let bundle = self.parse_entry(version)?;
        let new_version = self.entries.last().map(|e| e.version + 1).unwrap_or(0);
        self.entries.push(HistoryEntry {
            version: new_version,
            parent: Some(version),
            operation: format!("rollback {version}"),
            timestamp: timestamp.into(),
            canonical: target.canonical,
        });
        self.current = new_version;
        Ok(bundle)
    }
}

/// Directory layout: numbered `.tdk` version files plus a line-oriented
/// `manifest` (version|parent|operation|timestamp, one record per line, and
/// a final `current|N` line).
pub struct HistoryStore {
    pub dir: PathBuf,
}

impl HistoryStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        HistoryStore { dir: dir.into() }
    }

    fn version_path(&self, version: u32) -> PathBuf {
        self.dir.join(format!("v{version:04}.tdk"))
    }

    pub fn exists(&self) -> bool {
        self.dir.join("manifest").exists()
    }

    pub fn load(&self) -> Result<SchemaHistory, HistoryError> {
        let manifest = std::fs::read_to_string(self.dir.join("manifest"))?;
        let mut entries = Vec::new();
        let mut current = None;
        for line in manifest.lines() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('|').collect();
            match fields.as_slice() {
                ["current", version] => {
                    current = Some(version.parse::<u32>().map_err(|_| {
                        HistoryError::Corrupt(format!("bad current version `{version}`"))
                    })?);
                }
                [version, parent, operation, timestamp] => {
                    let version = version.parse::<u32>().map_err(|_| {
                        HistoryError::Corrupt(format!("bad version `{version}`"))
                    })?;
                    let parent = match *parent {
                        "-" => None,
                        text => Some(text.parse::<u32>().map_err(|_| {
                            HistoryError::Corrupt(format!("bad parent `{text}`"))
                        })?),
                    };
                    let canonical = std::fs::read_to_string(self.version_path(version))?;
                    entries.push(HistoryEntry {
                        version,
                        parent,
                        operation: operation.to_string(),
                        timestamp: timestamp.to_string(),
                        canonical,
                    });
                }
                _ => {
                    return Err(HistoryError::Corrupt(format!("bad manifest line `{line}`")))
                }
            }
        }
        let current = current
            .ok_or_else(|| HistoryError::Corrupt("manifest has no current line".into()))?;
        if entries.is_empty() {
            return Err(HistoryError::Corrupt("manifest lists no versions".into()));
        }
        Ok(SchemaHistory { entries, current })
    }

    /// Persist the history. Version files are immutable once written; the
    /// manifest is replaced atomically, so a failed save never leaves a
    /// partial store.
    pub fn save(&self, history: &SchemaHistory) -> Result<(), HistoryError> {
        std::fs::create_dir_all(&self.dir)?;
        for entry in &history.entries {
            let path = self.version_path(entry.version);
            if !path.exists() {
                write_atomic(&path, &entry.canonical)?;
            }
        }
        let mut manifest = String::new();
        for entry in &history.entries {
            let parent = entry
                .parent
                .map(|p| p.to_string())
                .unwrap_or_else(|| "-".into());
            manifest.push_str(&format!(
                "{}|{}|{}|{}\n",
                entry.version, parent, entry.operation, entry.timestamp
            ));
        }
        manifest.push_str(&format!("current|{}\n", history.current));
        write_atomic(&self.dir.join("manifest"), &manifest)
    }
}

fn write_atomic(path: &Path, content: &str) -> Result<(), HistoryError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Wall-clock timestamp for history records.
pub fn now_timestamp() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Convenience: parse a component document, insisting it is well-formed.
pub fn parse_component(doc: &SourceDocument) -> Result<Bundle, MergeError> {
    parse_document(doc)
        .into_result()
        .map_err(|diagnostics| MergeError::IllFormedComponent(describe_diagnostics(&diagnostics)))
}
