//! Canonical printer: deterministic text that reparses to a structurally
//! equal bundle.
//!
//! Declarations print sorted by kind, then by name; inner field order is
//! preserved only where it is semantic (concept attribute lists, script
//! action lists). Scripts and queries keep their source order — script
//! registration order is dispatch order. Output is LF-terminated.

use crate::appraisal::{AssignmentKind, Metric, OrgUnit};
use crate::event::{ScriptAction, ScriptBinding};
use crate::model::{Carrier, Concept, Individual, Sort};
use crate::schema::{Bundle, Query};
use crate::value::quote_text;

pub fn print_canonical(bundle: &Bundle) -> String {
    let mut out = String::new();
    let schema = &bundle.schema;

    if let Some(component) = &schema.component {
        out.push_str(&format!("component {}", component.name));
        if !component.requires.is_empty() {
            out.push_str(" requires ");
            out.push_str(&join(component.requires.iter()));
        }
        out.push_str(";\n");
    }
    for sort in schema.sorts.values() {
        print_sort(&mut out, sort);
    }
    for concept in schema.concepts.values() {
        print_concept(&mut out, concept);
    }
    for relation in &schema.relations {
        out.push_str(&format!("relation {relation}/2;\n"));
    }
    for individual in schema.individuals.values() {
        print_individual(&mut out, individual);
    }
    for frame in &schema.frames {
        out.push_str(&format!(
            "frame {}({}, {});\n",
            frame.relation, frame.subject, frame.object
        ));
    }
    for predicate in schema.predicates.values() {
        out.push_str(&format!(
            "level {} predicate {} = {};\n",
            predicate.level, predicate.name, predicate.body
        ));
    }
    for metric in schema.metrics.values() {
        print_metric(&mut out, metric);
    }
    if let Some(org) = &schema.org {
        print_org(&mut out, org);
    }
    for (unit, rank) in &schema.priorities {
        out.push_str(&format!("priority {unit} rank {rank};\n"));
    }
    for event in &schema.custom_events {
        out.push_str(&format!("event {event};\n"));
    }
    for user in schema.users.values() {
        print_user(&mut out, user);
    }
    for script in &schema.scripts {
        print_script(&mut out, script);
    }
    for query in &bundle.queries {
        print_query(&mut out, query);
    }
    out
}

fn join<'a>(items: impl Iterator<Item = &'a String>) -> String {
    items
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

fn print_sort(out: &mut String, sort: &Sort) {
    match &sort.carrier {
        Carrier::Scalar(kind) => {
            out.push_str(&format!("sort {} = {kind};\n", sort.name));
        }
        Carrier::Finite(members) => {
            let members = members
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            out.push_str(&format!("sort {} = {{{members}}};\n", sort.name));
        }
    }
}

fn print_concept(out: &mut String, concept: &Concept) {
    out.push_str(&format!("concept {}", concept.name));
    if let Some(unit) = &concept.governed_by {
        out.push_str(&format!(" in {unit}"));
    }
    if concept.level > 0 {
        out.push_str(&format!(" level {}", concept.level));
    }
    if concept.attributes.is_empty() {
        out.push_str(" {};\n");
        return;
    }
    out.push_str(" {\n");
    for (attr, sort) in &concept.attributes {
        out.push_str(&format!("  {attr}: {sort};\n"));
    }
    out.push_str("};\n");
}

fn print_individual(out: &mut String, individual: &Individual) {
    let props = individual
        .identifying
        .iter()
        .map(|(attr, value)| format!("{attr} = {value}"))
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!(
        "individual {} : {} {{{props}}};\n",
        individual.id, individual.concept
    ));
}

fn print_metric(out: &mut String, metric: &Metric) {
    out.push_str(&format!("metric {}", metric.name));
    if let Some(base) = &metric.base {
        out.push_str(&format!(" = {base}"));
    }
    if !metric.depends.is_empty() {
        out.push_str(" depends on ");
        let kinds = metric
            .depends
            .iter()
            .map(|kind| kind.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&kinds);
    }
    if !metric.components.is_empty() {
        out.push_str(" components {\n");
        for (key, value) in &metric.components {
            let label = match (&key.labor_function, &key.unit) {
                (Some(lf), Some(unit)) => format!("({lf}, {unit})"),
                (Some(lf), None) => lf.clone(),
                (None, Some(unit)) => unit.clone(),
                (None, None) => String::new(),
            };
            out.push_str(&format!("  {label} = {value};\n"));
        }
        out.push('}');
    }
    out.push_str(";\n");
}

fn print_unit(out: &mut String, unit: &OrgUnit, indent: usize) {
    let pad = "  ".repeat(indent);
    out.push_str(&format!("{pad}unit {}", unit.name));
    if unit.vacancies > 0 {
        out.push_str(&format!(" vacancies {}", unit.vacancies));
    }
    if unit.enrolled > 0 {
        out.push_str(&format!(" enrolled {}", unit.enrolled));
    }
    if unit.children.is_empty() {
        out.push_str(";\n");
    } else {
        out.push_str(" {\n");
        for child in &unit.children {
            print_unit(out, child, indent + 1);
        }
        out.push_str(&format!("{pad}}};\n"));
    }
}

fn print_org(out: &mut String, org: &crate::appraisal::OrgStructure) {
    out.push_str(&format!("org {}", org.root.name));
    if org.root.vacancies > 0 {
        out.push_str(&format!(" vacancies {}", org.root.vacancies));
    }
    if org.root.enrolled > 0 {
        out.push_str(&format!(" enrolled {}", org.root.enrolled));
    }
    out.push_str(" {\n");
    if !org.functions.is_empty() {
        out.push_str(&format!("  functions {{{}}};\n", join(org.functions.iter())));
    }
    for child in &org.root.children {
        print_unit(out, child, 1);
    }
    out.push_str("};\n");
}

fn print_user(out: &mut String, user: &crate::access::UserDecl) {
    out.push_str(&format!(
        "user {} at {} role {}",
        user.name, user.unit, user.role
    ));
    if user.admin {
        out.push_str(" admin");
    }
    if !user.grants.read_units.is_empty() {
        out.push_str(&format!(" grant read {{{}}}", join(user.grants.read_units.iter())));
    }
    if !user.grants.write_units.is_empty() {
        out.push_str(&format!(" grant write {{{}}}", join(user.grants.write_units.iter())));
    }
    for (concept, attrs) in &user.grants.required_attributes {
        out.push_str(&format!(" require {concept} {{{}}}", join(attrs.iter())));
    }
    out.push_str(";\n");
}

fn print_script(out: &mut String, script: &ScriptBinding) {
    out.push_str(&format!("script on {}", script.event));
    if let Some(concept) = &script.concept {
        out.push_str(&format!(" concept {concept}"));
    }
    if let Some(unit) = &script.unit {
        out.push_str(&format!(" unit {unit}"));
    }
    out.push_str(" {\n");
    for action in &script.actions {
        out.push_str("  ");
        print_action(out, action);
        out.push_str(";\n");
    }
    out.push_str("};\n");
}

fn print_action(out: &mut String, action: &ScriptAction) {
    match action {
        ScriptAction::AdjustVacancy { unit, delta } => {
            out.push_str(&format!("vacancy {unit} {}", delta_text(*delta)));
        }
        ScriptAction::AdjustCounter { counter, delta } => {
            out.push_str(&format!("counter {counter} {}", delta_text(*delta)));
        }
        ScriptAction::AddFrame {
            relation,
            subject,
            object,
        } => {
            out.push_str(&format!("frame {relation}({subject}, {object})"));
        }
        ScriptAction::Transition { label, updates } => {
            out.push_str(&format!("transition {}", quote_text(label)));
            if !updates.is_empty() {
                let sets = updates
                    .iter()
                    .map(|(attr, value)| format!("{attr} = {value}"))
                    .collect::<Vec<_>>()
                    .join(", ");
                out.push_str(&format!(" set {{{sets}}}"));
            }
        }
        ScriptAction::Fail => out.push_str("fail"),
    }
}

fn delta_text(delta: i64) -> String {
    if delta < 0 {
        format!("-= {}", -delta)
    } else {
        format!("+= {delta}")
    }
}

fn print_query(out: &mut String, query: &Query) {
    match query {
        Query::Extension(name) => out.push_str(&format!("eval {name};\n")),
        Query::Comprehend(comp) => out.push_str(&format!("eval {comp};\n")),
        Query::Individuate(comp) => out.push_str(&format!("eval unique {comp};\n")),
        Query::Functional(assignments) => {
            out.push_str("eval F");
            print_assignments(out, assignments);
            out.push_str(";\n");
        }
        Query::Metric(name, assignments) => {
            out.push_str(&format!("eval {name}"));
            print_assignments(out, assignments);
            out.push_str(";\n");
        }
    }
}

fn print_assignments(out: &mut String, assignments: &[crate::appraisal::Assignment]) {
    for assignment in assignments {
        let point = match assignment.kind {
            AssignmentKind::LaborFunction => "s",
            AssignmentKind::OrgUnit => "p",
        };
        out.push_str(&format!("({point}={{{}}})", join(assignment.values.iter())));
    }
}
