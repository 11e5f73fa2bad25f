//! Shared generators for the integration suites: random well-formed bundles
//! for round-trip checks, component pairs for merge properties, and
//! stratified schemas with planted violations.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use triadkit::access::{Grants, UserDecl};
use triadkit::appraisal::{AssignmentKind, ComponentKey, Metric, OrgStructure, OrgUnit};
use triadkit::event::{ArgRef, EventKind, ScriptAction, ScriptBinding, UnitRef};
use triadkit::formula::{CmpOp, Comprehension, DomainRef, Formula, Term};
use triadkit::meta::MetaPredicate;
use triadkit::model::{Carrier, Concept, Individual, Sort};
use triadkit::schema::{Bundle, ComponentHeader, Query, Schema};
use triadkit::semnet::Frame;
use triadkit::value::{Decimal, ScalarKind, Value};

fn ident(prefix: &str, n: usize) -> String {
    format!("{prefix}{n}")
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let pool = [
        "plain", "with \"quotes\"", "back\\slash", "line\nbreak", "tabbed\there", "héllo wörld",
        "",
    ];
    pool[rng.gen_range(0..pool.len())].to_string()
}

fn random_scalar(rng: &mut ChaCha8Rng, kind: ScalarKind) -> Value {
    match kind {
        ScalarKind::Text => Value::Text(random_text(rng)),
        ScalarKind::Integer => Value::Integer(rng.gen_range(-1000..1000)),
        ScalarKind::Decimal => Value::Decimal(Decimal::new(
            rng.gen_range(-100_000i128..100_000),
            rng.gen_range(0..4),
        )),
        ScalarKind::Date => Value::Date(
            chrono::NaiveDate::from_ymd_opt(
                rng.gen_range(1900..2100),
                rng.gen_range(1..=12),
                rng.gen_range(1..=28),
            )
            .expect("valid date"),
        ),
    }
}

/// A generated world plus the handles the formula generator may use.
struct Context {
    schema: Schema,
    carrier_symbols: Vec<String>,
}

fn gen_sorts(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    let count = rng.gen_range(1..=4);
    for n in 0..count {
        let name = ident(&format!("{prefix}S"), n);
        let carrier = if rng.gen_bool(0.7) {
            let mut members = BTreeSet::new();
            for k in 0..rng.gen_range(1..=4) {
                if rng.gen_bool(0.7) {
                    let symbol = format!("{prefix}k{n}_{k}");
                    ctx.carrier_symbols.push(symbol.clone());
                    members.insert(Value::Symbol(symbol));
                } else {
                    let kind = [ScalarKind::Integer, ScalarKind::Decimal, ScalarKind::Date]
                        [rng.gen_range(0..3)];
                    members.insert(random_scalar(rng, kind));
                }
            }
            Carrier::Finite(members)
        } else {
            Carrier::Scalar(
                [
                    ScalarKind::Text,
                    ScalarKind::Integer,
                    ScalarKind::Decimal,
                    ScalarKind::Date,
                ][rng.gen_range(0..4)],
            )
        };
        ctx.schema.sorts.insert(name.clone(), Sort { name, carrier });
    }
}

fn gen_org(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    if !rng.gen_bool(0.6) {
        return;
    }
    let mut counter = 0usize;
    let make_unit = |rng: &mut ChaCha8Rng, counter: &mut usize, depth: u32| {
        let mut unit = OrgUnit::new(ident(&format!("{prefix}U"), *counter));
        *counter += 1;
        unit.vacancies = rng.gen_range(0..3);
        unit.enrolled = rng.gen_range(0..3);
        let _ = depth;
        unit
    };
    let mut root = make_unit(rng, &mut counter, 0);
    for _ in 0..rng.gen_range(0..3) {
        let mut child = make_unit(rng, &mut counter, 1);
        for _ in 0..rng.gen_range(0..2) {
            child.children.push(make_unit(rng, &mut counter, 2));
        }
        child.children.sort_by(|a, b| a.name.cmp(&b.name));
        root.children.push(child);
    }
    root.children.sort_by(|a, b| a.name.cmp(&b.name));
    let functions: BTreeSet<String> = (0..rng.gen_range(0..3))
        .map(|n| ident(&format!("{prefix}f"), n))
        .collect();
    ctx.schema.org = Some(OrgStructure { root, functions });
}

fn gen_concepts(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    let sorts: Vec<String> = ctx.schema.sorts.keys().cloned().collect();
    let units: Vec<String> = ctx
        .schema
        .org
        .as_ref()
        .map(|org| org.unit_names().into_iter().collect())
        .unwrap_or_default();
    for n in 0..rng.gen_range(0..=3) {
        let name = ident(&format!("{prefix}C"), n);
        let mut attributes = Vec::new();
        for a in 0..rng.gen_range(0..=3) {
            let sort = sorts[rng.gen_range(0..sorts.len())].clone();
            attributes.push((format!("a{a}"), sort));
        }
        let governed_by = if !units.is_empty() && rng.gen_bool(0.4) {
            Some(units[rng.gen_range(0..units.len())].clone())
        } else {
            None
        };
        ctx.schema.concepts.insert(
            name.clone(),
            Concept {
                name,
                attributes,
                level: 0,
                governed_by,
            },
        );
    }
}

fn gen_relations(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    for n in 0..rng.gen_range(0..=3) {
        ctx.schema.relations.insert(ident(&format!("{prefix}r"), n));
    }
}

fn sort_member(rng: &mut ChaCha8Rng, schema: &Schema, sort_name: &str) -> Value {
    match &schema.sorts[sort_name].carrier {
        Carrier::Finite(members) => {
            let members: Vec<&Value> = members.iter().collect();
            members[rng.gen_range(0..members.len())].clone()
        }
        Carrier::Scalar(kind) => random_scalar(rng, *kind),
    }
}

fn gen_individuals(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    let concepts: Vec<Concept> = ctx.schema.concepts.values().cloned().collect();
    if concepts.is_empty() {
        return;
    }
    for n in 0..rng.gen_range(0..=3) {
        let concept = &concepts[rng.gen_range(0..concepts.len())];
        let id = ident(&format!("{prefix}i"), n);
        let mut identifying = BTreeMap::new();
        for (attr, sort) in &concept.attributes {
            identifying.insert(attr.clone(), sort_member(rng, &ctx.schema, sort));
        }
        ctx.schema.individuals.insert(
            id.clone(),
            Individual {
                id,
                concept: concept.name.clone(),
                identifying,
            },
        );
    }
}

fn constant_pool(ctx: &Context, rng: &mut ChaCha8Rng) -> Vec<Value> {
    let mut pool: Vec<Value> = ctx
        .carrier_symbols
        .iter()
        .map(|s| Value::Symbol(s.clone()))
        .collect();
    pool.extend(ctx.schema.individuals.keys().map(|id| Value::Symbol(id.clone())));
    if let Some(org) = &ctx.schema.org {
        pool.extend(org.unit_names().into_iter().map(Value::Symbol));
    }
    pool.push(Value::Integer(rng.gen_range(0..100)));
    pool.push(Value::Text(random_text(rng)));
    pool
}

fn gen_frames(rng: &mut ChaCha8Rng, ctx: &mut Context) {
    let relations: Vec<String> = ctx.schema.relations.iter().cloned().collect();
    if relations.is_empty() {
        return;
    }
    let pool = constant_pool(ctx, rng);
    for _ in 0..rng.gen_range(0..=4) {
        let relation = relations[rng.gen_range(0..relations.len())].clone();
        let subject = pool[rng.gen_range(0..pool.len())].clone();
        let object = pool[rng.gen_range(0..pool.len())].clone();
        ctx.schema.frames.insert(Frame {
            relation,
            subject,
            object,
        });
    }
}

/// Formulas guaranteed to resolve against the generated schema, for a
/// comprehension over the given domain.
fn gen_formula(rng: &mut ChaCha8Rng, ctx: &Context, var: &str, domain: &DomainRef, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        return gen_atom(rng, ctx, var, domain);
    }
    match rng.gen_range(0..3) {
        0 => gen_formula(rng, ctx, var, domain, depth - 1).negate(),
        1 => gen_formula(rng, ctx, var, domain, depth - 1)
            .and(gen_formula(rng, ctx, var, domain, depth - 1)),
        _ => gen_formula(rng, ctx, var, domain, depth - 1)
            .or(gen_formula(rng, ctx, var, domain, depth - 1)),
    }
}

fn gen_atom(rng: &mut ChaCha8Rng, ctx: &Context, var: &str, domain: &DomainRef) -> Formula {
    match domain {
        DomainRef::Sort(sort) => {
            let value = sort_member(rng, &ctx.schema, sort);
            if rng.gen_bool(0.5) {
                Formula::Compare {
                    lhs: Term::Var(var.to_string()),
                    op: [CmpOp::Eq, CmpOp::Ne][rng.gen_range(0..2)],
                    rhs: Term::Const(value),
                }
            } else {
                let mut set = BTreeSet::new();
                for _ in 0..rng.gen_range(1..=3) {
                    set.insert(sort_member(rng, &ctx.schema, sort));
                }
                Formula::Member {
                    lhs: Term::Var(var.to_string()),
                    set,
                }
            }
        }
        DomainRef::Concept(concept) => {
            let declared = &ctx.schema.concepts[concept];
            if declared.attributes.is_empty() {
                return Formula::Truth(rng.gen_bool(0.5));
            }
            let (attr, sort) =
                declared.attributes[rng.gen_range(0..declared.attributes.len())].clone();
            Formula::Compare {
                lhs: Term::Attr(var.to_string(), attr),
                op: [CmpOp::Eq, CmpOp::Ne][rng.gen_range(0..2)],
                rhs: Term::Const(sort_member(rng, &ctx.schema, &sort)),
            }
        }
        DomainRef::AllConcepts => {
            let sorts: Vec<String> = ctx.schema.sorts.keys().cloned().collect();
            Formula::Atom {
                pred: "has_attr_sort".into(),
                args: vec![
                    Term::Var(var.to_string()),
                    Term::Const(Value::Symbol(sorts[rng.gen_range(0..sorts.len())].clone())),
                ],
            }
        }
        DomainRef::Level(_) | DomainRef::Predicate(_) => Formula::Atom {
            pred: "nonempty".into(),
            args: vec![Term::Var(var.to_string())],
        },
        DomainRef::Values(_) => Formula::Truth(rng.gen_bool(0.5)),
    }
}

fn gen_predicates(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    let finite_sorts: Vec<String> = ctx
        .schema
        .sorts
        .iter()
        .filter(|(_, sort)| matches!(sort.carrier, Carrier::Finite(_)))
        .map(|(name, _)| name.clone())
        .collect();
    let concepts: Vec<String> = ctx.schema.concepts.keys().cloned().collect();
    for n in 0..rng.gen_range(0..=2) {
        let name = ident(&format!("{prefix}P"), n);
        let mut options: Vec<DomainRef> = vec![DomainRef::AllConcepts];
        if let Some(sort) = finite_sorts.get(rng.gen_range(0..finite_sorts.len().max(1))) {
            options.push(DomainRef::Sort(sort.clone()));
        }
        if !concepts.is_empty() {
            options.push(DomainRef::Concept(
                concepts[rng.gen_range(0..concepts.len())].clone(),
            ));
        }
        let domain = options[rng.gen_range(0..options.len())].clone();
        let body = gen_formula(rng, ctx, "x", &domain, 3);
        ctx.schema.predicates.insert(
            name.clone(),
            MetaPredicate {
                name,
                level: 1,
                body: Comprehension::new("x", domain, body),
            },
        );
    }
    // Sometimes a level-2 predicate over the level-1 population.
    if !ctx.schema.predicates.is_empty() && rng.gen_bool(0.4) {
        let name = format!("{prefix}P9");
        let domain = DomainRef::Level(1);
        let body = gen_formula(rng, ctx, "x", &domain, 2);
        ctx.schema.predicates.insert(
            name.clone(),
            MetaPredicate {
                name,
                level: 2,
                body: Comprehension::new("x", domain, body),
            },
        );
    }
}

fn gen_metrics(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    let (functions, units): (Vec<String>, Vec<String>) = match &ctx.schema.org {
        Some(org) => (
            org.functions.iter().cloned().collect(),
            org.unit_names().into_iter().collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    for n in 0..rng.gen_range(0..=2) {
        let name = ident(&format!("{prefix}m"), n);
        let mut metric = Metric::new(name.clone(), []);
        if rng.gen_bool(0.5) {
            metric.base = Some(Decimal::new(rng.gen_range(0..1000), rng.gen_range(0..2)));
        }
        if !functions.is_empty() && rng.gen_bool(0.6) {
            metric.depends.insert(AssignmentKind::LaborFunction);
        }
        if !units.is_empty() && rng.gen_bool(0.4) {
            metric.depends.insert(AssignmentKind::OrgUnit);
        }
        let lf_dim: Vec<Option<String>> = if metric.depends.contains(&AssignmentKind::LaborFunction)
        {
            functions.iter().cloned().map(Some).collect()
        } else {
            vec![None]
        };
        let unit_dim: Vec<Option<String>> = if metric.depends.contains(&AssignmentKind::OrgUnit) {
            units.iter().cloned().map(Some).collect()
        } else {
            vec![None]
        };
        for lf in &lf_dim {
            for unit in &unit_dim {
                if lf.is_none() && unit.is_none() {
                    continue;
                }
                if rng.gen_bool(0.8) {
                    metric.components.insert(
                        ComponentKey {
                            labor_function: lf.clone(),
                            unit: unit.clone(),
                        },
                        Decimal::new(rng.gen_range(0..10_000), rng.gen_range(0..3)),
                    );
                }
            }
        }
        ctx.schema.metrics.insert(name, metric);
    }
}

fn gen_users(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    let Some(org) = ctx.schema.org.clone() else {
        return;
    };
    let units: Vec<String> = org.unit_names().into_iter().collect();
    let concepts: Vec<Concept> = ctx.schema.concepts.values().cloned().collect();
    for n in 0..rng.gen_range(0..=2) {
        let name = ident(&format!("{prefix}user"), n);
        let mut grants = Grants::default();
        if rng.gen_bool(0.3) {
            grants
                .read_units
                .insert(units[rng.gen_range(0..units.len())].clone());
        }
        if rng.gen_bool(0.3) {
            grants
                .write_units
                .insert(units[rng.gen_range(0..units.len())].clone());
        }
        if let Some(concept) = concepts.get(rng.gen_range(0..concepts.len().max(1))) {
            if !concept.attributes.is_empty() && rng.gen_bool(0.3) {
                grants.required_attributes.insert(
                    concept.name.clone(),
                    [concept.attributes[0].0.clone()].into(),
                );
            }
        }
        ctx.schema.users.insert(
            name.clone(),
            UserDecl {
                name,
                unit: units[rng.gen_range(0..units.len())].clone(),
                role: format!("role{}", rng.gen_range(0..2)),
                admin: rng.gen_bool(0.3),
                grants,
            },
        );
    }
}

fn gen_scripts(rng: &mut ChaCha8Rng, prefix: &str, ctx: &mut Context) {
    for n in 0..rng.gen_range(0..=2) {
        ctx.schema.custom_events.insert(ident(&format!("{prefix}ev"), n));
    }
    let events: Vec<EventKind> = {
        let mut all = vec![
            EventKind::Enroll,
            EventKind::Transfer,
            EventKind::Dismiss,
            EventKind::ReEnroll,
        ];
        all.extend(ctx.schema.custom_events.iter().cloned().map(EventKind::Custom));
        all
    };
    let relations: Vec<String> = ctx.schema.relations.iter().cloned().collect();
    let concepts: Vec<String> = ctx.schema.concepts.keys().cloned().collect();
    let units: Vec<String> = ctx
        .schema
        .org
        .as_ref()
        .map(|org| org.unit_names().into_iter().collect())
        .unwrap_or_default();
    for _ in 0..rng.gen_range(0..=2) {
        let mut actions: Vec<ScriptAction> = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            actions.push(match rng.gen_range(0..4) {
                0 => ScriptAction::AdjustCounter {
                    counter: format!("{prefix}cnt"),
                    delta: rng.gen_range(-3..=3),
                },
                1 if !units.is_empty() => ScriptAction::AdjustVacancy {
                    unit: match rng.gen_range(0..3) {
                        0 => UnitRef::Source,
                        1 => UnitRef::Target,
                        _ => UnitRef::Named(units[rng.gen_range(0..units.len())].clone()),
                    },
                    delta: rng.gen_range(-2..=2),
                },
                2 if !relations.is_empty() => ScriptAction::AddFrame {
                    relation: relations[rng.gen_range(0..relations.len())].clone(),
                    subject: ArgRef::Subject,
                    object: if rng.gen_bool(0.5) {
                        ArgRef::Target
                    } else {
                        ArgRef::Const(Value::Integer(rng.gen_range(0..10)))
                    },
                },
                3 => ScriptAction::Transition {
                    label: random_text(rng),
                    updates: BTreeMap::new(),
                },
                _ => ScriptAction::Fail,
            });
        }
        let concept = if !concepts.is_empty() && rng.gen_bool(0.4) {
            Some(concepts[rng.gen_range(0..concepts.len())].clone())
        } else {
            None
        };
        let unit = if !units.is_empty() && rng.gen_bool(0.3) {
            Some(units[rng.gen_range(0..units.len())].clone())
        } else {
            None
        };
        ctx.schema.scripts.push(ScriptBinding {
            event: events[rng.gen_range(0..events.len())].clone(),
            concept,
            unit,
            actions,
        });
    }
}

fn gen_queries(rng: &mut ChaCha8Rng, ctx: &Context, queries: &mut Vec<Query>) {
    let mut named: Vec<String> = ctx.schema.sorts.keys().cloned().collect();
    named.extend(ctx.schema.concepts.keys().cloned());
    named.extend(ctx.schema.predicates.keys().cloned());
    named.extend(ctx.schema.metrics.keys().cloned());
    for _ in 0..rng.gen_range(0..=2) {
        if named.is_empty() {
            break;
        }
        match rng.gen_range(0..3) {
            0 => queries.push(Query::Extension(
                named[rng.gen_range(0..named.len())].clone(),
            )),
            1 => {
                let finite: Vec<String> = ctx
                    .schema
                    .sorts
                    .iter()
                    .filter(|(_, s)| matches!(s.carrier, Carrier::Finite(_)))
                    .map(|(n, _)| n.clone())
                    .collect();
                if let Some(sort) = finite.first() {
                    let domain = DomainRef::Sort(sort.clone());
                    let body = gen_formula(rng, ctx, "x", &domain, 2);
                    let comp = Comprehension::new("x", domain, body);
                    if rng.gen_bool(0.5) {
                        queries.push(Query::Comprehend(comp));
                    } else {
                        queries.push(Query::Individuate(comp));
                    }
                }
            }
            _ => {
                if let Some(org) = &ctx.schema.org {
                    if !org.functions.is_empty() {
                        queries.push(Query::Functional(vec![
                            triadkit::appraisal::Assignment {
                                kind: AssignmentKind::LaborFunction,
                                values: org.functions.clone(),
                            },
                        ]));
                    }
                }
            }
        }
    }
}

/// One random well-formed bundle. `prefix` namespaces every declared name so
/// bundles with distinct prefixes merge without collisions.
pub fn random_bundle(rng: &mut ChaCha8Rng, prefix: &str) -> Bundle {
    let mut ctx = Context {
        schema: Schema::default(),
        carrier_symbols: Vec::new(),
    };
    gen_sorts(rng, prefix, &mut ctx);
    gen_org(rng, prefix, &mut ctx);
    gen_concepts(rng, prefix, &mut ctx);
    gen_relations(rng, prefix, &mut ctx);
    gen_individuals(rng, prefix, &mut ctx);
    gen_frames(rng, &mut ctx);
    gen_predicates(rng, prefix, &mut ctx);
    gen_metrics(rng, prefix, &mut ctx);
    gen_users(rng, prefix, &mut ctx);
    gen_scripts(rng, prefix, &mut ctx);
    if rng.gen_bool(0.2) {
        ctx.schema.component = Some(ComponentHeader {
            name: format!("{prefix}Comp"),
            requires: [format!("{prefix}Xreq")].into(),
        });
    }
    if let Some(org) = &ctx.schema.org {
        if rng.gen_bool(0.3) {
            let units: Vec<String> = org.unit_names().into_iter().collect();
            let unit = units[rng.gen_range(0..units.len())].clone();
            ctx.schema.priorities.insert(unit, rng.gen_range(0..5));
        }
    }
    let mut queries = Vec::new();
    gen_queries(rng, &ctx, &mut queries);
    Bundle {
        schema: ctx.schema,
        queries,
    }
}

/// A component bundle without org, users or scripts, namespaced by `prefix`,
/// suitable for merge-property tests.
pub fn random_component(rng: &mut ChaCha8Rng, prefix: &str) -> Bundle {
    let mut ctx = Context {
        schema: Schema::default(),
        carrier_symbols: Vec::new(),
    };
    gen_sorts(rng, prefix, &mut ctx);
    gen_concepts(rng, prefix, &mut ctx);
    gen_relations(rng, prefix, &mut ctx);
    gen_individuals(rng, prefix, &mut ctx);
    gen_frames(rng, &mut ctx);
    gen_predicates(rng, prefix, &mut ctx);
    ctx.schema.component = Some(ComponentHeader {
        name: format!("{prefix}Comp"),
        requires: BTreeSet::new(),
    });
    Bundle {
        schema: ctx.schema,
        queries: Vec::new(),
    }
}
