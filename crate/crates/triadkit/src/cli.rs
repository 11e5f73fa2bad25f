//! Batch front door over `.tdk` documents: load, eval, merge, verify,
//! rollback, replay, simulate-session and report.
//!
//! Results go to stdout as sorted plain-text lines (or as JSON lines with
//! stable key order under `--format json-lines`); diagnostics go to stderr.
//! Exit codes: 0 success, 1 domain error, 2 usage error. Configuration is
//! flags only, except `TRIADKIT_MAX_ENUM`, which overrides the
//! variable-domain enumeration cap.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use clap::{Args, Parser, Subcommand};

use crate::access::{authorize, AccessOp, AccessTarget};
use crate::appraisal::{
    generalization_analysis, unit_appraisal, Assignment, AssignmentKind,
};
use crate::dsl::{parse_document, parse_query, SourceDocument};
use crate::engine::Engine;
use crate::event::{Event, EventKind};
use crate::integrate::{
    merge_component, now_timestamp, verify_integrity, HistoryStore, SchemaHistory,
    SemanticPriority,
};
use crate::meta::check_stratification;
use crate::model::{variable_domain, DEFAULT_ENUMERATION_CAP};
use crate::schema::Bundle;

#[derive(Parser)]
#[command(
    name = "triadkit",
    about = "Data-and-metadata object engine over .tdk documents",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Format {
    Text,
    JsonLines,
}

#[derive(Args)]
struct FormatArg {
    /// Output format for result lines.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a document and print a declaration summary.
    Load {
        #[arg(long)]
        schema: String,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Run one query against a document.
    Eval {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        query: String,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Merge a component into a base (or into a history's current version).
    Merge {
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        component: String,
        #[arg(long)]
        history: Option<String>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Integrity and stratification checks; exit 1 when findings exist.
    Verify {
        #[arg(long)]
        schema: String,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Make an earlier version current by appending it as a new version.
    Rollback {
        #[arg(long)]
        history: String,
        #[arg(long)]
        to: u32,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Replay an event log (`KIND EMPLOYEE [UNIT]`, one event per line).
    Replay {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        events: String,
        /// Declared user to run the session as; defaults to an unrestricted
        /// maintenance session.
        #[arg(long)]
        user: Option<String>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Replay a scripted op list and print allow/deny per line.
    #[command(name = "simulate-session")]
    SimulateSession {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        user: String,
        #[arg(long)]
        ops: String,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Analysis reports over a loaded document.
    Report {
        #[command(subcommand)]
        kind: ReportKind,
    },
}

#[derive(Subcommand)]
enum ReportKind {
    /// Stratification violations.
    Stratification {
        #[arg(long)]
        schema: String,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Generalization-level analysis over declared metrics.
    Generalization {
        #[arg(long)]
        schema: String,
        /// Comma-separated metric names.
        #[arg(long)]
        metrics: String,
        /// Assignment step, e.g. `s={development,support}`; repeatable,
        /// applied in order.
        #[arg(long = "assign")]
        assignments: Vec<String>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Weighted unit appraisal over the org subtree population.
    Appraisal {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        unit: String,
        /// Metric with optional weight, e.g. `z` or `z=2.5`; repeatable.
        #[arg(long = "metric")]
        metrics: Vec<String>,
        #[command(flatten)]
        format: FormatArg,
    },
    /// Enumerate the variable domain of a finite sort over an index set.
    Domain {
        #[arg(long)]
        schema: String,
        #[arg(long)]
        sort: String,
        /// Comma-separated individual ids forming the index set.
        #[arg(long)]
        individuals: String,
        #[command(flatten)]
        format: FormatArg,
    },
}

/// Run the CLI against explicit argument and output streams. Returns the
/// process exit code.
pub fn run<I, S, W, E>(args: I, out: &mut W, err: &mut E) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
    W: Write,
    E: Write,
{
    let mut argv: Vec<String> = vec!["triadkit".into()];
    argv.extend(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(parse_err) => {
            let _ = write!(err, "{parse_err}");
            return 2;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(failure) => {
            let _ = writeln!(err, "{failure}");
            1
        }
    }
}

struct Failure(String);

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

macro_rules! failure_from {
    ($($source:ty),+ $(,)?) => {
        $(impl From<$source> for Failure {
            fn from(value: $source) -> Self {
                Failure(value.to_string())
            }
        })+
    };
}

failure_from!(
    crate::engine::EngineError,
    crate::engine::QueryError,
    crate::integrate::MergeError,
    crate::integrate::HistoryError,
    crate::appraisal::AppraisalError,
    crate::model::ModelError,
    crate::event::EventError,
    crate::access::AccessError,
);

fn emit(out: &mut impl Write, format: Format, kind: &str, line: &str) {
    let _ = match format {
        Format::Text => writeln!(out, "{line}"),
        Format::JsonLines => writeln!(
            out,
            "{}",
            serde_json::json!({ "kind": kind, "text": line })
        ),
    };
}

fn load_bundle(path: &str, err: &mut impl Write) -> Result<Option<Bundle>, Failure> {
    let doc = SourceDocument::from_file(path).map_err(|e| Failure(format!("{path}: {e}")))?;
    let outcome = parse_document(&doc);
    for diagnostic in &outcome.diagnostics {
        let _ = writeln!(err, "{}: {diagnostic}", doc.origin);
    }
    Ok(outcome.bundle)
}

fn parse_assignment(text: &str) -> Result<Assignment, Failure> {
    let (kind, rest) = text
        .split_once('=')
        .ok_or_else(|| Failure(format!("bad assignment `{text}`; expected k={{a,b}}")))?;
    let kind = match kind.trim() {
        "s" | "labor_function" => AssignmentKind::LaborFunction,
        "p" | "org_unit" => AssignmentKind::OrgUnit,
        other => return Err(Failure(format!("unknown assignment point `{other}`"))),
    };
    let rest = rest.trim();
    let inner = rest
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| Failure(format!("bad assignment `{text}`; expected k={{a,b}}")))?;
    let values: BTreeSet<String> = inner
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    Ok(Assignment { kind, values })
}

fn execute(command: Command, out: &mut impl Write, err: &mut impl Write) -> Result<i32, Failure> {
    match command {
        Command::Load { schema, format } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let s = &bundle.schema;
            for (label, count) in [
                ("concepts", s.concepts.len()),
                ("events", s.custom_events.len()),
                ("frames", s.frames.len()),
                ("individuals", s.individuals.len()),
                ("metrics", s.metrics.len()),
                ("predicates", s.predicates.len()),
                ("queries", bundle.queries.len()),
                ("relations", s.relations.len()),
                ("scripts", s.scripts.len()),
                ("sorts", s.sorts.len()),
                ("units", s.org.as_ref().map(|o| o.unit_names().len()).unwrap_or(0)),
                ("users", s.users.len()),
            ] {
                emit(out, format.format, "summary", &format!("{label}: {count}"));
            }
            Ok(0)
        }
        Command::Eval {
            schema,
            query,
            format,
        } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let query = parse_query(&query, &bundle.schema).map_err(|diagnostics| {
                Failure(
                    diagnostics
                        .iter()
                        .map(|d| format!("<query>: {d}"))
                        .collect::<Vec<_>>()
                        .join("\n"),
                )
            })?;
            let engine = Engine::load(bundle)?;
            let lines = engine.run_query(&query)?;
            for line in lines {
                emit(out, format.format, "item", &line);
            }
            Ok(0)
        }
        Command::Verify { schema, format } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let report = verify_integrity(&bundle.schema);
            for finding in &report.findings {
                emit(out, format.format, "finding", &finding.to_string());
            }
            Ok(if report.is_clean() { 0 } else { 1 })
        }
        Command::Merge {
            base,
            component,
            history,
            format,
        } => {
            let store = history.as_ref().map(HistoryStore::new);
            let (base_bundle, mut stored_history) = match (&store, &base) {
                (Some(store), _) if store.exists() => {
                    if base.is_some() {
                        return Err(Failure(
                            "history already initialized; drop --base".into(),
                        ));
                    }
                    let history = store.load()?;
                    (history.current_bundle()?, Some(history))
                }
                (Some(_), Some(path)) => {
                    let Some(bundle) = load_bundle(path, err)? else {
                        return Ok(1);
                    };
                    let history = SchemaHistory::init(&bundle, now_timestamp());
                    (bundle, Some(history))
                }
                (None, Some(path)) => {
                    let Some(bundle) = load_bundle(path, err)? else {
                        return Ok(1);
                    };
                    (bundle, None)
                }
                (Some(_), None) | (None, None) => {
                    return Err(Failure(
                        "merge needs --base (or an initialized --history)".into(),
                    ))
                }
            };
            let Some(comp) = load_bundle(&component, err)? else {
                return Ok(1);
            };
            let priority = SemanticPriority::from_schema(&base_bundle.schema);
            let (merged, report) = merge_component(&base_bundle, &comp, &priority)?;
            for entry in &report.entries {
                emit(out, format.format, "conflict", &entry.to_string());
            }
            if report.rejected() {
                emit(out, format.format, "result", "rejected: base unchanged");
                return Ok(1);
            }
            let name = comp
                .schema
                .component
                .as_ref()
                .map(|header| header.name.clone())
                .unwrap_or_else(|| component.clone());
            if let (Some(store), Some(history)) = (&store, stored_history.as_mut()) {
                let version = history.record(&merged, format!("merge {name}"), now_timestamp());
                store.save(history)?;
                emit(out, format.format, "result", &format!("merged: v{version}"));
            } else {
                let _ = write!(out, "{}", crate::dsl::print_canonical(&merged));
            }
            Ok(0)
        }
        Command::Rollback { history, to, format } => {
            let store = HistoryStore::new(&history);
            let mut loaded = store.load()?;
            loaded.rollback(to, now_timestamp())?;
            store.save(&loaded)?;
            emit(
                out,
                format.format,
                "result",
                &format!("current: v{}", loaded.current),
            );
            Ok(0)
        }
        Command::Replay {
            schema,
            events,
            user,
            format,
        } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let mut engine = Engine::load(bundle)?;
            let (session, profile) = match user {
                Some(name) => engine.open_session_for(&name)?,
                None => engine.open_system_session(),
            };
            let text = std::fs::read_to_string(&events)
                .map_err(|e| Failure(format!("{events}: {e}")))?;
            let mut failures = 0;
            for (number, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                let (kind, employee, unit) = match fields.as_slice() {
                    [kind, employee] => (*kind, *employee, None),
                    [kind, employee, unit] => (*kind, *employee, Some(unit.to_string())),
                    _ => {
                        emit(
                            out,
                            format.format,
                            "event",
                            &format!("line {}: malformed event", number + 1),
                        );
                        failures += 1;
                        continue;
                    }
                };
                let event = Event::new(EventKind::parse(kind), employee, unit);
                match engine.dispatch_event(&session, &profile, &event) {
                    Ok(outcome) => emit(
                        out,
                        format.format,
                        "event",
                        &format!("{line}: ok ({} scripts)", outcome.fired.len()),
                    ),
                    Err(event_err) => {
                        failures += 1;
                        emit(out, format.format, "event", &format!("{line}: error {event_err}"));
                    }
                }
            }
            for line in engine.state.personnel.canonical_text().lines() {
                emit(out, format.format, "state", line);
            }
            Ok(if failures == 0 { 0 } else { 1 })
        }
        Command::SimulateSession {
            schema,
            user,
            ops,
            format,
        } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let mut engine = Engine::load(bundle)?;
            let (mut session, profile) = engine.open_session_for(&user)?;
            let text =
                std::fs::read_to_string(&ops).map_err(|e| Failure(format!("{ops}: {e}")))?;
            for line in text.lines() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                if line == "close" {
                    session = match crate::access::close_session(session) {
                        Ok(closed) => {
                            emit(out, format.format, "decision", "close: closed");
                            closed
                        }
                        Err(already) => {
                            return Err(Failure(already.to_string()));
                        }
                    };
                    continue;
                }
                let fields: Vec<&str> = line.split_whitespace().collect();
                let [op, kind, unit] = fields.as_slice() else {
                    emit(out, format.format, "decision", &format!("{line}: malformed op"));
                    continue;
                };
                let op = match *op {
                    "read" => AccessOp::Read,
                    "write" => AccessOp::Write,
                    other => {
                        emit(
                            out,
                            format.format,
                            "decision",
                            &format!("{line}: unknown op `{other}`"),
                        );
                        continue;
                    }
                };
                let target = match *kind {
                    "data" => AccessTarget::data(*unit),
                    "metadata" | "meta" => AccessTarget::metadata(*unit),
                    other => {
                        emit(
                            out,
                            format.format,
                            "decision",
                            &format!("{line}: unknown target kind `{other}`"),
                        );
                        continue;
                    }
                };
                let decision = authorize(&session, &profile, &target, op);
                emit(out, format.format, "decision", &format!("{line}: {decision}"));
            }
            Ok(0)
        }
        Command::Report { kind } => execute_report(kind, out, err),
    }
}

fn execute_report(
    kind: ReportKind,
    out: &mut impl Write,
    err: &mut impl Write,
) -> Result<i32, Failure> {
    match kind {
        ReportKind::Stratification { schema, format } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let report = check_stratification(&bundle.schema);
            for violation in &report.violations {
                emit(out, format.format, "violation", &violation.to_string());
            }
            Ok(if report.is_stratified() { 0 } else { 1 })
        }
        ReportKind::Generalization {
            schema,
            metrics,
            assignments,
            format,
        } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let engine = Engine::load(bundle)?;
            let org = engine.org();
            let mut selected = Vec::new();
            for name in metrics.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                let metric = engine
                    .bundle
                    .schema
                    .metrics
                    .get(name)
                    .ok_or_else(|| Failure(format!("metric `{name}` is not declared")))?;
                selected.push(metric);
            }
            let assignments: Vec<Assignment> = assignments
                .iter()
                .map(|text| parse_assignment(text))
                .collect::<Result<_, _>>()?;
            let report = generalization_analysis(&org, &selected, &assignments)?;
            for line in report.to_string().lines() {
                emit(out, format.format, "report", line);
            }
            Ok(0)
        }
        ReportKind::Appraisal {
            schema,
            unit,
            metrics,
            format,
        } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let engine = Engine::load(bundle)?;
            let org = engine.org();
            let mut weights: BTreeMap<String, f64> = BTreeMap::new();
            for spec in &metrics {
                let (name, weight) = match spec.split_once('=') {
                    Some((name, weight)) => (
                        name.trim().to_string(),
                        weight
                            .trim()
                            .parse::<f64>()
                            .map_err(|_| Failure(format!("bad weight in `{spec}`")))?,
                    ),
                    None => (spec.trim().to_string(), 1.0),
                };
                weights.insert(name, weight);
            }
            if weights.is_empty() {
                for name in engine.bundle.schema.metrics.keys() {
                    weights.insert(name.clone(), 1.0);
                }
            }
            let score = unit_appraisal(
                &org,
                &unit,
                &engine.bundle.schema.metrics,
                &weights,
                &engine.population(),
            )?;
            emit(out, format.format, "score", &format!("{unit}: {score}"));
            Ok(0)
        }
        ReportKind::Domain {
            schema,
            sort,
            individuals,
            format,
        } => {
            let Some(bundle) = load_bundle(&schema, err)? else {
                return Ok(1);
            };
            let declared = bundle
                .schema
                .sorts
                .get(&sort)
                .ok_or_else(|| Failure(format!("sort `{sort}` is not declared")))?;
            let index: BTreeSet<String> = individuals
                .split(',')
                .map(|id| id.trim().to_string())
                .filter(|id| !id.is_empty())
                .collect();
            let cap = std::env::var("TRIADKIT_MAX_ENUM")
                .ok()
                .and_then(|v| v.parse::<usize>().ok())
                .unwrap_or(DEFAULT_ENUMERATION_CAP);
            let domain = variable_domain(declared, &index, cap)?;
            emit(
                out,
                format.format,
                "cardinality",
                &format!("members: {}", domain.members.len()),
            );
            for member in &domain.members {
                let text = member
                    .iter()
                    .map(|(id, value)| format!("{id}={value}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                emit(out, format.format, "member", &text);
            }
            Ok(0)
        }
    }
}
