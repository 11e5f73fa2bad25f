//! The `.tdk` text language: the engine's only ingestion path.
//!
//! One keyword per construct: `sort`, `concept`, `relation NAME/2`,
//! `individual`, `frame`, `level N predicate`, `metric`, `org`, `priority`,
//! `user`, `event`, `script`, `component` and `eval`. Statements terminate
//! with `;`. Line comments start with `#`. The comprehension literal is
//! `{ x : Domain | Formula }` and application chains look like
//! `F(s={development, support})(p={IT})`.
//!
//! Parsing is recursive descent with single-token lookahead; error recovery
//! skips to the next `;`, so one run can report several diagnostics. A
//! document either yields a complete bundle or at least one error diagnostic
//! with a position — never a partial bundle.
//!
//! `print_canonical` emits the sorted, LF-terminated canonical form used for
//! persistence, history versions and round-trip testing. Scripts and queries
//! keep their source order: script registration order is dispatch order.

mod lexer;
mod parser;
mod printer;

use std::fmt;

pub use parser::{parse_document, parse_query};
pub use printer::print_canonical;

/// A document to parse: its text and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceDocument {
    pub text: String,
    pub origin: String,
}

impl SourceDocument {
    pub fn inline(text: impl Into<String>) -> Self {
        SourceDocument {
            text: text.into(),
            origin: "<inline>".into(),
        }
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> std::io::Result<Self> {
        let path = path.as_ref();
        Ok(SourceDocument {
            text: std::fs::read_to_string(path)?,
            origin: path.display().to_string(),
        })
    }
}

/// 1-based position inside a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => f.write_str("error"),
            Severity::Warning => f.write_str("warning"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub line: u32,
    pub column: u32,
    pub severity: Severity,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}: {}: {}",
            self.line, self.column, self.severity, self.message
        )
    }
}

pub(crate) fn diag_error(pos: Pos, message: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic {
        line: pos.line,
        column: pos.column,
        severity: Severity::Error,
        message: message.into(),
    }
}

pub(crate) fn diag_warning(pos: Pos, message: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic {
        line: pos.line,
        column: pos.column,
        severity: Severity::Warning,
        message: message.into(),
    }
}

/// Outcome of parsing one document. The bundle is present exactly when no
/// error-severity diagnostic was produced; warnings may accompany a bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome {
    pub bundle: Option<crate::schema::Bundle>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl ParseOutcome {
    pub fn into_result(self) -> Result<crate::schema::Bundle, Vec<ParseDiagnostic>> {
        match self.bundle {
            Some(bundle) => Ok(bundle),
            None => Err(self.diagnostics),
        }
    }
}
