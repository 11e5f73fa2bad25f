//! Formula syntax shared by the evaluator, the metadata levels and the DSL.
//!
//! A formula has exactly one bound variable, fixed by the enclosing
//! comprehension `{ x : Domain | body }`. Atoms are comparisons, set
//! membership, dyadic frame atoms, unary predicate applications and a small
//! builtin vocabulary for speaking about schema structure.

use std::collections::BTreeSet;
use std::fmt;

use crate::value::{quote_text, Value};

/// A term inside a formula: the bound variable, one of its attributes, or a
/// constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    /// The comprehension variable, by name.
    Var(String),
    /// Attribute projection `x.attr` of the bound variable.
    Attr(String, String),
    /// A literal or symbol constant.
    Const(Value),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(name) => f.write_str(name),
            Term::Attr(var, attr) => write!(f, "{var}.{attr}"),
            Term::Const(value) => write!(f, "{value}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Formula {
    /// `true` / `false`.
    Truth(bool),
    /// Comparison between two terms.
    Compare { lhs: Term, op: CmpOp, rhs: Term },
    /// Finite-set membership `term in {v1, v2}`.
    Member { lhs: Term, set: BTreeSet<Value> },
    /// Applied predicate: a declared dyadic relation (frame atom), a
    /// declared meta-predicate (one argument), or a builtin.
    Atom { pred: String, args: Vec<Term> },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn negate(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    /// Every symbol name the formula mentions, for reference-level checks:
    /// atom predicates, symbol constants and attribute names are included.
    pub fn referenced_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_symbols(&mut out);
        out
    }

    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        fn term(t: &Term, out: &mut BTreeSet<String>) {
            if let Term::Const(Value::Symbol(name)) = t {
                out.insert(name.clone());
            }
        }
        match self {
            Formula::Truth(_) => {}
            Formula::Compare { lhs, rhs, .. } => {
                term(lhs, out);
                term(rhs, out);
            }
            Formula::Member { lhs, set } => {
                term(lhs, out);
                for v in set {
                    if let Value::Symbol(name) = v {
                        out.insert(name.clone());
                    }
                }
            }
            Formula::Atom { pred, args } => {
                out.insert(pred.clone());
                for a in args {
                    term(a, out);
                }
            }
            Formula::Not(inner) => inner.collect_symbols(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_symbols(out);
                b.collect_symbols(out);
            }
        }
    }
}

// Precedence: `or` < `and` < `not` < atoms. Printing inserts parentheses
// only where re-parsing would otherwise bind differently.
impl Formula {
    fn precedence(&self) -> u8 {
        match self {
            Formula::Or(..) => 0,
            Formula::And(..) => 1,
            Formula::Not(..) => 2,
            _ => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min;
        if parens {
            f.write_str("(")?;
        }
        match self {
            Formula::Truth(true) => f.write_str("true")?,
            Formula::Truth(false) => f.write_str("false")?,
            Formula::Compare { lhs, op, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol())?,
            Formula::Member { lhs, set } => {
                write!(f, "{lhs} in {{")?;
                for (i, v) in set.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")?;
            }
            Formula::Atom { pred, args } => {
                write!(f, "{pred}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")?;
            }
            Formula::Not(inner) => {
                f.write_str("not ")?;
                inner.fmt_prec(f, 2)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" and ")?;
                b.fmt_prec(f, 2)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, 0)?;
                f.write_str(" or ")?;
                b.fmt_prec(f, 1)?;
            }
        }
        if parens {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// What the bound variable of a comprehension ranges over.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum DomainRef {
    /// Values of a finite sort carrier.
    Sort(String),
    /// Current individuals of a concept.
    Concept(String),
    /// The level-0 concepts themselves.
    AllConcepts,
    /// Members of a declared meta-predicate's extension.
    Predicate(String),
    /// All meta-predicates declared at the given level (>= 1).
    Level(u32),
    /// An explicit value set, for direct evaluator use.
    Values(BTreeSet<Value>),
}

impl fmt::Display for DomainRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainRef::Sort(name)
            | DomainRef::Concept(name)
            | DomainRef::Predicate(name) => f.write_str(name),
            DomainRef::AllConcepts => f.write_str("concepts"),
            DomainRef::Level(n) => write!(f, "level {n}"),
            DomainRef::Values(values) => {
                f.write_str("{")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

/// `{ var : domain | body }` — the compression construct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Comprehension {
    pub var: String,
    pub domain: DomainRef,
    pub body: Formula,
}

impl fmt::Display for Comprehension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{ {} : {} | {} }}", self.var, self.domain, self.body)
    }
}

/// Convenience constructors used across tests and examples.
impl Comprehension {
    pub fn new(var: impl Into<String>, domain: DomainRef, body: Formula) -> Self {
        Comprehension {
            var: var.into(),
            domain,
            body,
        }
    }
}

#[allow(dead_code)]
fn _quote(s: &str) -> String {
    quote_text(s)
}
