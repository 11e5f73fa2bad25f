//! Recursive-descent parser and reference resolver for `.tdk` documents.
//!
//! Parsing happens in two passes: statements are read with single-token
//! lookahead (recovering to the next `;` on error), then the whole statement
//! list is resolved at once so declarations may appear in any order. A
//! document belonging to a component (`component N requires A, B;`) may
//! reference the listed names as concepts it expects from the merge base.

use std::collections::{BTreeMap, BTreeSet};

use crate::access::{Grants, UserDecl};
use crate::appraisal::{AssignmentKind, ComponentKey, Metric, OrgStructure, OrgUnit};
use crate::event::{ArgRef, EventKind, ScriptAction, ScriptBinding, UnitRef};
use crate::formula::{CmpOp, Comprehension, DomainRef, Formula, Term};
use crate::meta::{MetaPredicate, DEFAULT_MAX_LEVEL};
use crate::model::{Carrier, Concept, Individual, Sort};
use crate::schema::{Bundle, ComponentHeader, Query, Schema};
use crate::semnet::Frame;
use crate::value::{Decimal, ScalarKind, Value};

use super::lexer::{lex, Spanned, Token};
use super::{diag_error, diag_warning, ParseDiagnostic, ParseOutcome, Pos, SourceDocument};

/// Words with fixed structural meaning inside formulas and values.
const RESERVED: &[&str] = &["and", "or", "not", "true", "false", "in"];

const BUILTIN_ATOMS: &[(&str, usize)] = &[
    ("has_attr", 2),
    ("has_attr_sort", 2),
    ("nonempty", 1),
    ("mentions", 2),
];

#[derive(Debug, Clone, PartialEq)]
enum RawDomain {
    Named(String),
    AllConcepts,
    Level(u32),
}

#[derive(Debug, Clone, PartialEq)]
struct RawComprehension {
    var: String,
    domain: RawDomain,
    body: Formula,
}

#[derive(Debug, Clone, PartialEq)]
enum RawQuery {
    Extension(String),
    Comprehend(RawComprehension),
    Individuate(RawComprehension),
    Apply {
        head: String,
        assignments: Vec<(AssignmentKind, BTreeSet<String>)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum RawStatement {
    Sort(Sort),
    Concept(Concept),
    Relation { name: String, arity: i64 },
    Individual(Individual),
    Frame(Frame),
    Predicate {
        level: i64,
        name: String,
        comp: RawComprehension,
    },
    Metric(Metric),
    Org(OrgStructure),
    Priority { unit: String, rank: u32 },
    User(UserDecl),
    Event(String),
    Script(ScriptBinding),
    Component(ComponentHeader),
    Eval(RawQuery),
}

struct Parser {
    tokens: Vec<Spanned>,
    index: usize,
    diagnostics: Vec<ParseDiagnostic>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.index].token
    }

    fn peek_pos(&self) -> Pos {
        self.tokens[self.index].pos
    }

    fn peek_is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Token::Ident(w) if w == word)
    }

    fn next(&mut self) -> Spanned {
        let spanned = self.tokens[self.index].clone();
        if self.index + 1 < self.tokens.len() {
            self.index += 1;
        }
        spanned
    }

    fn eat_ident(&mut self, word: &str) -> bool {
        if self.peek_is_ident(word) {
            self.next();
            true
        } else {
            false
        }
    }

    fn error_here(&mut self, message: impl Into<String>) {
        let pos = self.peek_pos();
        self.diagnostics.push(diag_error(pos, message));
    }

    fn expect(&mut self, token: Token) -> Option<Pos> {
        if *self.peek() == token {
            Some(self.next().pos)
        } else {
            let found = self.peek().describe();
            self.error_here(format!("expected {}, found {}", token.describe(), found));
            None
        }
    }

    fn expect_keyword(&mut self, word: &str) -> Option<Pos> {
        if self.peek_is_ident(word) {
            Some(self.next().pos)
        } else {
            let found = self.peek().describe();
            self.error_here(format!("expected `{word}`, found {found}"));
            None
        }
    }

    /// An identifier used as a name; reserved words are refused.
    fn expect_name(&mut self, what: &str) -> Option<String> {
        match self.peek().clone() {
            Token::Ident(word) if !RESERVED.contains(&word.as_str()) => {
                self.next();
                Some(word)
            }
            Token::Ident(word) => {
                self.error_here(format!("`{word}` is a reserved word and cannot name a {what}"));
                None
            }
            other => {
                self.error_here(format!("expected {what} name, found {}", other.describe()));
                None
            }
        }
    }

    fn expect_integer(&mut self) -> Option<i64> {
        match self.peek().clone() {
            Token::Integer(n) => {
                self.next();
                Some(n)
            }
            other => {
                self.error_here(format!("expected an integer, found {}", other.describe()));
                None
            }
        }
    }

    /// Skip forward to just past the next `;` (or stop at EOF), then absorb
    /// the closers of whatever block the aborted statement left open.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Token::Semi => {
                    self.next();
                    break;
                }
                Token::Eof => return,
                _ => {
                    self.next();
                }
            }
        }
        while matches!(self.peek(), Token::RBrace | Token::Semi) {
            self.next();
        }
    }

    fn finish_statement(&mut self) -> bool {
        if *self.peek() == Token::Semi {
            self.next();
            true
        } else {
            let found = self.peek().describe();
            self.error_here(format!("expected `;` to end the statement, found {found}"));
            self.recover();
            false
        }
    }

    fn parse_value(&mut self) -> Option<Value> {
        match self.peek().clone() {
            Token::Minus => {
                self.next();
                match self.peek().clone() {
                    Token::Integer(n) => {
                        self.next();
                        Some(Value::Integer(-n))
                    }
                    Token::DecimalLit(d) => {
                        self.next();
                        Some(Value::Decimal(Decimal::new(-d.mantissa(), d.scale())))
                    }
                    other => {
                        self.error_here(format!(
                            "expected a number after `-`, found {}",
                            other.describe()
                        ));
                        None
                    }
                }
            }
            Token::Integer(n) => {
                self.next();
                Some(Value::Integer(n))
            }
            Token::DecimalLit(d) => {
                self.next();
                Some(Value::Decimal(d))
            }
            Token::DateLit(d) => {
                self.next();
                Some(Value::Date(d))
            }
            Token::TextLit(t) => {
                self.next();
                Some(Value::Text(t))
            }
            Token::Ident(word) if !RESERVED.contains(&word.as_str()) => {
                self.next();
                Some(Value::Symbol(word))
            }
            other => {
                self.error_here(format!("expected a value, found {}", other.describe()));
                None
            }
        }
    }

    fn parse_number(&mut self) -> Option<Decimal> {
        match self.parse_value()? {
            Value::Integer(n) => Some(Decimal::from_int(n)),
            Value::Decimal(d) => Some(d),
            other => {
                self.error_here(format!("expected a number, found `{other}`"));
                None
            }
        }
    }

    fn parse_symbol_set(&mut self) -> Option<BTreeSet<String>> {
        self.expect(Token::LBrace)?;
        let mut out = BTreeSet::new();
        if *self.peek() != Token::RBrace {
            loop {
                out.insert(self.expect_name("member")?);
                if *self.peek() == Token::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Token::RBrace)?;
        Some(out)
    }

    fn parse_value_set(&mut self) -> Option<BTreeSet<Value>> {
        self.expect(Token::LBrace)?;
        let mut out = BTreeSet::new();
        if *self.peek() != Token::RBrace {
            loop {
                out.insert(self.parse_value()?);
                if *self.peek() == Token::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Token::RBrace)?;
        Some(out)
    }

    // ---- formulas ------------------------------------------------------

    fn parse_comprehension(&mut self) -> Option<RawComprehension> {
        self.expect(Token::LBrace)?;
        let var = self.expect_name("variable")?;
        self.expect(Token::Colon)?;
        let domain = if self.eat_ident("concepts") {
            RawDomain::AllConcepts
        } else if self.eat_ident("level") {
            let level = self.expect_integer()?;
            if level < 0 {
                self.error_here("levels are non-negative");
                return None;
            }
            RawDomain::Level(level as u32)
        } else {
            RawDomain::Named(self.expect_name("domain")?)
        };
        self.expect(Token::Pipe)?;
        let body = self.parse_formula(&var)?;
        self.expect(Token::RBrace)?;
        Some(RawComprehension { var, domain, body })
    }

    fn parse_formula(&mut self, var: &str) -> Option<Formula> {
        let mut left = self.parse_and(var)?;
        while self.eat_ident("or") {
            let right = self.parse_and(var)?;
            left = left.or(right);
        }
        Some(left)
    }

    fn parse_and(&mut self, var: &str) -> Option<Formula> {
        let mut left = self.parse_not(var)?;
        while self.eat_ident("and") {
            let right = self.parse_not(var)?;
            left = left.and(right);
        }
        Some(left)
    }

    fn parse_not(&mut self, var: &str) -> Option<Formula> {
        if self.eat_ident("not") {
            Some(self.parse_not(var)?.negate())
        } else {
            self.parse_primary(var)
        }
    }

    fn parse_primary(&mut self, var: &str) -> Option<Formula> {
        if self.eat_ident("true") {
            return Some(Formula::Truth(true));
        }
        if self.eat_ident("false") {
            return Some(Formula::Truth(false));
        }
        if *self.peek() == Token::LParen {
            self.next();
            let inner = self.parse_formula(var)?;
            self.expect(Token::RParen)?;
            return Some(inner);
        }
        // Atom: identifier directly followed by `(`.
        if let Token::Ident(word) = self.peek().clone() {
            if !RESERVED.contains(&word.as_str())
                && self.tokens.get(self.index + 1).map(|s| &s.token) == Some(&Token::LParen)
            {
                self.next(); // name
                self.next(); // (
                let mut args = Vec::new();
                if *self.peek() != Token::RParen {
                    loop {
                        args.push(self.parse_term(var)?);
                        if *self.peek() == Token::Comma {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Token::RParen)?;
                return Some(Formula::Atom { pred: word, args });
            }
        }
        let lhs = self.parse_term(var)?;
        match self.peek().clone() {
            Token::Eq => {
                self.next();
                let rhs = self.parse_term(var)?;
                Some(Formula::Compare { lhs, op: CmpOp::Eq, rhs })
            }
            Token::Ne => {
                self.next();
                let rhs = self.parse_term(var)?;
                Some(Formula::Compare { lhs, op: CmpOp::Ne, rhs })
            }
            Token::Lt => {
                self.next();
                let rhs = self.parse_term(var)?;
                Some(Formula::Compare { lhs, op: CmpOp::Lt, rhs })
            }
            Token::Gt => {
                self.next();
                let rhs = self.parse_term(var)?;
                Some(Formula::Compare { lhs, op: CmpOp::Gt, rhs })
            }
            Token::Ident(word) if word == "in" => {
                self.next();
                let set = self.parse_value_set()?;
                Some(Formula::Member { lhs, set })
            }
            other => {
                self.error_here(format!(
                    "expected a comparison or `in` after the term, found {}",
                    other.describe()
                ));
                None
            }
        }
    }

    fn parse_term(&mut self, var: &str) -> Option<Term> {
        if let Token::Ident(word) = self.peek().clone() {
            if !RESERVED.contains(&word.as_str()) {
                self.next();
                if *self.peek() == Token::Dot {
                    self.next();
                    let attr = self.expect_name("attribute")?;
                    if word != var {
                        self.error_here(format!(
                            "attribute access is only defined on the bound variable `{var}`"
                        ));
                        return None;
                    }
                    return Some(Term::Attr(word, attr));
                }
                if word == var {
                    return Some(Term::Var(word));
                }
                return Some(Term::Const(Value::Symbol(word)));
            }
        }
        Some(Term::Const(self.parse_value()?))
    }

    // ---- statements ----------------------------------------------------

    fn parse_statement(&mut self) -> Option<(Pos, RawStatement)> {
        let pos = self.peek_pos();
        let word = match self.peek().clone() {
            Token::Ident(word) => word,
            Token::Eof => return None,
            other => {
                self.error_here(format!("expected a statement, found {}", other.describe()));
                self.recover();
                return None;
            }
        };
        let statement = match word.as_str() {
            "sort" => self.parse_sort(),
            "concept" => self.parse_concept(),
            "relation" => self.parse_relation(),
            "individual" => self.parse_individual(),
            "frame" => self.parse_frame(),
            "level" => self.parse_predicate(),
            "metric" => self.parse_metric(),
            "org" => self.parse_org(),
            "priority" => self.parse_priority(),
            "user" => self.parse_user(),
            "event" => self.parse_event(),
            "script" => self.parse_script(),
            "component" => self.parse_component(),
            "eval" => self.parse_eval(),
            other => {
                self.error_here(format!("unknown statement keyword `{other}`"));
                self.recover();
                return None;
            }
        };
        match statement {
            Some(statement) => {
                if self.finish_statement() {
                    Some((pos, statement))
                } else {
                    None
                }
            }
            None => {
                self.recover();
                None
            }
        }
    }

    fn parse_sort(&mut self) -> Option<RawStatement> {
        self.expect_keyword("sort")?;
        let name = self.expect_name("sort")?;
        self.expect(Token::Eq)?;
        let carrier = match self.peek().clone() {
            Token::Ident(kind) if kind == "text" => {
                self.next();
                Carrier::Scalar(ScalarKind::Text)
            }
            Token::Ident(kind) if kind == "integer" => {
                self.next();
                Carrier::Scalar(ScalarKind::Integer)
            }
            Token::Ident(kind) if kind == "decimal" => {
                self.next();
                Carrier::Scalar(ScalarKind::Decimal)
            }
            Token::Ident(kind) if kind == "date" => {
                self.next();
                Carrier::Scalar(ScalarKind::Date)
            }
            Token::LBrace => {
                let members = self.parse_value_set()?;
                if members.is_empty() {
                    self.error_here("finite carriers must be non-empty");
                    return None;
                }
                Carrier::Finite(members)
            }
            other => {
                self.error_here(format!(
                    "expected a scalar kind or a finite carrier, found {}",
                    other.describe()
                ));
                return None;
            }
        };
        Some(RawStatement::Sort(Sort { name, carrier }))
    }

    fn parse_concept(&mut self) -> Option<RawStatement> {
        self.expect_keyword("concept")?;
        let name = self.expect_name("concept")?;
        let mut governed_by = None;
        let mut level = 0;
        if self.eat_ident("in") {
            governed_by = Some(self.expect_name("unit")?);
        }
        if self.eat_ident("level") {
            let n = self.expect_integer()?;
            if n < 0 {
                self.error_here("levels are non-negative");
                return None;
            }
            level = n as u32;
        }
        self.expect(Token::LBrace)?;
        let mut attributes = Vec::new();
        let mut seen = BTreeSet::new();
        while *self.peek() != Token::RBrace {
            let attr = self.expect_name("attribute")?;
            self.expect(Token::Colon)?;
            let sort = self.expect_name("sort")?;
            self.expect(Token::Semi)?;
            if !seen.insert(attr.clone()) {
                self.error_here(format!("attribute `{attr}` declared twice"));
                return None;
            }
            attributes.push((attr, sort));
        }
        self.expect(Token::RBrace)?;
        Some(RawStatement::Concept(Concept {
            name,
            attributes,
            level,
            governed_by,
        }))
    }

    fn parse_relation(&mut self) -> Option<RawStatement> {
        self.expect_keyword("relation")?;
        let name = self.expect_name("relation")?;
        self.expect(Token::Slash)?;
        let arity = self.expect_integer()?;
        Some(RawStatement::Relation { name, arity })
    }

    fn parse_individual(&mut self) -> Option<RawStatement> {
        self.expect_keyword("individual")?;
        let id = self.expect_name("individual")?;
        self.expect(Token::Colon)?;
        let concept = self.expect_name("concept")?;
        self.expect(Token::LBrace)?;
        let mut identifying = BTreeMap::new();
        if *self.peek() != Token::RBrace {
            loop {
                let attr = self.expect_name("attribute")?;
                self.expect(Token::Eq)?;
                let value = self.parse_value()?;
                if identifying.insert(attr.clone(), value).is_some() {
                    self.error_here(format!("attribute `{attr}` assigned twice"));
                    return None;
                }
                if *self.peek() == Token::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        self.expect(Token::RBrace)?;
        Some(RawStatement::Individual(Individual {
            id,
            concept,
            identifying,
        }))
    }

    fn parse_frame(&mut self) -> Option<RawStatement> {
        self.expect_keyword("frame")?;
        let relation = self.expect_name("relation")?;
        self.expect(Token::LParen)?;
        let subject = self.parse_value()?;
        self.expect(Token::Comma)?;
        let object = self.parse_value()?;
        self.expect(Token::RParen)?;
        Some(RawStatement::Frame(Frame {
            relation,
            subject,
            object,
        }))
    }

    fn parse_predicate(&mut self) -> Option<RawStatement> {
        self.expect_keyword("level")?;
        let level = self.expect_integer()?;
        self.expect_keyword("predicate")?;
        let name = self.expect_name("predicate")?;
        self.expect(Token::Eq)?;
        let comp = self.parse_comprehension()?;
        Some(RawStatement::Predicate { level, name, comp })
    }

    fn parse_metric(&mut self) -> Option<RawStatement> {
        self.expect_keyword("metric")?;
        let name = self.expect_name("metric")?;
        let mut metric = Metric::new(name, []);
        if *self.peek() == Token::Eq {
            self.next();
            metric.base = Some(self.parse_number()?);
        }
        if self.eat_ident("depends") {
            self.expect_keyword("on")?;
            loop {
                let kind = self.expect_name("assignment kind")?;
                match kind.as_str() {
                    "labor_function" => {
                        metric.depends.insert(AssignmentKind::LaborFunction);
                    }
                    "org_unit" => {
                        metric.depends.insert(AssignmentKind::OrgUnit);
                    }
                    other => {
                        self.error_here(format!(
                            "unknown assignment kind `{other}`; expected `labor_function` or `org_unit`"
                        ));
                        return None;
                    }
                }
                if *self.peek() == Token::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        if self.eat_ident("components") {
            self.expect(Token::LBrace)?;
            while *self.peek() != Token::RBrace {
                let key = if *self.peek() == Token::LParen {
                    self.next();
                    let lf = self.expect_name("labor function")?;
                    self.expect(Token::Comma)?;
                    let unit = self.expect_name("unit")?;
                    self.expect(Token::RParen)?;
                    if metric.depends.len() != 2 {
                        self.error_here(
                            "pair components need a metric depending on both labor_function and org_unit",
                        );
                        return None;
                    }
                    ComponentKey::full(lf, unit)
                } else {
                    let label = self.expect_name("component label")?;
                    match metric.depends.iter().collect::<Vec<_>>().as_slice() {
                        [AssignmentKind::LaborFunction] => ComponentKey::for_labor_function(label),
                        [AssignmentKind::OrgUnit] => ComponentKey {
                            labor_function: None,
                            unit: Some(label),
                        },
                        _ => {
                            self.error_here(
                                "single-label components need a metric depending on exactly one kind",
                            );
                            return None;
                        }
                    }
                };
                self.expect(Token::Eq)?;
                let value = self.parse_number()?;
                self.expect(Token::Semi)?;
                metric.components.insert(key, value);
            }
            self.expect(Token::RBrace)?;
        }
        Some(RawStatement::Metric(metric))
    }

    fn parse_unit(&mut self) -> Option<OrgUnit> {
        self.expect_keyword("unit")?;
        let name = self.expect_name("unit")?;
        let mut unit = OrgUnit::new(name);
        if self.eat_ident("vacancies") {
            unit.vacancies = self.expect_integer()?.max(0) as u32;
        }
        if self.eat_ident("enrolled") {
            unit.enrolled = self.expect_integer()?.max(0) as u32;
        }
        if *self.peek() == Token::LBrace {
            self.next();
            while *self.peek() != Token::RBrace {
                unit.children.push(self.parse_unit()?);
            }
            self.expect(Token::RBrace)?;
            unit.children.sort_by(|a, b| a.name.cmp(&b.name));
        }
        self.expect(Token::Semi)?;
        Some(unit)
    }

    fn parse_org(&mut self) -> Option<RawStatement> {
        self.expect_keyword("org")?;
        let name = self.expect_name("org")?;
        let mut root = OrgUnit::new(name);
        if self.eat_ident("vacancies") {
            root.vacancies = self.expect_integer()?.max(0) as u32;
        }
        if self.eat_ident("enrolled") {
            root.enrolled = self.expect_integer()?.max(0) as u32;
        }
        let mut functions = BTreeSet::new();
        self.expect(Token::LBrace)?;
        while *self.peek() != Token::RBrace {
            if self.eat_ident("functions") {
                functions = self.parse_symbol_set()?;
                self.expect(Token::Semi)?;
            } else if self.peek_is_ident("unit") {
                root.children.push(self.parse_unit()?);
            } else {
                let found = self.peek().describe();
                self.error_here(format!(
                    "expected `functions` or `unit` inside the org block, found {found}"
                ));
                return None;
            }
        }
        self.expect(Token::RBrace)?;
        root.children.sort_by(|a, b| a.name.cmp(&b.name));
        Some(RawStatement::Org(OrgStructure { root, functions }))
    }

    fn parse_priority(&mut self) -> Option<RawStatement> {
        self.expect_keyword("priority")?;
        let unit = self.expect_name("unit")?;
        self.expect_keyword("rank")?;
        let rank = self.expect_integer()?;
        if rank < 0 {
            self.error_here("ranks are non-negative");
            return None;
        }
        Some(RawStatement::Priority {
            unit,
            rank: rank as u32,
        })
    }

    fn parse_user(&mut self) -> Option<RawStatement> {
        self.expect_keyword("user")?;
        let name = self.expect_name("user")?;
        self.expect_keyword("at")?;
        let unit = self.expect_name("unit")?;
        self.expect_keyword("role")?;
        let role = self.expect_name("role")?;
        let mut decl = UserDecl {
            name,
            unit,
            role,
            admin: false,
            grants: Grants::default(),
        };
        loop {
            if self.eat_ident("admin") {
                decl.admin = true;
            } else if self.eat_ident("grant") {
                if self.eat_ident("read") {
                    decl.grants.read_units.extend(self.parse_symbol_set()?);
                } else if self.eat_ident("write") {
                    decl.grants.write_units.extend(self.parse_symbol_set()?);
                } else {
                    self.error_here("expected `read` or `write` after `grant`");
                    return None;
                }
            } else if self.eat_ident("require") {
                let concept = self.expect_name("concept")?;
                let attrs = self.parse_symbol_set()?;
                decl.grants
                    .required_attributes
                    .entry(concept)
                    .or_default()
                    .extend(attrs);
            } else {
                break;
            }
        }
        Some(RawStatement::User(decl))
    }

    fn parse_event(&mut self) -> Option<RawStatement> {
        self.expect_keyword("event")?;
        let name = self.expect_name("event")?;
        if matches!(
            name.as_str(),
            "enroll" | "transfer" | "dismiss" | "re_enroll"
        ) {
            self.error_here(format!("`{name}` is a builtin event"));
            return None;
        }
        Some(RawStatement::Event(name))
    }

    fn parse_script(&mut self) -> Option<RawStatement> {
        self.expect_keyword("script")?;
        self.expect_keyword("on")?;
        let event = EventKind::parse(&self.expect_name("event")?);
        let mut concept = None;
        let mut unit = None;
        if self.eat_ident("concept") {
            concept = Some(self.expect_name("concept")?);
        }
        if self.eat_ident("unit") {
            unit = Some(self.expect_name("unit")?);
        }
        self.expect(Token::LBrace)?;
        let mut actions = Vec::new();
        while *self.peek() != Token::RBrace {
            actions.push(self.parse_action()?);
            self.expect(Token::Semi)?;
        }
        self.expect(Token::RBrace)?;
        if actions.is_empty() {
            self.error_here("script bodies must hold at least one action");
            return None;
        }
        Some(RawStatement::Script(ScriptBinding {
            event,
            concept,
            unit,
            actions,
        }))
    }

    fn parse_action(&mut self) -> Option<ScriptAction> {
        if self.eat_ident("vacancy") {
            let unit = self.parse_unit_ref()?;
            let delta = self.parse_delta()?;
            return Some(ScriptAction::AdjustVacancy { unit, delta });
        }
        if self.eat_ident("counter") {
            let counter = self.expect_name("counter")?;
            let delta = self.parse_delta()?;
            return Some(ScriptAction::AdjustCounter { counter, delta });
        }
        if self.eat_ident("frame") {
            let relation = self.expect_name("relation")?;
            self.expect(Token::LParen)?;
            let subject = self.parse_arg_ref()?;
            self.expect(Token::Comma)?;
            let object = self.parse_arg_ref()?;
            self.expect(Token::RParen)?;
            return Some(ScriptAction::AddFrame {
                relation,
                subject,
                object,
            });
        }
        if self.eat_ident("transition") {
            let label = match self.peek().clone() {
                Token::TextLit(label) => {
                    self.next();
                    label
                }
                other => {
                    self.error_here(format!(
                        "expected a text label after `transition`, found {}",
                        other.describe()
                    ));
                    return None;
                }
            };
            let mut updates = BTreeMap::new();
            if self.eat_ident("set") {
                self.expect(Token::LBrace)?;
                if *self.peek() != Token::RBrace {
                    loop {
                        let attr = self.expect_name("attribute")?;
                        self.expect(Token::Eq)?;
                        let value = self.parse_value()?;
                        updates.insert(attr, value);
                        if *self.peek() == Token::Comma {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Token::RBrace)?;
            }
            return Some(ScriptAction::Transition { label, updates });
        }
        if self.eat_ident("fail") {
            return Some(ScriptAction::Fail);
        }
        let found = self.peek().describe();
        self.error_here(format!(
            "expected `vacancy`, `counter`, `frame`, `transition` or `fail`, found {found}"
        ));
        None
    }

    fn parse_unit_ref(&mut self) -> Option<UnitRef> {
        if self.eat_ident("source") {
            Some(UnitRef::Source)
        } else if self.eat_ident("target") {
            Some(UnitRef::Target)
        } else {
            Some(UnitRef::Named(self.expect_name("unit")?))
        }
    }

    fn parse_arg_ref(&mut self) -> Option<ArgRef> {
        if self.eat_ident("subject") {
            Some(ArgRef::Subject)
        } else if self.eat_ident("source") {
            Some(ArgRef::Source)
        } else if self.eat_ident("target") {
            Some(ArgRef::Target)
        } else {
            Some(ArgRef::Const(self.parse_value()?))
        }
    }

    fn parse_delta(&mut self) -> Option<i64> {
        let negative = match self.peek() {
            Token::PlusEq => false,
            Token::MinusEq => true,
            other => {
                let found = other.describe();
                self.error_here(format!("expected `+=` or `-=`, found {found}"));
                return None;
            }
        };
        self.next();
        let amount = self.expect_integer()?;
        Some(if negative { -amount } else { amount })
    }

    fn parse_component(&mut self) -> Option<RawStatement> {
        self.expect_keyword("component")?;
        let name = self.expect_name("component")?;
        let mut requires = BTreeSet::new();
        if self.eat_ident("requires") {
            loop {
                requires.insert(self.expect_name("concept")?);
                if *self.peek() == Token::Comma {
                    self.next();
                } else {
                    break;
                }
            }
        }
        Some(RawStatement::Component(ComponentHeader { name, requires }))
    }

    fn parse_eval(&mut self) -> Option<RawStatement> {
        self.expect_keyword("eval")?;
        if self.eat_ident("unique") {
            let comp = self.parse_comprehension()?;
            return Some(RawStatement::Eval(RawQuery::Individuate(comp)));
        }
        if *self.peek() == Token::LBrace {
            let comp = self.parse_comprehension()?;
            return Some(RawStatement::Eval(RawQuery::Comprehend(comp)));
        }
        let head = self.expect_name("query head")?;
        if *self.peek() != Token::LParen {
            return Some(RawStatement::Eval(RawQuery::Extension(head)));
        }
        let mut assignments = Vec::new();
        while *self.peek() == Token::LParen {
            self.next();
            let kind = match self.expect_name("assignment point")?.as_str() {
                "s" => AssignmentKind::LaborFunction,
                "p" => AssignmentKind::OrgUnit,
                other => {
                    self.error_here(format!(
                        "unknown assignment point `{other}`; expected `s` or `p`"
                    ));
                    return None;
                }
            };
            self.expect(Token::Eq)?;
            let values = self.parse_symbol_set()?;
            self.expect(Token::RParen)?;
            assignments.push((kind, values));
        }
        Some(RawStatement::Eval(RawQuery::Apply { head, assignments }))
    }
}

/// Parse one document into a bundle, or diagnostics. Multiple errors are
/// reported per run; no partial bundle is ever returned.
pub fn parse_document(doc: &SourceDocument) -> ParseOutcome {
    let (tokens, lex_diagnostics) = lex(&doc.text);
    let mut parser = Parser {
        tokens,
        index: 0,
        diagnostics: lex_diagnostics,
    };
    let mut statements = Vec::new();
    while *parser.peek() != Token::Eof {
        if let Some(entry) = parser.parse_statement() {
            statements.push(entry);
        }
    }
    let mut diagnostics = parser.diagnostics;
    let bundle = resolve(statements, &mut diagnostics);
    let has_errors = diagnostics.iter().any(ParseDiagnostic::is_error);
    ParseOutcome {
        bundle: if has_errors { None } else { Some(bundle) },
        diagnostics,
    }
}

/// Parse a standalone query expression (the CLI's `--query` argument),
/// resolving names against an already-loaded schema.
pub fn parse_query(text: &str, schema: &Schema) -> Result<Query, Vec<ParseDiagnostic>> {
    let wrapped = format!("eval {};", text.trim().trim_end_matches(';'));
    let (tokens, mut diagnostics) = lex(&wrapped);
    let mut parser = Parser {
        tokens,
        index: 0,
        diagnostics: Vec::new(),
    };
    let statement = parser.parse_statement();
    if *parser.peek() != Token::Eof {
        parser.error_here("expected exactly one query expression");
    }
    diagnostics.extend(parser.diagnostics);
    let Some((pos, RawStatement::Eval(raw))) = statement else {
        if diagnostics.is_empty() {
            diagnostics.push(diag_error(
                Pos { line: 1, column: 1 },
                "expected a query expression",
            ));
        }
        return Err(diagnostics);
    };
    if diagnostics.iter().any(ParseDiagnostic::is_error) {
        return Err(diagnostics);
    }
    let names = names_of_schema(schema);
    let constants = schema.constant_symbols();
    match resolve_query(schema, &names, &constants, &raw, pos, &mut diagnostics) {
        Some(query) if !diagnostics.iter().any(ParseDiagnostic::is_error) => Ok(query),
        _ => Err(diagnostics),
    }
}

/// Declaration environment of an existing schema, for standalone queries.
fn names_of_schema(schema: &Schema) -> Names {
    let mut names = Names::default();
    for (kind, name) in schema.declared_names() {
        names.map.insert(name.to_string(), kind.label());
    }
    for user in schema.users.keys() {
        names.map.insert(user.clone(), "user");
    }
    for event in &schema.custom_events {
        names.map.insert(event.clone(), "event");
    }
    if let Some(org) = &schema.org {
        for unit in org.unit_names() {
            names.map.insert(unit, "unit");
        }
    }
    if let Some(component) = &schema.component {
        names.requires = component.requires.clone();
    }
    names
}

// ---- resolution ---------------------------------------------------------

#[derive(Default)]
struct Names {
    map: BTreeMap<String, &'static str>,
    requires: BTreeSet<String>,
}

impl Names {
    fn declare(
        &mut self,
        diagnostics: &mut Vec<ParseDiagnostic>,
        pos: Pos,
        kind: &'static str,
        name: &str,
    ) -> bool {
        if let Some(existing) = self.map.get(name) {
            diagnostics.push(diag_error(
                pos,
                format!("name `{name}` is already declared as a {existing}"),
            ));
            false
        } else {
            self.map.insert(name.to_string(), kind);
            true
        }
    }

    fn known_symbol(&self, constants: &BTreeSet<String>, symbol: &str) -> bool {
        self.map.contains_key(symbol)
            || self.requires.contains(symbol)
            || constants.contains(symbol)
    }
}

fn resolve(
    statements: Vec<(Pos, RawStatement)>,
    diagnostics: &mut Vec<ParseDiagnostic>,
) -> Bundle {
    let mut bundle = Bundle::default();
    let mut names = Names::default();

    // Component headers first: their `requires` names resolve as concepts
    // expected from the merge base.
    for (pos, statement) in &statements {
        if let RawStatement::Component(header) = statement {
            if bundle.schema.component.is_some() {
                diagnostics.push(diag_error(*pos, "a document declares at most one component"));
            } else {
                names.requires = header.requires.clone();
                bundle.schema.component = Some(header.clone());
            }
        }
    }

    // Pass A: names and declarations.
    for (pos, statement) in &statements {
        match statement {
            RawStatement::Sort(sort) => {
                if names.declare(diagnostics, *pos, "sort", &sort.name) {
                    bundle.schema.sorts.insert(sort.name.clone(), sort.clone());
                }
            }
            RawStatement::Concept(concept) => {
                if names.requires.contains(&concept.name) {
                    diagnostics.push(diag_error(
                        *pos,
                        format!(
                            "concept `{}` is listed in `requires` and declared locally",
                            concept.name
                        ),
                    ));
                } else if names.declare(diagnostics, *pos, "concept", &concept.name) {
                    bundle
                        .schema
                        .concepts
                        .insert(concept.name.clone(), concept.clone());
                }
            }
            RawStatement::Relation { name, arity } => {
                if *arity != 2 {
                    diagnostics.push(diag_error(
                        *pos,
                        format!("relations are dyadic; `{name}/{arity}` is not"),
                    ));
                } else if names.declare(diagnostics, *pos, "relation", name) {
                    bundle.schema.relations.insert(name.clone());
                }
            }
            RawStatement::Individual(individual) => {
                if names.declare(diagnostics, *pos, "individual", &individual.id) {
                    bundle
                        .schema
                        .individuals
                        .insert(individual.id.clone(), individual.clone());
                }
            }
            RawStatement::Predicate { level, name, .. } => {
                if *level < 1 {
                    diagnostics.push(diag_error(
                        *pos,
                        "metadata predicates live at level 1 or above",
                    ));
                } else if *level as u32 > DEFAULT_MAX_LEVEL {
                    diagnostics.push(diag_error(
                        *pos,
                        format!("level {level} exceeds the maximum of {DEFAULT_MAX_LEVEL}"),
                    ));
                } else {
                    names.declare(diagnostics, *pos, "predicate", name);
                }
            }
            RawStatement::Metric(metric) => {
                if names.declare(diagnostics, *pos, "metric", &metric.name) {
                    bundle
                        .schema
                        .metrics
                        .insert(metric.name.clone(), metric.clone());
                }
            }
            RawStatement::Org(org) => {
                if bundle.schema.org.is_some() {
                    diagnostics.push(diag_error(*pos, "a document declares at most one org"));
                    continue;
                }
                if let Err(err) = org.validate() {
                    diagnostics.push(diag_error(*pos, err.to_string()));
                    continue;
                }
                for unit in org.unit_names() {
                    names.declare(diagnostics, *pos, "unit", &unit);
                }
                bundle.schema.org = Some(org.clone());
            }
            RawStatement::User(decl) => {
                if names.declare(diagnostics, *pos, "user", &decl.name) {
                    bundle.schema.users.insert(decl.name.clone(), decl.clone());
                }
            }
            RawStatement::Event(name) => {
                if names.declare(diagnostics, *pos, "event", name) {
                    bundle.schema.custom_events.insert(name.clone());
                }
            }
            RawStatement::Priority { .. }
            | RawStatement::Frame(_)
            | RawStatement::Script(_)
            | RawStatement::Component(_)
            | RawStatement::Eval(_) => {}
        }
    }

    // Carrier symbols must not shadow declared names. Units and individuals
    // are exempt: they are constants of the network language themselves, so
    // a carrier may legitimately range over them.
    for (pos, statement) in &statements {
        if let RawStatement::Sort(sort) = statement {
            if let Carrier::Finite(members) = &sort.carrier {
                for member in members {
                    if let Value::Symbol(symbol) = member {
                        if let Some(kind) = names.map.get(symbol) {
                            if *kind == "unit" || *kind == "individual" {
                                continue;
                            }
                            diagnostics.push(diag_error(
                                *pos,
                                format!(
                                    "carrier constant `{symbol}` of sort `{}` collides with the declared {kind}",
                                    sort.name
                                ),
                            ));
                        }
                    }
                }
            }
        }
    }

    let constants = bundle.schema.constant_symbols();

    // Pass B: reference checks and the order-sensitive pieces.
    for (pos, statement) in &statements {
        match statement {
            RawStatement::Concept(concept) => {
                for (attr, sort) in &concept.attributes {
                    if !bundle.schema.sorts.contains_key(sort) {
                        diagnostics.push(diag_error(
                            *pos,
                            format!("attribute `{attr}` references undeclared sort `{sort}`"),
                        ));
                    }
                }
            }
            RawStatement::Individual(individual) => {
                check_individual(&bundle.schema, &names.requires, individual, *pos, diagnostics);
            }
            RawStatement::Frame(frame) => {
                if !bundle.schema.relations.contains(&frame.relation) {
                    diagnostics.push(diag_error(
                        *pos,
                        format!("frame uses undeclared relation `{}`", frame.relation),
                    ));
                }
                for term in [&frame.subject, &frame.object] {
                    if let Value::Symbol(symbol) = term {
                        if !names.known_symbol(&constants, symbol) {
                            diagnostics.push(diag_error(
                                *pos,
                                format!("frame uses undeclared symbol `{symbol}`"),
                            ));
                        }
                    }
                }
                if !bundle.schema.frames.insert(frame.clone()) {
                    diagnostics.push(diag_warning(
                        *pos,
                        format!("frame {frame} is already present; sets absorb duplicates"),
                    ));
                }
            }
            RawStatement::Predicate { level, name, comp } => {
                if *level < 1 || *level as u32 > DEFAULT_MAX_LEVEL {
                    continue; // reported in pass A
                }
                if let Some(comp) =
                    resolve_comprehension(&bundle.schema, &names, &constants, comp, *pos, diagnostics)
                {
                    bundle.schema.predicates.insert(
                        name.clone(),
                        MetaPredicate {
                            name: name.clone(),
                            level: *level as u32,
                            body: comp,
                        },
                    );
                }
            }
            RawStatement::Metric(metric) => {
                if let Some(org) = &bundle.schema.org {
                    for key in metric.components.keys() {
                        if let Some(lf) = &key.labor_function {
                            if !org.functions.is_empty() && !org.functions.contains(lf) {
                                diagnostics.push(diag_error(
                                    *pos,
                                    format!("component label `{lf}` is not a declared labor function"),
                                ));
                            }
                        }
                        if let Some(unit) = &key.unit {
                            if !org.contains_unit(unit) {
                                diagnostics.push(diag_error(
                                    *pos,
                                    format!("component label `{unit}` is not a declared unit"),
                                ));
                            }
                        }
                    }
                }
            }
            RawStatement::Priority { unit, rank } => {
                bundle.schema.priorities.insert(unit.clone(), *rank);
            }
            RawStatement::User(decl) => {
                for (concept, attrs) in &decl.grants.required_attributes {
                    match bundle.schema.concepts.get(concept) {
                        Some(declared) => {
                            for attr in attrs {
                                if !declared.has_attribute(attr) {
                                    diagnostics.push(diag_error(
                                        *pos,
                                        format!(
                                            "required attribute `{attr}` is not declared on concept `{concept}`"
                                        ),
                                    ));
                                }
                            }
                        }
                        None if names.requires.contains(concept) => {}
                        None => {
                            diagnostics.push(diag_error(
                                *pos,
                                format!("`require` references undeclared concept `{concept}`"),
                            ));
                        }
                    }
                }
            }
            RawStatement::Script(binding) => {
                if let EventKind::Custom(label) = &binding.event {
                    if !bundle.schema.custom_events.contains(label) {
                        diagnostics.push(diag_error(
                            *pos,
                            format!("custom event `{label}` is not declared; add `event {label};`"),
                        ));
                    }
                }
                if let Some(concept) = &binding.concept {
                    if !bundle.schema.concepts.contains_key(concept)
                        && !names.requires.contains(concept)
                    {
                        diagnostics.push(diag_error(
                            *pos,
                            format!("script filters on undeclared concept `{concept}`"),
                        ));
                    }
                }
                for action in &binding.actions {
                    if let ScriptAction::AddFrame { relation, .. } = action {
                        if !bundle.schema.relations.contains(relation) {
                            diagnostics.push(diag_error(
                                *pos,
                                format!("script frame uses undeclared relation `{relation}`"),
                            ));
                        }
                    }
                }
                bundle.schema.scripts.push(binding.clone());
            }
            RawStatement::Eval(query) => {
                if let Some(query) =
                    resolve_query(&bundle.schema, &names, &constants, query, *pos, diagnostics)
                {
                    bundle.queries.push(query);
                }
            }
            RawStatement::Sort(_)
            | RawStatement::Relation { .. }
            | RawStatement::Org(_)
            | RawStatement::Event(_)
            | RawStatement::Component(_) => {}
        }
    }

    bundle
}

fn check_individual(
    schema: &Schema,
    requires: &BTreeSet<String>,
    individual: &Individual,
    pos: Pos,
    diagnostics: &mut Vec<ParseDiagnostic>,
) {
    let concept = match schema.concepts.get(&individual.concept) {
        Some(concept) => concept,
        None if requires.contains(&individual.concept) => return,
        None => {
            diagnostics.push(diag_error(
                pos,
                format!(
                    "individual `{}` references undeclared concept `{}`",
                    individual.id, individual.concept
                ),
            ));
            return;
        }
    };
    for attr in individual.identifying.keys() {
        if !concept.has_attribute(attr) {
            diagnostics.push(diag_error(
                pos,
                format!(
                    "individual `{}` assigns undeclared attribute `{attr}`",
                    individual.id
                ),
            ));
        }
    }
    for (attr, sort_name) in &concept.attributes {
        match individual.identifying.get(attr) {
            None => diagnostics.push(diag_error(
                pos,
                format!(
                    "individual `{}` gives no value for attribute `{attr}`",
                    individual.id
                ),
            )),
            Some(value) => {
                if let Some(sort) = schema.sorts.get(sort_name) {
                    if !sort.admits(value) {
                        diagnostics.push(diag_error(
                            pos,
                            format!(
                                "value `{value}` of `{}.{attr}` lies outside sort `{sort_name}`",
                                individual.id
                            ),
                        ));
                    }
                }
            }
        }
    }
}

fn resolve_domain(schema: &Schema, names: &Names, domain: &RawDomain) -> Result<DomainRef, String> {
    match domain {
        RawDomain::AllConcepts => Ok(DomainRef::AllConcepts),
        RawDomain::Level(level) => Ok(DomainRef::Level(*level)),
        RawDomain::Named(name) => {
            if schema.sorts.contains_key(name) {
                Ok(DomainRef::Sort(name.clone()))
            } else if schema.concepts.contains_key(name) || names.requires.contains(name) {
                Ok(DomainRef::Concept(name.clone()))
            } else if names.map.get(name.as_str()) == Some(&"predicate") {
                Ok(DomainRef::Predicate(name.clone()))
            } else {
                Err(format!("unknown domain `{name}`"))
            }
        }
    }
}

fn check_formula(
    schema: &Schema,
    names: &Names,
    constants: &BTreeSet<String>,
    formula: &Formula,
    domain: &DomainRef,
    pos: Pos,
    diagnostics: &mut Vec<ParseDiagnostic>,
) {
    match formula {
        Formula::Truth(_) => {}
        Formula::Not(inner) => {
            check_formula(schema, names, constants, inner, domain, pos, diagnostics)
        }
        Formula::And(a, b) | Formula::Or(a, b) => {
            check_formula(schema, names, constants, a, domain, pos, diagnostics);
            check_formula(schema, names, constants, b, domain, pos, diagnostics);
        }
        Formula::Compare { lhs, rhs, .. } => {
            for term in [lhs, rhs] {
                check_term(schema, names, constants, term, domain, pos, diagnostics);
            }
        }
        Formula::Member { lhs, set } => {
            check_term(schema, names, constants, lhs, domain, pos, diagnostics);
            for value in set {
                if let Value::Symbol(symbol) = value {
                    if !names.known_symbol(constants, symbol) {
                        diagnostics.push(diag_error(
                            pos,
                            format!("membership set uses undeclared symbol `{symbol}`"),
                        ));
                    }
                }
            }
        }
        Formula::Atom { pred, args } => {
            let expected = BUILTIN_ATOMS
                .iter()
                .find(|(name, _)| name == pred)
                .map(|(_, arity)| *arity)
                .or_else(|| schema.relations.contains(pred).then_some(2))
                .or_else(|| (names.map.get(pred.as_str()) == Some(&"predicate")).then_some(1));
            match expected {
                None => diagnostics.push(diag_error(
                    pos,
                    format!("`{pred}` is not a relation, predicate or builtin"),
                )),
                Some(arity) if arity != args.len() => diagnostics.push(diag_error(
                    pos,
                    format!("`{pred}` expects {arity} arguments, got {}", args.len()),
                )),
                Some(_) => {}
            }
            for arg in args {
                check_term(schema, names, constants, arg, domain, pos, diagnostics);
            }
        }
    }
}

fn check_term(
    schema: &Schema,
    names: &Names,
    constants: &BTreeSet<String>,
    term: &Term,
    domain: &DomainRef,
    pos: Pos,
    diagnostics: &mut Vec<ParseDiagnostic>,
) {
    match term {
        Term::Var(_) => {}
        Term::Attr(_, attr) => {
            if let DomainRef::Concept(concept) = domain {
                if let Some(declared) = schema.concepts.get(concept) {
                    if !declared.has_attribute(attr) {
                        diagnostics.push(diag_error(
                            pos,
                            format!("concept `{concept}` has no attribute `{attr}`"),
                        ));
                    }
                }
            }
        }
        Term::Const(Value::Symbol(symbol)) => {
            if !names.known_symbol(constants, symbol) {
                diagnostics.push(diag_error(
                    pos,
                    format!("formula uses undeclared symbol `{symbol}`"),
                ));
            }
        }
        Term::Const(_) => {}
    }
}

fn resolve_comprehension(
    schema: &Schema,
    names: &Names,
    constants: &BTreeSet<String>,
    comp: &RawComprehension,
    pos: Pos,
    diagnostics: &mut Vec<ParseDiagnostic>,
) -> Option<Comprehension> {
    match resolve_domain(schema, names, &comp.domain) {
        Ok(domain) => {
            let before = diagnostics.len();
            check_formula(schema, names, constants, &comp.body, &domain, pos, diagnostics);
            let clean = diagnostics[before..].iter().all(|d| !d.is_error());
            clean.then(|| Comprehension {
                var: comp.var.clone(),
                domain,
                body: comp.body.clone(),
            })
        }
        Err(message) => {
            diagnostics.push(diag_error(pos, message));
            None
        }
    }
}

fn resolve_query(
    schema: &Schema,
    names: &Names,
    constants: &BTreeSet<String>,
    query: &RawQuery,
    pos: Pos,
    diagnostics: &mut Vec<ParseDiagnostic>,
) -> Option<Query> {
    match query {
        RawQuery::Extension(name) => {
            let known = schema.sorts.contains_key(name)
                || schema.concepts.contains_key(name)
                || names.map.get(name.as_str()) == Some(&"predicate")
                || schema.metrics.contains_key(name);
            if known {
                Some(Query::Extension(name.clone()))
            } else {
                diagnostics.push(diag_error(
                    pos,
                    format!("`{name}` is not a sort, concept, predicate or metric"),
                ));
                None
            }
        }
        RawQuery::Comprehend(comp) => {
            resolve_comprehension(schema, names, constants, comp, pos, diagnostics)
                .map(Query::Comprehend)
        }
        RawQuery::Individuate(comp) => {
            resolve_comprehension(schema, names, constants, comp, pos, diagnostics)
                .map(Query::Individuate)
        }
        RawQuery::Apply { head, assignments } => {
            let assignments: Vec<crate::appraisal::Assignment> = assignments
                .iter()
                .map(|(kind, values)| crate::appraisal::Assignment {
                    kind: *kind,
                    values: values.clone(),
                })
                .collect();
            if head == "F" {
                Some(Query::Functional(assignments))
            } else if schema.metrics.contains_key(head) {
                Some(Query::Metric(head.clone(), assignments))
            } else {
                diagnostics.push(diag_error(
                    pos,
                    format!("`{head}` is neither the functional `F` nor a declared metric"),
                ));
                None
            }
        }
    }
}
