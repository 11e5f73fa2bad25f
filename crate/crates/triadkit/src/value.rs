//! Constant values: interned symbols plus the builtin scalar kinds.
//!
//! Symbols compare by name, scalars by value. Every value has a canonical
//! literal form used by the printer and the history files, and equal values
//! always share one representation (decimals are normalized), so ordering,
//! equality and round-tripping agree.

use std::fmt;

use chrono::NaiveDate;

/// The builtin scalar kinds a sort carrier may be declared as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ScalarKind {
    Text,
    Integer,
    Decimal,
    Date,
}

impl ScalarKind {
    pub fn name(self) -> &'static str {
        match self {
            ScalarKind::Text => "text",
            ScalarKind::Integer => "integer",
            ScalarKind::Decimal => "decimal",
            ScalarKind::Date => "date",
        }
    }
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exact decimal: `mantissa * 10^-scale`, kept normalized (no trailing zeros
/// in the fraction, and scale 0 when the fraction is empty).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decimal {
    mantissa: i128,
    scale: u32,
}

impl Decimal {
    /// Largest number of significant digits accepted; keeps comparisons
    /// exact in i128 arithmetic.
    pub const MAX_DIGITS: u32 = 18;

    pub fn new(mantissa: i128, scale: u32) -> Self {
        let mut d = Decimal { mantissa, scale };
        d.normalize();
        d
    }

    pub fn from_int(n: i64) -> Self {
        Decimal::new(n as i128, 0)
    }

    fn normalize(&mut self) {
        while self.scale > 0 && self.mantissa % 10 == 0 {
            self.mantissa /= 10;
            self.scale -= 1;
        }
    }

    pub fn mantissa(&self) -> i128 {
        self.mantissa
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn to_f64(&self) -> f64 {
        self.mantissa as f64 / 10f64.powi(self.scale as i32)
    }

    /// Parse the canonical `-?digits.digits` form.
    pub fn parse(text: &str) -> Option<Self> {
        let (int_part, frac_part) = text.split_once('.')?;
        let (neg, int_digits) = match int_part.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, int_part),
        };
        if int_digits.is_empty() || frac_part.is_empty() {
            return None;
        }
        if !int_digits.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return None;
        }
        if (int_digits.len() + frac_part.len()) as u32 > Self::MAX_DIGITS {
            return None;
        }
        let mut mantissa: i128 = 0;
        for b in int_digits.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa * 10 + (b - b'0') as i128;
        }
        if neg {
            mantissa = -mantissa;
        }
        Some(Decimal::new(mantissa, frac_part.len() as u32))
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Cross-multiply onto a common scale; bounded by MAX_DIGITS so the
        // products stay inside i128.
        let lhs = self.mantissa * 10i128.pow(other.scale);
        let rhs = other.mantissa * 10i128.pow(self.scale);
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.mantissa.unsigned_abs().to_string();
        let sign = if self.mantissa < 0 { "-" } else { "" };
        if self.scale == 0 {
            return write!(f, "{sign}{digits}.0");
        }
        let scale = self.scale as usize;
        if digits.len() > scale {
            let (int_part, frac_part) = digits.split_at(digits.len() - scale);
            write!(f, "{sign}{int_part}.{frac_part}")
        } else {
            write!(f, "{sign}0.{0:0>1$}", digits, scale)
        }
    }
}

/// A constant: either an interned identifier symbol or a scalar literal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Symbol(String),
    Text(String),
    Integer(i64),
    Decimal(Decimal),
    Date(NaiveDate),
}

impl Value {
    pub fn symbol(name: impl Into<String>) -> Self {
        Value::Symbol(name.into())
    }

    pub fn text(t: impl Into<String>) -> Self {
        Value::Text(t.into())
    }

    pub fn scalar_kind(&self) -> Option<ScalarKind> {
        match self {
            Value::Symbol(_) => None,
            Value::Text(_) => Some(ScalarKind::Text),
            Value::Integer(_) => Some(ScalarKind::Integer),
            Value::Decimal(_) => Some(ScalarKind::Decimal),
            Value::Date(_) => Some(ScalarKind::Date),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Symbol(_) => "symbol",
            Value::Text(_) => "text",
            Value::Integer(_) => "integer",
            Value::Decimal(_) => "decimal",
            Value::Date(_) => "date",
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Value::Symbol(s) => Some(s),
            _ => None,
        }
    }

    /// Whether `<` and `>` are defined between the two values.
    pub fn comparable_with(&self, other: &Value) -> bool {
        matches!(
            (self, other),
            (Value::Text(_), Value::Text(_))
                | (Value::Integer(_), Value::Integer(_))
                | (Value::Decimal(_), Value::Decimal(_))
                | (Value::Integer(_), Value::Decimal(_))
                | (Value::Decimal(_), Value::Integer(_))
                | (Value::Date(_), Value::Date(_))
        )
    }

    /// Numeric-aware ordering: integers and decimals compare by magnitude,
    /// other kinds only against themselves.
    pub fn compare(&self, other: &Value) -> Option<std::cmp::Ordering> {
        match (self, other) {
            (Value::Integer(a), Value::Decimal(b)) => Some(Decimal::from_int(*a).cmp(b)),
            (Value::Decimal(a), Value::Integer(b)) => Some(a.cmp(&Decimal::from_int(*b))),
            _ if std::mem::discriminant(self) == std::mem::discriminant(other) => {
                Some(self.cmp(other))
            }
            _ => None,
        }
    }

    /// Equality under the same numeric coercion `compare` uses.
    pub fn same_value(&self, other: &Value) -> bool {
        self.compare(other) == Some(std::cmp::Ordering::Equal)
    }
}

/// Quote and escape a text literal for the canonical form.
pub fn quote_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 2);
    out.push('"');
    for ch in text.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

// Display is the canonical literal form accepted back by the lexer.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Symbol(s) => f.write_str(s),
            Value::Text(t) => f.write_str(&quote_text(t)),
            Value::Integer(n) => write!(f, "{n}"),
            Value::Decimal(d) => write!(f, "{d}"),
            Value::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
        }
    }
}
