//! Tokenizer for `.tdk` documents.
//!
//! Identifiers are letters, digits and underscores, starting with a letter,
//! case-sensitive. `#` starts a line comment. Text literals are quoted with
//! `"` and understand `\" \\ \n \r \t`; anything else, including multi-byte
//! text, passes through opaquely. Date literals look like `2001-05-14` and
//! are recognized before integers.

use chrono::NaiveDate;

use crate::value::Decimal;

use super::{diag_error, ParseDiagnostic, Pos};

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    Ident(String),
    Integer(i64),
    DecimalLit(Decimal),
    DateLit(NaiveDate),
    TextLit(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Semi,
    Colon,
    Pipe,
    Dot,
    Slash,
    Eq,
    Ne,
    Lt,
    Gt,
    Minus,
    PlusEq,
    MinusEq,
    Eof,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Ident(name) => format!("identifier `{name}`"),
            Token::Integer(n) => format!("integer `{n}`"),
            Token::DecimalLit(d) => format!("decimal `{d}`"),
            Token::DateLit(d) => format!("date `{d}`"),
            Token::TextLit(_) => "text literal".to_string(),
            Token::LBrace => "`{`".into(),
            Token::RBrace => "`}`".into(),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::Comma => "`,`".into(),
            Token::Semi => "`;`".into(),
            Token::Colon => "`:`".into(),
            Token::Pipe => "`|`".into(),
            Token::Dot => "`.`".into(),
            Token::Slash => "`/`".into(),
            Token::Eq => "`=`".into(),
            Token::Ne => "`!=`".into(),
            Token::Lt => "`<`".into(),
            Token::Gt => "`>`".into(),
            Token::Minus => "`-`".into(),
            Token::PlusEq => "`+=`".into(),
            Token::MinusEq => "`-=`".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub token: Token,
    pub pos: Pos,
}

pub fn lex(text: &str) -> (Vec<Spanned>, Vec<ParseDiagnostic>) {
    let mut tokens = Vec::new();
    let mut diagnostics = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    let mut last_pos = Pos { line: 1, column: 1 };

    macro_rules! push {
        ($tok:expr, $pos:expr) => {{
            last_pos = $pos;
            tokens.push(Spanned {
                token: $tok,
                pos: $pos,
            });
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
            }
            '{' => {
                push!(Token::LBrace, pos);
                i += 1;
                col += 1;
            }
            '}' => {
                push!(Token::RBrace, pos);
                i += 1;
                col += 1;
            }
            '(' => {
                push!(Token::LParen, pos);
                i += 1;
                col += 1;
            }
            ')' => {
                push!(Token::RParen, pos);
                i += 1;
                col += 1;
            }
            ',' => {
                push!(Token::Comma, pos);
                i += 1;
                col += 1;
            }
            ';' => {
                push!(Token::Semi, pos);
                i += 1;
                col += 1;
            }
            ':' => {
                push!(Token::Colon, pos);
                i += 1;
                col += 1;
            }
            '|' => {
                push!(Token::Pipe, pos);
                i += 1;
                col += 1;
            }
            '.' => {
                push!(Token::Dot, pos);
                i += 1;
                col += 1;
            }
            '/' => {
                push!(Token::Slash, pos);
                i += 1;
                col += 1;
            }
            '=' => {
                push!(Token::Eq, pos);
                i += 1;
                col += 1;
            }
            '<' => {
                push!(Token::Lt, pos);
                i += 1;
                col += 1;
            }
            '>' => {
                push!(Token::Gt, pos);
                i += 1;
                col += 1;
            }
            '!' => {
                if chars.get(i + 1) == Some(&'=') {
                    push!(Token::Ne, pos);
                    i += 2;
                    col += 2;
                } else {
                    diagnostics.push(diag_error(pos, "stray `!`; did you mean `!=`?"));
                    i += 1;
                    col += 1;
                }
            }
            '+' => {
                if chars.get(i + 1) == Some(&'=') {
                    push!(Token::PlusEq, pos);
                    i += 2;
                    col += 2;
                } else {
                    diagnostics.push(diag_error(pos, "stray `+`; did you mean `+=`?"));
                    i += 1;
                    col += 1;
                }
            }
            '-' => {
                if chars.get(i + 1) == Some(&'=') {
                    push!(Token::MinusEq, pos);
                    i += 2;
                    col += 2;
                } else {
                    push!(Token::Minus, pos);
                    i += 1;
                    col += 1;
                }
            }
            '"' => {
                let mut out = String::new();
                let mut j = i + 1;
                let mut closed = false;
                let mut consumed_cols = 1u32;
                let mut consumed_lines = 0u32;
                let mut col_after = col + 1;
                while j < chars.len() {
                    let ch = chars[j];
                    if ch == '"' {
                        closed = true;
                        j += 1;
                        col_after += 1;
                        break;
                    } else if ch == '\\' {
                        match chars.get(j + 1) {
                            Some('"') => out.push('"'),
                            Some('\\') => out.push('\\'),
                            Some('n') => out.push('\n'),
                            Some('r') => out.push('\r'),
                            Some('t') => out.push('\t'),
                            Some(other) => {
                                diagnostics.push(diag_error(
                                    Pos {
                                        line: line + consumed_lines,
                                        column: col_after,
                                    },
                                    format!("unknown escape `\\{other}`"),
                                ));
                                out.push(*other);
                            }
                            None => break,
                        }
                        j += 2;
                        col_after += 2;
                    } else {
                        if ch == '\n' {
                            consumed_lines += 1;
                            col_after = 1;
                        } else {
                            col_after += 1;
                        }
                        out.push(ch);
                        j += 1;
                    }
                    consumed_cols += 1;
                }
                if !closed {
                    diagnostics.push(diag_error(pos, "unterminated text literal"));
                }
                let _ = consumed_cols;
                push!(Token::TextLit(out), pos);
                i = j;
                line += consumed_lines;
                col = col_after;
            }
            c if c.is_ascii_digit() => {
                // Date literal: exactly DDDD-DD-DD.
                if is_date_at(&chars, i) {
                    let text: String = chars[i..i + 10].iter().collect();
                    match NaiveDate::parse_from_str(&text, "%Y-%m-%d") {
                        Ok(date) => push!(Token::DateLit(date), pos),
                        Err(_) => {
                            diagnostics
                                .push(diag_error(pos, format!("invalid date `{text}`")));
                            push!(Token::Integer(0), pos);
                        }
                    }
                    i += 10;
                    col += 10;
                    continue;
                }
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                let mut is_decimal = false;
                if i < chars.len()
                    && chars[i] == '.'
                    && chars.get(i + 1).map(|c| c.is_ascii_digit()).unwrap_or(false)
                {
                    is_decimal = true;
                    i += 1;
                    col += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                        col += 1;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                if is_decimal {
                    match Decimal::parse(&text) {
                        Some(d) => push!(Token::DecimalLit(d), pos),
                        None => {
                            diagnostics.push(diag_error(
                                pos,
                                format!("decimal `{text}` has too many digits"),
                            ));
                            push!(Token::DecimalLit(Decimal::new(0, 0)), pos);
                        }
                    }
                } else {
                    match text.parse::<i64>() {
                        Ok(n) => push!(Token::Integer(n), pos),
                        Err(_) => {
                            diagnostics.push(diag_error(
                                pos,
                                format!("integer `{text}` is out of range"),
                            ));
                            push!(Token::Integer(0), pos);
                        }
                    }
                }
            }
            c if c.is_alphabetic() => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_')
                {
                    i += 1;
                    col += 1;
                }
                let word: String = chars[start..i].iter().collect();
                push!(Token::Ident(word), pos);
            }
            other => {
                diagnostics.push(diag_error(pos, format!("unexpected character `{other}`")));
                i += 1;
                col += 1;
            }
        }
    }
    tokens.push(Spanned {
        token: Token::Eof,
        pos: last_pos,
    });
    (tokens, diagnostics)
}

fn is_date_at(chars: &[char], i: usize) -> bool {
    if i + 10 > chars.len() {
        return false;
    }
    let window = &chars[i..i + 10];
    window[..4].iter().all(|c| c.is_ascii_digit())
        && window[4] == '-'
        && window[5..7].iter().all(|c| c.is_ascii_digit())
        && window[7] == '-'
        && window[8..10].iter().all(|c| c.is_ascii_digit())
        // `2024-01-15x` is an error, not a date followed by an identifier.
        && chars
            .get(i + 10)
            .map(|c| !c.is_alphanumeric() && *c != '_')
            .unwrap_or(true)
}
