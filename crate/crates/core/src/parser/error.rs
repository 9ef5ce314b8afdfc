use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyntaxErrorKind {
    UnexpectedToken { expected: Vec<String>, found: String },
    UnexpectedCharacter(char),
    UnterminatedString,
    UnterminatedIdentifier,
    UnterminatedComment,
    /// The input ended before the statement's terminating semicolon.
    UnterminatedStatement,
    DuplicateAttribute(String),
    InvalidNumber(String),
}

impl fmt::Display for SyntaxErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxErrorKind::UnexpectedToken { expected, found } => {
                write!(f, "expected {}, found {found}", expected.join(" or "))
            }
            SyntaxErrorKind::UnexpectedCharacter(c) => write!(f, "unexpected character {c:?}"),
            SyntaxErrorKind::UnterminatedString => f.write_str("unterminated string literal"),
            SyntaxErrorKind::UnterminatedIdentifier => f.write_str("unterminated quoted identifier"),
            SyntaxErrorKind::UnterminatedComment => f.write_str("unterminated comment"),
            SyntaxErrorKind::UnterminatedStatement => f.write_str("statement is missing its terminating ';'"),
            SyntaxErrorKind::DuplicateAttribute(a) => write!(f, "duplicate attribute name {a}"),
            SyntaxErrorKind::InvalidNumber(n) => write!(f, "invalid number {n}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at line {line}, column {column}: {kind}")]
pub struct SyntaxError {
    pub kind: SyntaxErrorKind,
    pub line: usize,
    pub column: usize,
    pub offset: usize,
}

impl SyntaxError {
    pub fn new(kind: SyntaxErrorKind, line: usize, column: usize, offset: usize) -> Self {
        SyntaxError { kind, line, column, offset }
    }

    pub fn expected(&self) -> &[String] {
        match &self.kind {
            SyntaxErrorKind::UnexpectedToken { expected, .. } => expected,
            _ => &[],
        }
    }
}

/// Byte range and start position of a statement in its source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

/// Non-fatal diagnostic raised while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.column, self.message)
    }
}
