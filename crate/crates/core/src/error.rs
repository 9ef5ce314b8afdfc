use thiserror::Error;

use crate::kernel::KernelError;
use crate::parser::{RenderError, SyntaxError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, mapped onto process exit codes by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed source text.
    Parse,
    /// Schema-level failure: DDL, catalog, compilation, normalization input.
    Semantic,
    /// Query or DML failure at run time.
    Runtime,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("{source}{}", statement.as_ref().map(|s| format!(" (while running: {s})")).unwrap_or_default())]
    Kernel {
        #[source]
        source: KernelError,
        /// The sirsql statement that caused the kernel call.
        statement: Option<String>,
    },
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("unknown column {column} in {relation}")]
    UnknownColumn { relation: String, column: String },
    #[error("relation {relation} has no inheritance expression or attribute named {name}")]
    UnknownIe { relation: String, name: String },
    #[error("relation {0} already exists")]
    DuplicateName(String),
    #[error("name {name} is reserved: {reason}")]
    ReservedName { name: String, reason: String },
    #[error("circular reference between {}", cycle.join(", "))]
    CircularReference { cycle: Vec<String> },
    #[error("{relation}: {message}")]
    InvariantViolation { relation: String, message: String },
    #[error("inheritance expression {ie} of {relation} has no recursive join on {relation}")]
    MissingRecursiveJoin { relation: String, ie: String },
    #[error("inheritance expression {ie} of {relation} joins {relation} with a non-equality predicate; only aggregate IEs may")]
    NonEquiRecursiveJoin { relation: String, ie: String },
    #[error("inheritance expressions of {relation} reference each other: {}", ies.join(", "))]
    IeCycle { relation: String, ies: Vec<String> },
    #[error("excluded column {0} is not a column of any source")]
    UnknownExcludedColumn(String),
    #[error("the kernel lacks {capability}, needed by {context}")]
    CapabilityMissing { capability: String, context: String },
    #[error("kernel object {0} already exists")]
    NameCollision(String),
    #[error("attribute {attribute} of {relation} serves a recursive join and cannot be dropped")]
    RecursiveJoinAttributeDrop { relation: String, attribute: String },
    #[error("cannot drop {relation}: depended on by {}", dependents.join(", "))]
    DependentsExist { relation: String, dependents: Vec<String> },
    #[error("cannot index inherited attribute {attribute} of {relation}")]
    IndexOnInheritedAttribute { relation: String, attribute: String },
    #[error("cannot rewrite {ie} to read {relation}_B: it reads inherited attribute {attribute}")]
    NotRewritable { ie: String, relation: String, attribute: String },
    #[error("write to {relation} rejected: {reason}")]
    RejectedWrite { relation: String, reason: String },
    #[error("insert into {relation} left {} uncomputed for key {}", ies.join(", "), keys.join(", "))]
    IaNotComputable { relation: String, ies: Vec<String>, keys: Vec<String> },
    #[error("corrupt catalog: {0}")]
    CorruptCatalog(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("decomposition made no progress: {0}")]
    NoProgress(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("line {line}: {message}")]
    InputFormat { line: usize, message: String },
}

impl From<KernelError> for Error {
    fn from(source: KernelError) -> Self {
        Error::Kernel { source, statement: None }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Syntax(_) | Error::InputFormat { .. } => ErrorClass::Parse,
            Error::Kernel { .. }
            | Error::RejectedWrite { .. }
            | Error::IaNotComputable { .. }
            | Error::UnknownRelation(_)
            | Error::UnknownColumn { .. } => ErrorClass::Runtime,
            _ => ErrorClass::Semantic,
        }
    }

    /// Attaches the originating statement to a kernel error.
    pub fn with_statement(self, text: &str) -> Self {
        match self {
            Error::Kernel { source, statement: None } => Error::Kernel { source, statement: Some(text.to_string()) },
            other => other,
        }
    }

    pub(crate) fn invariant(relation: impl ToString, message: impl Into<String>) -> Self {
        Error::InvariantViolation { relation: relation.to_string(), message: message.into() }
    }
}
