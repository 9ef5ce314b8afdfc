//! The relational engine underneath the layer.

mod sqlite;

use std::fmt;

use thiserror::Error;

use crate::parser::QuoteStyle;

pub use sqlite::SqliteKernel;

#[derive(Debug, Clone)]
pub enum Value {
    Null,
    Integer(i64),
    Real(f64),
    Text(String),
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Null, Value::Null) => true,
            (Value::Integer(a), Value::Integer(b)) => a == b,
            (Value::Real(a), Value::Real(b)) => a.to_bits() == b.to_bits(),
            (Value::Text(a), Value::Text(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl std::hash::Hash for Value {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Value::Null => {}
            Value::Integer(i) => i.hash(state),
            Value::Real(r) => r.to_bits().hash(state),
            Value::Text(t) => t.hash(state),
        }
    }
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    /// SQL literal for this value.
    pub fn to_sql(&self) -> String {
        match self {
            Value::Null => "NULL".into(),
            Value::Integer(i) => i.to_string(),
            Value::Real(r) => format!("{r:?}"),
            Value::Text(t) => format!("'{}'", t.replace('\'', "''")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Integer(i) => write!(f, "{i}"),
            Value::Real(r) => write!(f, "{r:?}"),
            Value::Text(t) => f.write_str(t),
        }
    }
}

/// Query result: ordered columns and rows of equal width.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RowSet {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl RowSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.eq_ignore_ascii_case(name))
    }

    /// Single value of a one-row, one-column result.
    pub fn scalar(&self) -> Option<&Value> {
        self.rows.first().and_then(|r| r.first())
    }

    /// Rows as display strings, sorted; handy for order-insensitive comparison.
    pub fn sorted_text(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> =
            self.rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect();
        rows.sort();
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Rows(RowSet),
    Affected(usize),
}

impl Outcome {
    pub fn into_rows(self) -> RowSet {
        match self {
            Outcome::Rows(r) => r,
            Outcome::Affected(_) => RowSet::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectKind {
    Table,
    View,
}

impl fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectKind::Table => "table",
            ObjectKind::View => "view",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelObject {
    pub name: String,
    pub kind: ObjectKind,
}

/// Optional engine features, probed once when a connection opens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub left_join: bool,
    pub scalar_subquery: bool,
    /// A `LIST(...)` string aggregate.
    pub string_aggregation: bool,
    /// An `IIF(cond, a, b)` scalar.
    pub conditional: bool,
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel error: {message}")]
    Engine { message: String, sql: Option<String> },
    #[error("unknown kernel object {0}")]
    UnknownObject(String),
    #[error("a transaction is already open")]
    NestedTransaction,
    #[error("no transaction is open")]
    NoTransaction,
    #[error("cannot open kernel at {location}: {message}")]
    Open { location: String, message: String },
}

impl KernelError {
    pub fn sql(&self) -> Option<&str> {
        match self {
            KernelError::Engine { sql, .. } => sql.as_deref(),
            _ => None,
        }
    }
}

pub trait Kernel {
    fn location(&self) -> &str;

    fn capabilities(&self) -> Capabilities;

    /// How identifiers are quoted in SQL sent to this kernel.
    fn quote_style(&self) -> QuoteStyle;

    /// Runs one statement.
    fn execute(&mut self, sql: &str) -> Result<Outcome, KernelError>;

    fn query(&mut self, sql: &str) -> Result<RowSet, KernelError> {
        self.execute(sql).map(Outcome::into_rows)
    }

    /// Column names of a table or view, in kernel order.
    fn introspect(&mut self, object: &str) -> Result<Vec<String>, KernelError>;

    /// User-visible tables and views, in creation order.
    fn objects(&mut self) -> Result<Vec<KernelObject>, KernelError>;

    fn in_transaction(&self) -> bool;

    fn begin(&mut self) -> Result<(), KernelError>;

    fn commit(&mut self) -> Result<(), KernelError>;

    fn rollback(&mut self) -> Result<(), KernelError>;
}

/// Runs `work` in one transaction: commit on success, rollback on error.
pub fn within_transaction<K, T, E, F>(kernel: &mut K, work: F) -> Result<T, E>
where
    K: Kernel + ?Sized,
    E: From<KernelError>,
    F: FnOnce(&mut K) -> Result<T, E>,
{
    if kernel.in_transaction() {
        return Err(KernelError::NestedTransaction.into());
    }
    kernel.begin()?;
    match work(kernel) {
        Ok(v) => {
            kernel.commit()?;
            Ok(v)
        }
        Err(e) => {
            // The inner failure wins over any rollback trouble.
            let _ = kernel.rollback();
            Err(e)
        }
    }
}
