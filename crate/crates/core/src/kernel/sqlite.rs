use rusqlite::functions::{Aggregate, Context, FunctionFlags};
use rusqlite::types::{Value as SqlValue, ValueRef};
use rusqlite::Connection;

use super::{Capabilities, Kernel, KernelError, KernelObject, ObjectKind, Outcome, RowSet, Value};
use crate::parser::{quote_ident, QuoteStyle};

/// Kernel binding over an embedded SQLite database file (or `:memory:`).
pub struct SqliteKernel {
    conn: Connection,
    location: String,
    caps: Capabilities,
}

impl SqliteKernel {
    pub fn open(location: &str) -> Result<Self, KernelError> {
        let conn = if location == ":memory:" { Connection::open_in_memory() } else { Connection::open(location) };
        let conn = conn.map_err(|e| KernelError::Open { location: location.to_string(), message: e.to_string() })?;
        Self::from_connection(conn, location)
    }

    pub fn open_in_memory() -> Result<Self, KernelError> {
        Self::open(":memory:")
    }

    fn from_connection(conn: Connection, location: &str) -> Result<Self, KernelError> {
        register_functions(&conn).map_err(engine(None))?;
        conn.execute_batch("PRAGMA foreign_keys = ON;").map_err(engine(None))?;
        let mut kernel = SqliteKernel { conn, location: location.to_string(), caps: Capabilities::default() };
        kernel.caps = kernel.probe()?;
        Ok(kernel)
    }

    /// Direct access for tests and tooling that need engine-specific calls.
    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    fn probe(&mut self) -> Result<Capabilities, KernelError> {
        self.conn.execute_batch("BEGIN").map_err(engine(None))?;
        let setup = self.conn.execute_batch(
            "CREATE TABLE sir_probe_a (k INTEGER, v INTEGER);
             CREATE TABLE sir_probe_b (k INTEGER, w TEXT);
             INSERT INTO sir_probe_a VALUES (1, 10), (2, 20);
             INSERT INTO sir_probe_b VALUES (1, 'x'), (1, 'y');",
        );
        let works = |sql: &str| self.conn.prepare(sql).and_then(|mut s| s.query([])?.next().map(|_| ())).is_ok();
        let caps = if setup.is_ok() {
            Capabilities {
                left_join: works("SELECT a.k, b.w FROM sir_probe_a a LEFT JOIN sir_probe_b b ON a.k = b.k"),
                scalar_subquery: works(
                    "SELECT a.k, (SELECT COUNT(*) FROM sir_probe_b b WHERE b.k = a.k) FROM sir_probe_a a",
                ),
                string_aggregation: works("SELECT LIST(k, w ORDER BY w DESC) FROM sir_probe_b"),
                conditional: works("SELECT IIF(v > 10, 1, 0) FROM sir_probe_a"),
            }
        } else {
            Capabilities::default()
        };
        self.conn.execute_batch("ROLLBACK").map_err(engine(None))?;
        Ok(caps)
    }

    fn run(&mut self, sql: &str) -> rusqlite::Result<Outcome> {
        let mut stmt = self.conn.prepare(sql)?;
        if stmt.column_count() == 0 {
            let n = stmt.raw_execute()?;
            return Ok(Outcome::Affected(n));
        }
        let columns: Vec<String> = stmt.column_names().into_iter().map(str::to_string).collect();
        let width = columns.len();
        let mut rows = Vec::new();
        let mut cursor = stmt.query([])?;
        while let Some(row) = cursor.next()? {
            let mut out = Vec::with_capacity(width);
            for i in 0..width {
                out.push(from_ref(row.get_ref(i)?));
            }
            rows.push(out);
        }
        Ok(Outcome::Rows(RowSet { columns, rows }))
    }
}

fn engine(sql: Option<&str>) -> impl Fn(rusqlite::Error) -> KernelError + '_ {
    move |e| KernelError::Engine { message: e.to_string(), sql: sql.map(str::to_string) }
}

fn from_ref(v: ValueRef<'_>) -> Value {
    match v {
        ValueRef::Null => Value::Null,
        ValueRef::Integer(i) => Value::Integer(i),
        ValueRef::Real(r) => Value::Real(r),
        ValueRef::Text(t) => Value::Text(String::from_utf8_lossy(t).into_owned()),
        ValueRef::Blob(b) => Value::Text(String::from_utf8_lossy(b).into_owned()),
    }
}

fn text_of(v: ValueRef<'_>) -> Option<String> {
    match from_ref(v) {
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

/// `LIST(a, b, …)`: each row's arguments joined by ", ", rows joined by "; ".
struct ListAggregate;

impl Aggregate<Vec<String>, Option<String>> for ListAggregate {
    fn init(&self, _ctx: &mut Context<'_>) -> rusqlite::Result<Vec<String>> {
        Ok(Vec::new())
    }

    fn step(&self, ctx: &mut Context<'_>, acc: &mut Vec<String>) -> rusqlite::Result<()> {
        let parts: Vec<String> = (0..ctx.len()).filter_map(|i| text_of(ctx.get_raw(i))).collect();
        if !parts.is_empty() {
            acc.push(parts.join(", "));
        }
        Ok(())
    }

    fn finalize(&self, _ctx: &mut Context<'_>, acc: Option<Vec<String>>) -> rusqlite::Result<Option<String>> {
        Ok(acc.filter(|rows| !rows.is_empty()).map(|rows| rows.join("; ")))
    }
}

fn register_functions(conn: &Connection) -> rusqlite::Result<()> {
    let flags = FunctionFlags::SQLITE_UTF8 | FunctionFlags::SQLITE_DETERMINISTIC;
    // INT(x): integer part, rounding toward negative infinity.
    conn.create_scalar_function("INT", 1, flags, |ctx| {
        Ok(match ctx.get_raw(0) {
            ValueRef::Null => SqlValue::Null,
            ValueRef::Integer(i) => SqlValue::Integer(i),
            ValueRef::Real(r) => SqlValue::Integer(r.floor() as i64),
            ValueRef::Text(t) => match String::from_utf8_lossy(t).trim().parse::<f64>() {
                Ok(r) => SqlValue::Integer(r.floor() as i64),
                Err(_) => SqlValue::Null,
            },
            ValueRef::Blob(_) => SqlValue::Null,
        })
    })?;
    conn.create_aggregate_function("LIST", -1, flags, ListAggregate)?;
    Ok(())
}

impl Kernel for SqliteKernel {
    fn location(&self) -> &str {
        &self.location
    }

    fn capabilities(&self) -> Capabilities {
        self.caps
    }

    fn quote_style(&self) -> QuoteStyle {
        QuoteStyle::Bracket
    }

    fn execute(&mut self, sql: &str) -> Result<Outcome, KernelError> {
        self.run(sql).map_err(engine(Some(sql)))
    }

    fn introspect(&mut self, object: &str) -> Result<Vec<String>, KernelError> {
        let exists: i64 = self
            .conn
            .query_row(
                "SELECT COUNT(*) FROM sqlite_master WHERE type IN ('table', 'view') AND name = ?1 COLLATE NOCASE",
                [object],
                |r| r.get(0),
            )
            .map_err(engine(None))?;
        if exists == 0 {
            return Err(KernelError::UnknownObject(object.to_string()));
        }
        let sql = format!("SELECT * FROM {} LIMIT 0", quote_ident(object, QuoteStyle::Bracket));
        let stmt = self.conn.prepare(&sql).map_err(engine(Some(&sql)))?;
        Ok(stmt.column_names().into_iter().map(str::to_string).collect())
    }

    fn objects(&mut self) -> Result<Vec<KernelObject>, KernelError> {
        let mut stmt = self
            .conn
            .prepare(
                "SELECT name, type FROM sqlite_master WHERE type IN ('table', 'view') \
                 AND name NOT LIKE 'sqlite_%' ORDER BY rowid",
            )
            .map_err(engine(None))?;
        let rows = stmt
            .query_map([], |r| {
                let name: String = r.get(0)?;
                let kind: String = r.get(1)?;
                Ok(KernelObject { name, kind: if kind == "view" { ObjectKind::View } else { ObjectKind::Table } })
            })
            .map_err(engine(None))?;
        rows.collect::<Result<Vec<_>, _>>().map_err(engine(None))
    }

    fn in_transaction(&self) -> bool {
        !self.conn.is_autocommit()
    }

    fn begin(&mut self) -> Result<(), KernelError> {
        if self.in_transaction() {
            return Err(KernelError::NestedTransaction);
        }
        // Foreign keys are checked at commit so base tables can be rebuilt in place.
        self.conn.execute_batch("BEGIN; PRAGMA defer_foreign_keys = ON;").map_err(engine(None))
    }

    fn commit(&mut self) -> Result<(), KernelError> {
        if !self.in_transaction() {
            return Err(KernelError::NoTransaction);
        }
        self.conn.execute_batch("COMMIT").map_err(engine(None))
    }

    fn rollback(&mut self) -> Result<(), KernelError> {
        if !self.in_transaction() {
            return Err(KernelError::NoTransaction);
        }
        self.conn.execute_batch("ROLLBACK").map_err(engine(None))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::within_transaction;

    fn kernel() -> SqliteKernel {
        SqliteKernel::open_in_memory().unwrap()
    }

    #[test]
    fn select_one() {
        let mut k = kernel();
        let rs = k.query("SELECT 1").unwrap();
        assert_eq!(rs.rows, vec![vec![Value::Integer(1)]]);
        assert_eq!(rs.columns.len(), 1);
    }

    #[test]
    fn malformed_sql_is_a_kernel_error() {
        let mut k = kernel();
        let err = k.execute("SELEC 1").unwrap_err();
        assert!(matches!(err, KernelError::Engine { .. }));
        assert_eq!(err.sql(), Some("SELEC 1"));
    }

    #[test]
    fn capabilities_are_probed_without_leftovers() {
        let mut k = kernel();
        let caps = k.capabilities();
        assert!(caps.left_join && caps.scalar_subquery && caps.string_aggregation && caps.conditional);
        assert!(k.objects().unwrap().is_empty());
    }

    #[test]
    fn int_floors_and_passes_null() {
        let mut k = kernel();
        let rs = k.query("SELECT INT(13.99), INT(-0.5), INT(NULL), INT(1300 / 100)").unwrap();
        assert_eq!(rs.rows[0], vec![Value::Integer(13), Value::Integer(-1), Value::Null, Value::Integer(13)]);
    }

    #[test]
    fn round_is_half_away_from_zero() {
        let mut k = kernel();
        let rs = k.query("SELECT ROUND(2.25, 1), ROUND(-2.5), ROUND(12 / 2.1, 1), ROUND(12 / 2.1, 1) / 1000").unwrap();
        assert_eq!(rs.rows[0], vec![Value::Real(2.3), Value::Real(-3.0), Value::Real(5.7), Value::Real(0.0057)]);
    }

    #[test]
    fn list_aggregate_orders_and_nulls() {
        let mut k = kernel();
        k.execute("CREATE TABLE t (g INTEGER, a TEXT, b INTEGER)").unwrap();
        k.execute("INSERT INTO t VALUES (1, 'S1', 100), (1, 'S2', 300), (2, NULL, NULL)").unwrap();
        let rs = k.query("SELECT g, LIST(a, b ORDER BY b DESC) FROM t GROUP BY g ORDER BY g").unwrap();
        assert_eq!(rs.rows[0][1], Value::Text("S2, 300; S1, 100".into()));
        assert_eq!(rs.rows[1][1], Value::Null);
        let rs = k.query("SELECT LIST(a) FROM t WHERE g = 9").unwrap();
        assert_eq!(rs.rows[0][0], Value::Null);
    }

    #[test]
    fn introspect_reports_view_columns_in_order() {
        let mut k = kernel();
        k.execute("CREATE TABLE [SP_B] ([S#] TEXT, [P#] TEXT, QTY INTEGER)").unwrap();
        k.execute("CREATE VIEW SP AS SELECT SP_B.*, QTY * 2 AS Q2 FROM SP_B").unwrap();
        assert_eq!(k.introspect("SP").unwrap(), ["S#", "P#", "QTY", "Q2"]);
        assert!(matches!(k.introspect("nope"), Err(KernelError::UnknownObject(_))));
    }

    #[test]
    fn failed_work_rolls_back_everything() {
        let mut k = kernel();
        let res: Result<(), KernelError> = within_transaction(&mut k, |k| {
            k.execute("CREATE TABLE a (x INTEGER)")?;
            k.execute("CREATE VIEW b AS SELECT x FROM a")?;
            // Views are only validated when read.
            k.execute("CREATE VIEW c AS SELECT y FROM a")?;
            k.query("SELECT * FROM c LIMIT 0")?;
            Ok(())
        });
        assert!(res.is_err());
        assert!(k.objects().unwrap().is_empty());
        assert!(!k.in_transaction());
    }

    #[test]
    fn empty_work_commits() {
        let mut k = kernel();
        let res: Result<u8, KernelError> = within_transaction(&mut k, |_| Ok(7));
        assert_eq!(res.unwrap(), 7);
    }

    #[test]
    fn nested_transactions_are_refused() {
        let mut k = kernel();
        k.begin().unwrap();
        let res: Result<(), KernelError> = within_transaction(&mut k, |_| Ok(()));
        assert!(matches!(res, Err(KernelError::NestedTransaction)));
        k.rollback().unwrap();
    }

    #[test]
    fn null_is_distinct_from_empty_and_zero() {
        let mut k = kernel();
        let rs = k.query("SELECT NULL, '', 0").unwrap();
        assert_eq!(rs.rows[0], vec![Value::Null, Value::Text(String::new()), Value::Integer(0)]);
        assert_ne!(rs.rows[0][0], rs.rows[0][1]);
    }
}
