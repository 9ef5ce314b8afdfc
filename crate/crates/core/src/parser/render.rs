//! AST to SQL text.

use std::fmt::Write;

use thiserror::Error;

use super::ast::*;
use super::grammar::is_reserved;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuoteStyle {
    /// `[S#]`
    Bracket,
    /// `"S#"`
    DoubleQuote,
    /// `` `S#` ``
    Backtick,
}

/// Target dialect for rendering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dialect {
    pub quote: QuoteStyle,
    /// When false, SIR-only constructs are rejected.
    pub allow_sir: bool,
}

impl Dialect {
    pub const fn kernel(quote: QuoteStyle) -> Self {
        Dialect { quote, allow_sir: false }
    }

    pub const fn sirsql() -> Self {
        Dialect { quote: QuoteStyle::Bracket, allow_sir: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("cannot render {0} for the kernel; it must be compiled away first")]
    UnrenderableNode(&'static str),
}

type RResult = Result<(), RenderError>;

/// Kernel keywords that are legal sirsql identifiers but still need quoting.
const KERNEL_KEYWORDS: &[&str] = &[
    "ABORT", "ACTION", "ADD", "ALL", "ANALYZE", "ATTACH", "AUTOINCREMENT", "BEGIN", "CHECK", "COLLATE", "COLUMN",
    "COMMIT", "CONFLICT", "CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "DEFAULT", "DEFERRABLE", "DEFERRED",
    "DETACH", "EACH", "ESCAPE", "EXCEPT", "EXCLUSIVE", "EXPLAIN", "FAIL", "FOR", "FULL", "GLOB", "IF", "IGNORE",
    "IMMEDIATE", "INDEXED", "INITIALLY", "INSTEAD", "INTERSECT", "ISNULL", "KEY", "MATCH", "NATURAL", "NO", "NOTNULL",
    "OF", "OFFSET", "PLAN", "PRAGMA", "QUERY", "RAISE", "RECURSIVE", "REGEXP", "REINDEX", "RELEASE", "RENAME",
    "REPLACE", "RESTRICT", "ROLLBACK", "ROW", "SAVEPOINT", "TEMP", "TEMPORARY", "TO", "TRANSACTION", "TRIGGER", "USING",
    "VACUUM", "VIRTUAL", "WITH", "WITHOUT",
];

pub fn quote_ident(name: &str, style: QuoteStyle) -> String {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_reserved(name)
        && !KERNEL_KEYWORDS.iter().any(|k| k.eq_ignore_ascii_case(name));
    if plain {
        return name.to_string();
    }
    match style {
        QuoteStyle::Bracket if !name.contains(']') => format!("[{name}]"),
        QuoteStyle::Backtick => format!("`{}`", name.replace('`', "``")),
        _ => format!("\"{}\"", name.replace('"', "\"\"")),
    }
}

pub fn render_statement(stmt: &Statement, dialect: &Dialect) -> Result<String, RenderError> {
    let mut r = Renderer { out: String::new(), d: *dialect };
    r.statement(stmt)?;
    Ok(r.out)
}

pub fn render_query(query: &Query, dialect: &Dialect) -> Result<String, RenderError> {
    let mut r = Renderer { out: String::new(), d: *dialect };
    r.query(query)?;
    Ok(r.out)
}

pub fn render_expr(expr: &Expr, dialect: &Dialect) -> Result<String, RenderError> {
    let mut r = Renderer { out: String::new(), d: *dialect };
    r.expr(expr)?;
    Ok(r.out)
}

pub fn render_ie(ie: &IeDecl, dialect: &Dialect) -> Result<String, RenderError> {
    let mut r = Renderer { out: String::new(), d: *dialect };
    r.ie(ie)?;
    Ok(r.out)
}

pub fn render_select_item(item: &SelectItem, dialect: &Dialect) -> Result<String, RenderError> {
    let mut r = Renderer { out: String::new(), d: *dialect };
    r.select_item(item)?;
    Ok(r.out)
}

/// Binding strength used to decide where parentheses are required.
fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op: BinaryOp::Or, .. } => 1,
        Expr::Binary { op: BinaryOp::And, .. } => 2,
        Expr::Unary { op: UnaryOp::Not, .. } => 3,
        Expr::Binary { op, .. } if op.is_comparison() => 4,
        Expr::IsNull { .. } | Expr::Like { .. } | Expr::Between { .. } | Expr::InList { .. } | Expr::InSubquery { .. } => 4,
        Expr::Binary { op: BinaryOp::Add | BinaryOp::Sub | BinaryOp::Concat, .. } => 5,
        Expr::Binary { .. } => 6,
        Expr::Unary { .. } => 7,
        _ => 8,
    }
}

fn binary_precedence(op: BinaryOp) -> u8 {
    match op {
        BinaryOp::Or => 1,
        BinaryOp::And => 2,
        op if op.is_comparison() => 4,
        BinaryOp::Add | BinaryOp::Sub | BinaryOp::Concat => 5,
        _ => 6,
    }
}

struct Renderer {
    out: String,
    d: Dialect,
}

impl Renderer {
    fn push(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn ident(&mut self, id: &Ident) {
        let q = quote_ident(&id.value, self.d.quote);
        self.out.push_str(&q);
    }

    fn ident_list(&mut self, ids: &[Ident]) {
        for (i, id) in ids.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.ident(id);
        }
    }

    fn column(&mut self, c: &ColumnRef) {
        if let Some(q) = &c.qualifier {
            self.ident(q);
            self.push(".");
        }
        self.ident(&c.name);
    }

    fn statement(&mut self, stmt: &Statement) -> RResult {
        match stmt {
            Statement::Query(q) => self.query(q),
            Statement::CreateTable(c) => self.create_table(c),
            Statement::CreateView(v) => {
                self.push("CREATE VIEW ");
                self.ident(&v.name);
                if !v.columns.is_empty() {
                    self.push(" (");
                    self.ident_list(&v.columns);
                    self.push(")");
                }
                self.push(" AS ");
                self.query(&v.query)
            }
            Statement::AlterTable(a) => self.alter_table(a),
            Statement::DropTable(d) => self.drop("TABLE", d),
            Statement::DropView(d) => self.drop("VIEW", d),
            Statement::CreateIndex(i) => {
                self.push(if i.unique { "CREATE UNIQUE INDEX " } else { "CREATE INDEX " });
                self.ident(&i.name);
                self.push(" ON ");
                self.ident(&i.table);
                self.push(" (");
                self.ident_list(&i.columns);
                self.push(")");
                Ok(())
            }
            Statement::Insert(ins) => {
                self.push("INSERT INTO ");
                self.ident(&ins.table);
                if !ins.columns.is_empty() {
                    self.push(" (");
                    self.ident_list(&ins.columns);
                    self.push(")");
                }
                match &ins.source {
                    InsertSource::Values(rows) => {
                        self.push(" VALUES ");
                        for (i, row) in rows.iter().enumerate() {
                            if i > 0 {
                                self.push(", ");
                            }
                            self.push("(");
                            self.expr_list(row)?;
                            self.push(")");
                        }
                        Ok(())
                    }
                    InsertSource::Query(q) => {
                        self.push(" ");
                        self.query(q)
                    }
                }
            }
            Statement::Update(u) => {
                self.push("UPDATE ");
                self.ident(&u.table);
                self.push(" SET ");
                for (i, a) in u.assignments.iter().enumerate() {
                    if i > 0 {
                        self.push(", ");
                    }
                    self.ident(&a.column);
                    self.push(" = ");
                    self.expr(&a.value)?;
                }
                if let Some(w) = &u.selection {
                    self.push(" WHERE ");
                    self.expr(w)?;
                }
                Ok(())
            }
            Statement::Delete(d) => {
                self.push("DELETE FROM ");
                self.ident(&d.table);
                if let Some(w) = &d.selection {
                    self.push(" WHERE ");
                    self.expr(w)?;
                }
                Ok(())
            }
        }
    }

    fn drop(&mut self, what: &str, d: &DropStmt) -> RResult {
        write!(self.out, "DROP {what} ").unwrap();
        if d.if_exists {
            self.push("IF EXISTS ");
        }
        self.ident(&d.name);
        if self.d.allow_sir {
            match d.behavior {
                Some(DropBehavior::Cascade) => self.push(" CASCADE"),
                Some(DropBehavior::Restrict) => self.push(" RESTRICT"),
                None => {}
            }
        }
        Ok(())
    }

    fn create_table(&mut self, c: &CreateTable) -> RResult {
        self.push("CREATE TABLE ");
        self.ident(&c.name);
        self.push(" (");
        for (i, el) in c.elements.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            match el {
                TableElement::Attribute(a) => self.attribute(a),
                TableElement::Ie(ie) => self.ie(ie)?,
                TableElement::Constraint(tc) => self.constraint(tc),
            }
        }
        self.push(")");
        Ok(())
    }

    pub fn attribute(&mut self, a: &AttributeDecl) {
        self.ident(&a.name);
        if let Some(t) = &a.sql_type {
            self.push(" ");
            self.push(t);
        }
        if a.is_primary_key {
            self.push(" PRIMARY KEY");
        }
        if a.not_null {
            self.push(" NOT NULL");
        }
        if a.unique {
            self.push(" UNIQUE");
        }
        if let Some(r) = &a.references {
            self.references(r);
        }
    }

    fn references(&mut self, r: &ForeignRef) {
        self.push(" REFERENCES ");
        self.ident(&r.table);
        if !r.columns.is_empty() {
            self.push(" (");
            self.ident_list(&r.columns);
            self.push(")");
        }
    }

    fn constraint(&mut self, tc: &TableConstraint) {
        match tc {
            TableConstraint::PrimaryKey(cols) => {
                self.push("PRIMARY KEY (");
                self.ident_list(cols);
                self.push(")");
            }
            TableConstraint::Unique(cols) => {
                self.push("UNIQUE (");
                self.ident_list(cols);
                self.push(")");
            }
            TableConstraint::ForeignKey { columns, references } => {
                self.push("FOREIGN KEY (");
                self.ident_list(columns);
                self.push(")");
                self.references(references);
            }
        }
    }

    fn ie(&mut self, ie: &IeDecl) -> RResult {
        if !self.d.allow_sir {
            return Err(RenderError::UnrenderableNode("an inheritance expression"));
        }
        match &ie.form {
            IeForm::Select(q) => {
                if let Some(n) = &ie.name {
                    self.ident(n);
                    self.push(" ");
                }
                self.push("(");
                self.query(q)?;
                self.push(")");
            }
            IeForm::Value(items) => {
                if let (Some(n), [only]) = (&ie.name, items.as_slice()) {
                    if &only.alias == n {
                        self.ident(n);
                        self.push(" AS (");
                        self.expr(&only.expr)?;
                        self.push(")");
                        return Ok(());
                    }
                }
                if let Some(n) = &ie.name {
                    self.ident(n);
                    self.push(" ");
                }
                self.push("(");
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        self.push(", ");
                    }
                    self.expr(&item.expr)?;
                    self.push(" AS ");
                    self.ident(&item.alias);
                }
                self.push(")");
            }
        }
        Ok(())
    }

    fn alter_table(&mut self, a: &AlterTable) -> RResult {
        self.push("ALTER TABLE ");
        self.ident(&a.name);
        for (i, action) in a.actions.iter().enumerate() {
            self.push(if i > 0 { ", " } else { " " });
            match action {
                AlterAction::Add { position, elements } => {
                    self.push("ADD ");
                    match position {
                        Some(Position::Before(p)) => {
                            self.push("BEFORE ");
                            self.ident(p);
                            self.push(" ");
                        }
                        Some(Position::After(p)) => {
                            self.push("AFTER ");
                            self.ident(p);
                            self.push(" ");
                        }
                        None => {}
                    }
                    for (j, el) in elements.iter().enumerate() {
                        if j > 0 {
                            self.push(", ");
                        }
                        match el {
                            NewElement::Attribute(attr) => self.attribute(attr),
                            NewElement::Ie(ie) => self.ie(ie)?,
                        }
                    }
                }
                AlterAction::Drop { name } => {
                    self.push("DROP ");
                    self.ident(name);
                }
                AlterAction::Alter { target, replacement } => {
                    self.push("ALTER ");
                    self.ident(target);
                    self.push(" AS ");
                    self.ie(replacement)?;
                }
            }
        }
        Ok(())
    }

    pub fn query(&mut self, q: &Query) -> RResult {
        let s = &q.select;
        if s.items.is_empty() {
            return Err(RenderError::UnrenderableNode("an empty select list"));
        }
        self.push("SELECT ");
        if s.distinct {
            self.push("DISTINCT ");
        }
        for (i, item) in s.items.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.select_item(item)?;
        }
        if !s.from.is_empty() {
            self.push(" FROM ");
            for (i, t) in s.from.iter().enumerate() {
                if i > 0 {
                    self.push(", ");
                }
                self.table_ref(t)?;
            }
        }
        if let Some(w) = &s.selection {
            self.push(" WHERE ");
            self.expr(w)?;
        }
        if !s.group_by.is_empty() {
            self.push(" GROUP BY ");
            self.expr_list(&s.group_by)?;
        }
        if let Some(h) = &s.having {
            self.push(" HAVING ");
            self.expr(h)?;
        }
        self.order_by(&q.order_by)?;
        if let Some(n) = q.limit {
            write!(self.out, " LIMIT {n}").unwrap();
        }
        Ok(())
    }

    fn order_by(&mut self, items: &[OrderItem]) -> RResult {
        if items.is_empty() {
            return Ok(());
        }
        self.push(" ORDER BY ");
        for (i, o) in items.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.expr(&o.expr)?;
            if o.descending {
                self.push(" DESC");
            }
        }
        Ok(())
    }

    fn select_item(&mut self, item: &SelectItem) -> RResult {
        match item {
            SelectItem::Wildcard => self.push("*"),
            SelectItem::QualifiedWildcard(q) => {
                self.ident(q);
                self.push(".*");
            }
            SelectItem::StarMinus { excluded } => {
                if !self.d.allow_sir {
                    return Err(RenderError::UnrenderableNode("a star-minus select item"));
                }
                self.push("*/");
                if let [only] = excluded.as_slice() {
                    self.column(only);
                } else {
                    self.push("(");
                    for (i, c) in excluded.iter().enumerate() {
                        if i > 0 {
                            self.push(", ");
                        }
                        self.column(c);
                    }
                    self.push(")");
                }
            }
            SelectItem::Expr { expr, alias } => {
                self.expr(expr)?;
                if let Some(a) = alias {
                    self.push(" AS ");
                    self.ident(a);
                }
            }
        }
        Ok(())
    }

    fn table_ref(&mut self, t: &TableRef) -> RResult {
        match t {
            TableRef::Named { name, alias } => {
                self.ident(name);
                if let Some(a) = alias {
                    self.push(" ");
                    self.ident(a);
                }
            }
            TableRef::Derived { query, alias } => {
                self.push("(");
                self.query(query)?;
                self.push(") AS ");
                self.ident(alias);
            }
            TableRef::Join { left, kind, right, on } => {
                self.table_ref(left)?;
                self.push(match kind {
                    JoinKind::Inner => " INNER JOIN ",
                    JoinKind::Left => " LEFT JOIN ",
                    JoinKind::Right => " RIGHT JOIN ",
                    JoinKind::Cross => " CROSS JOIN ",
                });
                // A join on the right needs grouping to keep its shape.
                if matches!(**right, TableRef::Join { .. }) {
                    self.push("(");
                    self.table_ref(right)?;
                    self.push(")");
                } else {
                    self.table_ref(right)?;
                }
                if let Some(on) = on {
                    self.push(" ON ");
                    self.expr(on)?;
                }
            }
            TableRef::Nested(inner) => {
                self.push("(");
                self.table_ref(inner)?;
                self.push(")");
            }
        }
        Ok(())
    }

    fn expr_list(&mut self, list: &[Expr]) -> RResult {
        for (i, e) in list.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.expr(e)?;
        }
        Ok(())
    }

    /// Renders `e`, parenthesized when it binds looser than `min`.
    fn operand(&mut self, e: &Expr, min: u8) -> RResult {
        if precedence(e) < min {
            self.push("(");
            self.expr(e)?;
            self.push(")");
            Ok(())
        } else {
            self.expr(e)
        }
    }

    pub fn expr(&mut self, e: &Expr) -> RResult {
        match e {
            Expr::Column(c) => self.column(c),
            Expr::Literal(Literal::Number(n)) => self.push(n),
            Expr::Literal(Literal::String(s)) => {
                self.push("'");
                self.push(&s.replace('\'', "''"));
                self.push("'");
            }
            Expr::Literal(Literal::Null) => self.push("NULL"),
            Expr::Unary { op, expr } => match op {
                UnaryOp::Not => {
                    self.push("NOT ");
                    self.operand(expr, 3)?;
                }
                UnaryOp::Neg | UnaryOp::Plus => {
                    self.push(if *op == UnaryOp::Neg { "-" } else { "+" });
                    // `- -x` must not collapse into a comment marker.
                    if matches!(**expr, Expr::Unary { .. }) || matches!(**expr, Expr::Literal(Literal::Number(ref n)) if n.starts_with('-')) {
                        self.push("(");
                        self.expr(expr)?;
                        self.push(")");
                    } else {
                        self.operand(expr, 7)?;
                    }
                }
            },
            Expr::Binary { left, op, right } => {
                let p = binary_precedence(*op);
                let left_min = if op.is_comparison() { p + 1 } else { p };
                self.operand(left, left_min)?;
                self.push(" ");
                self.push(op.symbol());
                self.push(" ");
                self.operand(right, p + 1)?;
            }
            Expr::IsNull { expr, negated } => {
                self.operand(expr, 5)?;
                self.push(if *negated { " IS NOT NULL" } else { " IS NULL" });
            }
            Expr::Like { expr, pattern, negated } => {
                self.operand(expr, 5)?;
                self.push(if *negated { " NOT LIKE " } else { " LIKE " });
                self.operand(pattern, 5)?;
            }
            Expr::Between { expr, low, high, negated } => {
                self.operand(expr, 5)?;
                self.push(if *negated { " NOT BETWEEN " } else { " BETWEEN " });
                self.operand(low, 5)?;
                self.push(" AND ");
                self.operand(high, 5)?;
            }
            Expr::InList { expr, list, negated } => {
                self.operand(expr, 5)?;
                self.push(if *negated { " NOT IN (" } else { " IN (" });
                self.expr_list(list)?;
                self.push(")");
            }
            Expr::InSubquery { expr, query, negated } => {
                self.operand(expr, 5)?;
                self.push(if *negated { " NOT IN (" } else { " IN (" });
                self.query(query)?;
                self.push(")");
            }
            Expr::Function { name, args, distinct, star, order_by } => {
                self.push(&name.value);
                self.push("(");
                if *star {
                    self.push("*");
                } else {
                    if *distinct {
                        self.push("DISTINCT ");
                    }
                    self.expr_list(args)?;
                }
                self.order_by(order_by)?;
                self.push(")");
            }
            Expr::Case { operand, branches, else_result } => {
                self.push("CASE");
                if let Some(o) = operand {
                    self.push(" ");
                    self.expr(o)?;
                }
                for (cond, result) in branches {
                    self.push(" WHEN ");
                    self.expr(cond)?;
                    self.push(" THEN ");
                    self.expr(result)?;
                }
                if let Some(e) = else_result {
                    self.push(" ELSE ");
                    self.expr(e)?;
                }
                self.push(" END");
            }
            Expr::Cast { expr, type_name } => {
                self.push("CAST(");
                self.expr(expr)?;
                self.push(" AS ");
                self.push(type_name);
                self.push(")");
            }
            Expr::Exists(q) => {
                self.push("EXISTS (");
                self.query(q)?;
                self.push(")");
            }
            Expr::Subquery(q) => {
                self.push("(");
                self.query(q)?;
                self.push(")");
            }
            Expr::Nested(inner) => {
                self.push("(");
                self.expr(inner)?;
                self.push(")");
            }
        }
        Ok(())
    }
}
