//! Abstract syntax tree for the sirsql dialect.
//!
//! The tree covers a closed subset of SQL plus the stored-and-inherited
//! extensions: inheritance expressions inside `CREATE TABLE` / `ALTER TABLE`
//! and the star-minus select item (`*/A`, `*/(A1, A2)`).

use std::fmt;
use std::hash::{Hash, Hasher};

/// An SQL identifier. Stored case-preserved, compared case-insensitively.
#[derive(Clone)]
pub struct Ident {
    pub value: String,
}

impl Ident {
    pub fn new(value: impl Into<String>) -> Self {
        Ident { value: value.into() }
    }

    pub fn as_str(&self) -> &str {
        &self.value
    }

    /// Case-folded form used for lookups.
    pub fn key(&self) -> String {
        self.value.to_ascii_lowercase()
    }

    pub fn matches(&self, other: &str) -> bool {
        self.value.eq_ignore_ascii_case(other)
    }
}

impl PartialEq for Ident {
    fn eq(&self, other: &Self) -> bool {
        self.value.eq_ignore_ascii_case(&other.value)
    }
}

impl Eq for Ident {}

impl Hash for Ident {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for b in self.value.bytes() {
            state.write_u8(b.to_ascii_lowercase());
        }
    }
}

impl fmt::Debug for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.value)
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.value)
    }
}

impl From<&str> for Ident {
    fn from(s: &str) -> Self {
        Ident::new(s)
    }
}

/// `[qualifier.]name`
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnRef {
    pub qualifier: Option<Ident>,
    pub name: Ident,
}

impl ColumnRef {
    pub fn bare(name: impl Into<Ident>) -> Self {
        ColumnRef { qualifier: None, name: name.into() }
    }

    pub fn qualified(qualifier: impl Into<Ident>, name: impl Into<Ident>) -> Self {
        ColumnRef { qualifier: Some(qualifier.into()), name: name.into() }
    }
}

impl From<String> for Ident {
    fn from(s: String) -> Self {
        Ident::new(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    /// Numeric literal kept as written so rendering is exact.
    Number(String),
    String(String),
    Null,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    And,
    Or,
}

impl BinaryOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq
        )
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Mod => "%",
            BinaryOp::Concat => "||",
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::And => "AND",
            BinaryOp::Or => "OR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Column(ColumnRef),
    Literal(Literal),
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Binary {
        left: Box<Expr>,
        op: BinaryOp,
        right: Box<Expr>,
    },
    IsNull {
        expr: Box<Expr>,
        negated: bool,
    },
    Like {
        expr: Box<Expr>,
        pattern: Box<Expr>,
        negated: bool,
    },
    Between {
        expr: Box<Expr>,
        low: Box<Expr>,
        high: Box<Expr>,
        negated: bool,
    },
    InList {
        expr: Box<Expr>,
        list: Vec<Expr>,
        negated: bool,
    },
    InSubquery {
        expr: Box<Expr>,
        query: Box<Query>,
        negated: bool,
    },
    /// Any function call, aggregates included. `COUNT(*)` has `star` set.
    /// `order_by` carries an in-call ordering (`LIST(x ORDER BY y)`).
    Function {
        name: Ident,
        args: Vec<Expr>,
        distinct: bool,
        star: bool,
        order_by: Vec<OrderItem>,
    },
    Case {
        operand: Option<Box<Expr>>,
        branches: Vec<(Expr, Expr)>,
        else_result: Option<Box<Expr>>,
    },
    Cast {
        expr: Box<Expr>,
        type_name: String,
    },
    Exists(Box<Query>),
    Subquery(Box<Query>),
    /// Parenthesized expression, kept so rendering reproduces the source grouping.
    Nested(Box<Expr>),
}

impl Expr {
    pub fn column(name: &str) -> Expr {
        Expr::Column(ColumnRef::bare(name))
    }

    pub fn qualified(qualifier: &str, name: &str) -> Expr {
        Expr::Column(ColumnRef::qualified(qualifier, name))
    }

    pub fn binary(left: Expr, op: BinaryOp, right: Expr) -> Expr {
        Expr::Binary { left: Box::new(left), op, right: Box::new(right) }
    }

    pub fn nested(self) -> Expr {
        match self {
            e @ (Expr::Nested(_) | Expr::Column(_) | Expr::Literal(_) | Expr::Function { .. }) => e,
            e => Expr::Nested(Box::new(e)),
        }
    }

    /// Splits a predicate into its top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            match e {
                Expr::Binary { left, op: BinaryOp::And, right } => {
                    walk(left, out);
                    walk(right, out);
                }
                other => out.push(other),
            }
        }
        walk(self, &mut out);
        out
    }

    /// Rebuilds a conjunction from parts; `None` for an empty list.
    pub fn and_all(parts: Vec<Expr>) -> Option<Expr> {
        parts.into_iter().reduce(|acc, e| Expr::binary(acc, BinaryOp::And, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub expr: Expr,
    pub descending: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Expr { expr: Expr, alias: Option<Ident> },
    /// `*`
    Wildcard,
    /// `T.*`
    QualifiedWildcard(Ident),
    /// `*/A` or `*/(A1, …, An)`: every source column except the listed ones.
    StarMinus { excluded: Vec<ColumnRef> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    Inner,
    Left,
    Right,
    Cross,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableRef {
    Named {
        name: Ident,
        alias: Option<Ident>,
    },
    Derived {
        query: Box<Query>,
        alias: Ident,
    },
    Join {
        left: Box<TableRef>,
        kind: JoinKind,
        right: Box<TableRef>,
        on: Option<Expr>,
    },
    /// Parenthesized join tree.
    Nested(Box<TableRef>),
}

impl TableRef {
    pub fn named(name: &str) -> Self {
        TableRef::Named { name: Ident::new(name), alias: None }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Select {
    pub distinct: bool,
    pub items: Vec<SelectItem>,
    pub from: Vec<TableRef>,
    pub selection: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub having: Option<Expr>,
}

/// A query: one SELECT block plus ordering and a row limit.
/// `TOP n` and `LIMIT n` both land in `limit`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Query {
    pub select: Select,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForeignRef {
    pub table: Ident,
    pub columns: Vec<Ident>,
}

/// A stored attribute declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeDecl {
    pub name: Ident,
    pub sql_type: Option<String>,
    pub is_primary_key: bool,
    pub not_null: bool,
    pub unique: bool,
    pub references: Option<ForeignRef>,
}

impl AttributeDecl {
    pub fn new(name: &str, sql_type: Option<&str>) -> Self {
        AttributeDecl {
            name: Ident::new(name),
            sql_type: sql_type.map(str::to_string),
            is_primary_key: false,
            not_null: false,
            unique: false,
            references: None,
        }
    }
}

/// A named value expression inside a value-form IE.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedExpr {
    pub expr: Expr,
    pub alias: Ident,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IeForm {
    /// `NAME (SELECT A FROM F' WHERE W' …)`
    Select(Box<Query>),
    /// `NAME As (expr)` or `NAME (expr As A1, …)`
    Value(Vec<NamedExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Position {
    Before(Ident),
    After(Ident),
}

/// An inheritance expression as written.
#[derive(Debug, Clone, PartialEq)]
pub struct IeDecl {
    pub name: Option<Ident>,
    pub form: IeForm,
}

impl IeDecl {
    /// The IE name, falling back to the single attribute it produces.
    pub fn effective_name(&self) -> Option<Ident> {
        if let Some(n) = &self.name {
            return Some(n.clone());
        }
        match &self.form {
            IeForm::Value(items) if items.len() == 1 => Some(items[0].alias.clone()),
            IeForm::Select(q) if q.select.items.len() == 1 => match &q.select.items[0] {
                SelectItem::Expr { alias: Some(a), .. } => Some(a.clone()),
                SelectItem::Expr { expr: Expr::Column(c), alias: None } => Some(c.name.clone()),
                _ => None,
            },
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableConstraint {
    PrimaryKey(Vec<Ident>),
    Unique(Vec<Ident>),
    ForeignKey { columns: Vec<Ident>, references: ForeignRef },
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableElement {
    Attribute(AttributeDecl),
    Ie(IeDecl),
    Constraint(TableConstraint),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateTable {
    pub name: Ident,
    pub elements: Vec<TableElement>,
}

impl CreateTable {
    pub fn ies(&self) -> impl Iterator<Item = &IeDecl> {
        self.elements.iter().filter_map(|e| match e {
            TableElement::Ie(ie) => Some(ie),
            _ => None,
        })
    }

    pub fn attributes(&self) -> impl Iterator<Item = &AttributeDecl> {
        self.elements.iter().filter_map(|e| match e {
            TableElement::Attribute(a) => Some(a),
            _ => None,
        })
    }

    /// A table with at least one IE is an SIR; otherwise a stored relation.
    pub fn is_sir(&self) -> bool {
        self.ies().next().is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateView {
    pub name: Ident,
    pub columns: Vec<Ident>,
    pub query: Query,
}

/// A new element added by `ALTER TABLE … ADD`.
#[derive(Debug, Clone, PartialEq)]
pub enum NewElement {
    Attribute(AttributeDecl),
    Ie(IeDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlterAction {
    Add { position: Option<Position>, elements: Vec<NewElement> },
    Drop { name: Ident },
    /// Replace an IE, or a stored attribute, with a new IE.
    Alter { target: Ident, replacement: IeDecl },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlterTable {
    pub name: Ident,
    pub actions: Vec<AlterAction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DropBehavior {
    #[default]
    Restrict,
    Cascade,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropStmt {
    pub name: Ident,
    pub if_exists: bool,
    pub behavior: Option<DropBehavior>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateIndex {
    pub name: Ident,
    pub unique: bool,
    pub table: Ident,
    pub columns: Vec<Ident>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InsertSource {
    Values(Vec<Vec<Expr>>),
    Query(Box<Query>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Insert {
    pub table: Ident,
    pub columns: Vec<Ident>,
    pub source: InsertSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub column: Ident,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Update {
    pub table: Ident,
    pub assignments: Vec<Assignment>,
    pub selection: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delete {
    pub table: Ident,
    pub selection: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    CreateTable(CreateTable),
    CreateView(CreateView),
    AlterTable(AlterTable),
    DropTable(DropStmt),
    DropView(DropStmt),
    CreateIndex(CreateIndex),
    Query(Query),
    Insert(Insert),
    Update(Update),
    Delete(Delete),
}

impl Statement {
    pub fn is_ddl(&self) -> bool {
        matches!(
            self,
            Statement::CreateTable(_)
                | Statement::CreateView(_)
                | Statement::AlterTable(_)
                | Statement::DropTable(_)
                | Statement::DropView(_)
                | Statement::CreateIndex(_)
        )
    }

    /// Short label for reports, e.g. `CREATE TABLE SP`.
    pub fn label(&self) -> String {
        match self {
            Statement::CreateTable(c) => format!("CREATE TABLE {}", c.name),
            Statement::CreateView(c) => format!("CREATE VIEW {}", c.name),
            Statement::AlterTable(a) => format!("ALTER TABLE {}", a.name),
            Statement::DropTable(d) => format!("DROP TABLE {}", d.name),
            Statement::DropView(d) => format!("DROP VIEW {}", d.name),
            Statement::CreateIndex(i) => format!("CREATE INDEX {}", i.name),
            Statement::Query(_) => "SELECT".to_string(),
            Statement::Insert(i) => format!("INSERT {}", i.table),
            Statement::Update(u) => format!("UPDATE {}", u.table),
            Statement::Delete(d) => format!("DELETE {}", d.table),
        }
    }
}
