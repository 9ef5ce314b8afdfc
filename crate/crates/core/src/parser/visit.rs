//! Mutable AST traversal plus a few read-only helpers built on it.

use super::ast::*;

/// Override the hooks of interest; the `walk_*` functions recurse.
pub trait VisitMut {
    fn query(&mut self, q: &mut Query) {
        walk_query(self, q);
    }

    fn table_ref(&mut self, t: &mut TableRef) {
        walk_table_ref(self, t);
    }

    fn expr(&mut self, e: &mut Expr) {
        walk_expr(self, e);
    }

    fn column(&mut self, _c: &mut ColumnRef) {}

    /// A relation named in a FROM clause, and its alias.
    fn relation(&mut self, _name: &mut Ident, _alias: &mut Option<Ident>) {}

    /// The qualifier of `T.*`.
    fn wildcard_qualifier(&mut self, _q: &mut Ident) {}
}

pub fn walk_query<V: VisitMut + ?Sized>(v: &mut V, q: &mut Query) {
    let s = &mut q.select;
    for t in &mut s.from {
        v.table_ref(t);
    }
    for item in &mut s.items {
        match item {
            SelectItem::Expr { expr, .. } => v.expr(expr),
            SelectItem::QualifiedWildcard(qual) => v.wildcard_qualifier(qual),
            SelectItem::StarMinus { excluded } => {
                for c in excluded {
                    v.column(c);
                }
            }
            SelectItem::Wildcard => {}
        }
    }
    if let Some(w) = &mut s.selection {
        v.expr(w);
    }
    for g in &mut s.group_by {
        v.expr(g);
    }
    if let Some(h) = &mut s.having {
        v.expr(h);
    }
    for o in &mut q.order_by {
        v.expr(&mut o.expr);
    }
}

pub fn walk_table_ref<V: VisitMut + ?Sized>(v: &mut V, t: &mut TableRef) {
    match t {
        TableRef::Named { name, alias } => v.relation(name, alias),
        TableRef::Derived { query, .. } => v.query(query),
        TableRef::Join { left, right, on, .. } => {
            v.table_ref(left);
            v.table_ref(right);
            if let Some(on) = on {
                v.expr(on);
            }
        }
        TableRef::Nested(inner) => v.table_ref(inner),
    }
}

pub fn walk_expr<V: VisitMut + ?Sized>(v: &mut V, e: &mut Expr) {
    match e {
        Expr::Column(c) => v.column(c),
        Expr::Literal(_) => {}
        Expr::Unary { expr, .. } | Expr::Nested(expr) | Expr::Cast { expr, .. } => v.expr(expr),
        Expr::IsNull { expr, .. } => v.expr(expr),
        Expr::Binary { left, right, .. } => {
            v.expr(left);
            v.expr(right);
        }
        Expr::Like { expr, pattern, .. } => {
            v.expr(expr);
            v.expr(pattern);
        }
        Expr::Between { expr, low, high, .. } => {
            v.expr(expr);
            v.expr(low);
            v.expr(high);
        }
        Expr::InList { expr, list, .. } => {
            v.expr(expr);
            for item in list {
                v.expr(item);
            }
        }
        Expr::InSubquery { expr, query, .. } => {
            v.expr(expr);
            v.query(query);
        }
        Expr::Function { args, order_by, .. } => {
            for a in args {
                v.expr(a);
            }
            for o in order_by {
                v.expr(&mut o.expr);
            }
        }
        Expr::Case { operand, branches, else_result } => {
            if let Some(o) = operand {
                v.expr(o);
            }
            for (c, r) in branches {
                v.expr(c);
                v.expr(r);
            }
            if let Some(e) = else_result {
                v.expr(e);
            }
        }
        Expr::Exists(q) | Expr::Subquery(q) => v.query(q),
    }
}

/// Every relation named in a FROM clause, at any depth, first occurrence order.
pub fn referenced_relations(q: &Query) -> Vec<Ident> {
    struct Collect(Vec<Ident>);
    impl VisitMut for Collect {
        fn relation(&mut self, name: &mut Ident, _alias: &mut Option<Ident>) {
            if !self.0.contains(name) {
                self.0.push(name.clone());
            }
        }
    }
    let mut c = Collect(Vec::new());
    c.query(&mut q.clone());
    c.0
}

/// Relations named anywhere inside an expression.
pub fn expr_relations(e: &Expr) -> Vec<Ident> {
    struct Collect(Vec<Ident>);
    impl VisitMut for Collect {
        fn relation(&mut self, name: &mut Ident, _alias: &mut Option<Ident>) {
            if !self.0.contains(name) {
                self.0.push(name.clone());
            }
        }
    }
    let mut c = Collect(Vec::new());
    c.expr(&mut e.clone());
    c.0
}

/// Every column reference in an expression, subqueries included.
pub fn expr_columns(e: &Expr) -> Vec<ColumnRef> {
    struct Collect(Vec<ColumnRef>);
    impl VisitMut for Collect {
        fn column(&mut self, c: &mut ColumnRef) {
            self.0.push(c.clone());
        }
    }
    let mut c = Collect(Vec::new());
    c.expr(&mut e.clone());
    c.0
}

/// Column references of an expression outside any nested query.
pub fn shallow_columns(e: &Expr) -> Vec<ColumnRef> {
    struct Collect(Vec<ColumnRef>);
    impl VisitMut for Collect {
        fn query(&mut self, _q: &mut Query) {}
        fn column(&mut self, c: &mut ColumnRef) {
            self.0.push(c.clone());
        }
    }
    let mut c = Collect(Vec::new());
    c.expr(&mut e.clone());
    c.0
}

/// True when the expression calls an aggregate at its own level.
pub fn has_aggregate(e: &Expr) -> bool {
    struct Find(bool);
    impl VisitMut for Find {
        fn query(&mut self, _q: &mut Query) {}
        fn expr(&mut self, e: &mut Expr) {
            if let Expr::Function { name, .. } = e {
                if is_aggregate_name(&name.value) {
                    self.0 = true;
                }
            }
            walk_expr(self, e);
        }
    }
    let mut f = Find(false);
    f.expr(&mut e.clone());
    f.0
}

pub fn is_aggregate_name(name: &str) -> bool {
    ["SUM", "COUNT", "AVG", "MIN", "MAX", "LIST", "GROUP_CONCAT", "TOTAL", "STRING_AGG"]
        .iter()
        .any(|a| a.eq_ignore_ascii_case(name))
}

/// Names of all functions called anywhere in the expression.
pub fn called_functions(e: &Expr) -> Vec<String> {
    struct Find(Vec<String>);
    impl VisitMut for Find {
        fn expr(&mut self, e: &mut Expr) {
            if let Expr::Function { name, .. } = e {
                self.0.push(name.value.to_ascii_uppercase());
            }
            walk_expr(self, e);
        }
    }
    let mut f = Find(Vec::new());
    f.expr(&mut e.clone());
    f.0
}

/// Renames a relation everywhere: FROM entries and column qualifiers.
pub struct RenameRelation<'a> {
    pub from: &'a Ident,
    pub to: &'a Ident,
}

impl VisitMut for RenameRelation<'_> {
    fn relation(&mut self, name: &mut Ident, _alias: &mut Option<Ident>) {
        if name == self.from {
            *name = self.to.clone();
        }
    }

    fn column(&mut self, c: &mut ColumnRef) {
        if c.qualifier.as_ref() == Some(self.from) {
            c.qualifier = Some(self.to.clone());
        }
    }

    fn wildcard_qualifier(&mut self, q: &mut Ident) {
        if q == self.from {
            *q = self.to.clone();
        }
    }
}

pub fn rename_relation_in_query(q: &mut Query, from: &Ident, to: &Ident) {
    RenameRelation { from, to }.query(q);
}

pub fn rename_relation_in_expr(e: &mut Expr, from: &Ident, to: &Ident) {
    RenameRelation { from, to }.expr(e);
}
