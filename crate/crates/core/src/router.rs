//! Routing of queries and data changes. Queries and writes to stored
//! relations go to the kernel as they are; writes to an SIR land on its base
//! table, and writes to inherited attributes are refused.

use crate::catalog::{base_name, Catalog, Entry, RelationKind};
use crate::compiler::resolve::{IeKind, ResolvedIe};
use crate::compiler::{expand_query, query_of, rename_stage, resolved_ies, stage_from};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, Value};
use crate::parser::ast::*;
use crate::parser::visit::{walk_query, VisitMut};
use crate::parser::{render_query, Dialect, QuoteStyle};

#[derive(Debug, Clone, PartialEq)]
pub enum Route {
    /// Sent to the kernel as it is, star-minus items expanded.
    PassThrough(Statement),
    /// A write to an SIR, redirected to its base table.
    BaseRewrite { target: Ident, columns: Vec<Ident>, statement: Statement },
    Rejected(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedStatement {
    pub original: Statement,
    pub route: Route,
}

/// Renames qualifiers naming the relation in scopes that do not redefine it.
struct Requalify<'a> {
    from: &'a Ident,
    to: &'a Ident,
    hidden: usize,
}

impl Requalify<'_> {
    fn defines(&self, t: &TableRef) -> bool {
        match t {
            TableRef::Named { name, alias } => alias.as_ref().unwrap_or(name) == self.from,
            TableRef::Derived { alias, .. } => alias == self.from,
            TableRef::Join { left, right, .. } => self.defines(left) || self.defines(right),
            TableRef::Nested(inner) => self.defines(inner),
        }
    }
}

impl VisitMut for Requalify<'_> {
    fn query(&mut self, q: &mut Query) {
        let hide = q.select.from.iter().any(|t| self.defines(t));
        self.hidden += hide as usize;
        walk_query(self, q);
        self.hidden -= hide as usize;
    }

    fn column(&mut self, c: &mut ColumnRef) {
        if self.hidden == 0 && c.qualifier.as_ref() == Some(self.from) {
            c.qualifier = Some(self.to.clone());
        }
    }
}

fn requalify(e: &mut Expr, from: &Ident, to: &Ident) {
    Requalify { from, to, hidden: 0 }.expr(e);
}

fn expand_expr(e: &mut Expr, catalog: &Catalog) -> Result<()> {
    struct Expand<'a> {
        catalog: &'a Catalog,
        error: Option<Error>,
    }
    impl VisitMut for Expand<'_> {
        fn query(&mut self, q: &mut Query) {
            if let Err(e) = expand_query(q, self.catalog) {
                self.error.get_or_insert(e);
            }
        }
    }
    let mut v = Expand { catalog, error: None };
    v.expr(e);
    v.error.map_or(Ok(()), Err)
}

/// Relation attributes an expression reads, following SQL scoping.
fn reads(e: &Expr, entry: &Entry, catalog: &Catalog) -> Vec<Ident> {
    crate::compiler::resolve::reads_in_expr(e, &entry.name, &entry.attr_names(), catalog)
}

fn keys_of(entry: &Entry) -> Result<Vec<Ident>> {
    entry
        .scheme()
        .and_then(|s| s.keys().into_iter().next())
        .ok_or_else(|| Error::invariant(&entry.name, "no key to correlate the base table with"))
}

fn key_match(keys: &[Ident], view: &Ident, base: &Ident) -> Expr {
    let parts = keys
        .iter()
        .map(|k| {
            Expr::binary(
                Expr::Column(ColumnRef::qualified(view.clone(), k.clone())),
                BinaryOp::Eq,
                Expr::Column(ColumnRef::qualified(base.clone(), k.clone())),
            )
        })
        .collect();
    Expr::and_all(parts).expect("at least one key")
}

fn from_view(rel: &Ident) -> TableRef {
    TableRef::Named { name: rel.clone(), alias: None }
}

/// Rewrites an expression over the SIR to one over its base: through the full
/// view when it reads inherited attributes, else by renaming qualifiers.
fn onto_base(e: &Expr, entry: &Entry, catalog: &Catalog, as_predicate: bool) -> Result<Expr> {
    let rel = &entry.name;
    let base = base_name(rel);
    let inherited = reads(e, entry, catalog).iter().any(|a| entry.attr(a.as_str()).is_some_and(|x| x.is_inherited()));
    if !inherited {
        let mut out = e.clone();
        requalify(&mut out, rel, &base);
        return Ok(out);
    }
    let keys = keys_of(entry)?;
    let correlate = key_match(&keys, rel, &base);
    if as_predicate {
        let mut q = query_of(vec![SelectItem::Expr { expr: Expr::Literal(Literal::Number("1".into())), alias: None }], from_view(rel));
        q.select.selection = Expr::and_all(vec![correlate, e.clone().nested()]);
        Ok(Expr::Exists(Box::new(q)))
    } else {
        let mut q = query_of(vec![SelectItem::Expr { expr: e.clone(), alias: None }], from_view(rel));
        q.select.selection = Some(correlate);
        Ok(Expr::Subquery(Box::new(q)))
    }
}

/// Name of a select item when it is given one, explicitly or as a column.
fn item_name(item: &SelectItem) -> Option<Ident> {
    match item {
        SelectItem::Expr { alias: Some(a), .. } => Some(a.clone()),
        SelectItem::Expr { expr: Expr::Column(c), .. } => Some(c.name.clone()),
        _ => None,
    }
}

/// The IE whose source supplies a column the relation exposes under another name.
fn source_of(column: &Ident, ies: &[ResolvedIe]) -> Option<Ident> {
    ies.iter()
        .filter(|ie| ie.kind == IeKind::Join)
        .find(|ie| ie.sources.iter().any(|s| !s.is_self && s.columns.contains(column)))
        .map(|ie| ie.name.clone())
}

fn not_writable(column: &Ident, ie: &Ident) -> Route {
    Route::Rejected(format!("IA not writable: {column} is inherited through {ie}"))
}

fn route_insert(ins: &Insert, entry: &Entry, catalog: &Catalog) -> Result<Route> {
    let stored = entry.scheme().map(|s| s.stored_names()).unwrap_or_default();
    let mut out = ins.clone();
    out.table = base_name(&entry.name);
    if let InsertSource::Query(q) = &mut out.source {
        expand_query(q, catalog)?;
    }
    let check = |c: &Ident| -> Result<Option<Route>> {
        match entry.attr(c.as_str()) {
            None => Err(Error::UnknownColumn { relation: entry.name.value.clone(), column: c.value.clone() }),
            Some(a) if a.is_inherited() => Ok(Some(not_writable(c, a.ie.as_ref().unwrap()))),
            Some(_) => Ok(None),
        }
    };
    if out.columns.is_empty() {
        let (width, names): (usize, Option<Vec<Ident>>) = match &out.source {
            InsertSource::Values(rows) => (rows.first().map_or(0, Vec::len), None),
            InsertSource::Query(q) => (q.select.items.len(), q.select.items.iter().map(item_name).collect()),
        };
        match names {
            Some(names) if names.iter().all(|n| entry.attr(n.as_str()).is_some()) => {
                for n in &names {
                    if let Some(r) = check(n)? {
                        return Ok(r);
                    }
                }
                out.columns = names;
            }
            _ if width == stored.len() => out.columns = stored.clone(),
            _ if width == entry.attrs.len() => {
                return Ok(Route::Rejected("IA not writable: the row includes inherited attributes".into()))
            }
            _ => {
                return Ok(Route::Rejected(format!(
                    "{width} values for {} stored attributes of {}",
                    stored.len(),
                    entry.name
                )))
            }
        }
    } else {
        for c in &out.columns {
            if let Some(r) = check(c)? {
                return Ok(r);
            }
        }
    }
    let columns = out.columns.clone();
    Ok(Route::BaseRewrite { target: out.table.clone(), columns, statement: Statement::Insert(out) })
}

fn route_update(upd: &Update, entry: &Entry, catalog: &Catalog) -> Result<Route> {
    let ies = entry.scheme().map(|s| resolved_ies(s, catalog)).transpose()?.unwrap_or_default();
    let mut columns = Vec::new();
    for a in &upd.assignments {
        match entry.attr(a.column.as_str()) {
            Some(x) if x.is_inherited() => return Ok(not_writable(&a.column, x.ie.as_ref().unwrap())),
            Some(_) => columns.push(a.column.clone()),
            None => match source_of(&a.column, &ies) {
                Some(ie) => return Ok(not_writable(&a.column, &ie)),
                None => {
                    return Err(Error::UnknownColumn {
                        relation: entry.name.value.clone(),
                        column: a.column.value.clone(),
                    })
                }
            },
        }
    }
    let mut assignments = Vec::new();
    for a in &upd.assignments {
        let mut value = a.value.clone();
        expand_expr(&mut value, catalog)?;
        assignments.push(Assignment { column: a.column.clone(), value: onto_base(&value, entry, catalog, false)? });
    }
    let selection = where_onto_base(upd.selection.as_ref(), entry, catalog)?;
    let target = base_name(&entry.name);
    let statement = Statement::Update(Update { table: target.clone(), assignments, selection });
    Ok(Route::BaseRewrite { target, columns, statement })
}

fn where_onto_base(w: Option<&Expr>, entry: &Entry, catalog: &Catalog) -> Result<Option<Expr>> {
    w.map(|w| {
        let mut w = w.clone();
        expand_expr(&mut w, catalog)?;
        onto_base(&w, entry, catalog, true)
    })
    .transpose()
}

fn route_delete(del: &Delete, entry: &Entry, catalog: &Catalog) -> Result<Route> {
    let target = base_name(&entry.name);
    let selection = where_onto_base(del.selection.as_ref(), entry, catalog)?;
    let statement = Statement::Delete(Delete { table: target.clone(), selection });
    let columns = entry.scheme().map(|s| s.stored_names()).unwrap_or_default();
    Ok(Route::BaseRewrite { target, columns, statement })
}

fn expand_passthrough(stmt: &Statement, catalog: &Catalog) -> Result<Statement> {
    let mut s = stmt.clone();
    match &mut s {
        Statement::Query(q) => expand_query(q, catalog)?,
        Statement::Insert(i) => {
            if let InsertSource::Query(q) = &mut i.source {
                expand_query(q, catalog)?;
            }
        }
        Statement::Update(u) => {
            for a in &mut u.assignments {
                expand_expr(&mut a.value, catalog)?;
            }
            if let Some(w) = &mut u.selection {
                expand_expr(w, catalog)?;
            }
        }
        Statement::Delete(d) => {
            if let Some(w) = &mut d.selection {
                expand_expr(w, catalog)?;
            }
        }
        _ => {}
    }
    Ok(s)
}

/// Decides where a query or data change goes.
pub fn route(stmt: &Statement, catalog: &Catalog) -> Result<RoutedStatement> {
    let table = match stmt {
        Statement::Insert(i) => Some(&i.table),
        Statement::Update(u) => Some(&u.table),
        Statement::Delete(d) => Some(&d.table),
        Statement::Query(_) => None,
        _ => return Err(Error::Unsupported("schema statements are planned, not routed".into())),
    };
    let sir = table.and_then(|t| catalog.get(t.as_str())).filter(|e| e.kind == RelationKind::Sir);
    let route = match (stmt, sir) {
        (Statement::Insert(i), Some(e)) => route_insert(i, e, catalog)?,
        (Statement::Update(u), Some(e)) => route_update(u, e, catalog)?,
        (Statement::Delete(d), Some(e)) => route_delete(d, e, catalog)?,
        _ => Route::PassThrough(expand_passthrough(stmt, catalog)?),
    };
    Ok(RoutedStatement { original: stmt.clone(), route })
}

/// More than one source tuple matching a recursive join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub ie: String,
    /// Join attributes of the relation, with the values that match too much.
    pub attrs: Vec<String>,
    pub keys: Vec<Value>,
    pub count: i64,
}

/// The query counting, per distinct join-attribute combination of the
/// relation, the source tuples an IE matches.
pub fn integrity_query(rel: &Ident, ie: &ResolvedIe, quote: QuoteStyle) -> Result<Option<String>> {
    if ie.kind != IeKind::Join || ie.join_attrs.is_empty() {
        return Ok(None);
    }
    let alias = Ident::new("sir_d");
    let attrs: Vec<SelectItem> = ie
        .join_attrs
        .iter()
        .map(|a| SelectItem::Expr { expr: Expr::Column(ColumnRef::qualified(alias.clone(), a.clone())), alias: None })
        .collect();
    let mut items = attrs.clone();
    items.push(SelectItem::Expr {
        expr: Expr::Function { name: Ident::new("COUNT"), args: Vec::new(), distinct: false, star: true, order_by: Vec::new() },
        alias: Some(Ident::new("matches")),
    });
    let mut from = stage_from(rel, ie);
    set_inner(&mut from);
    let mut q = query_of(items, from);
    rename_stage(&mut q, rel, &alias);
    let distinct = Query {
        select: Select {
            distinct: true,
            items: ie.join_attrs.iter().map(|a| SelectItem::Expr { expr: Expr::Column(ColumnRef::bare(a.clone())), alias: None }).collect(),
            from: vec![from_view(rel)],
            ..Select::default()
        },
        ..Query::default()
    };
    replace_leftmost(&mut q.select.from[0], TableRef::Derived { query: Box::new(distinct), alias: alias.clone() });
    q.select.group_by = ie.join_attrs.iter().map(|a| Expr::Column(ColumnRef::qualified(alias.clone(), a.clone()))).collect();
    q.select.having = Some(Expr::binary(
        Expr::Function { name: Ident::new("COUNT"), args: Vec::new(), distinct: false, star: true, order_by: Vec::new() },
        BinaryOp::Gt,
        Expr::Literal(Literal::Number("1".into())),
    ));
    q.order_by = ie.join_attrs.iter().map(|a| OrderItem { expr: Expr::Column(ColumnRef::qualified(alias.clone(), a.clone())), descending: false }).collect();
    Ok(Some(render_query(&q, &Dialect::kernel(quote))?))
}

fn set_inner(t: &mut TableRef) {
    if let TableRef::Join { left, kind, .. } = t {
        *kind = JoinKind::Inner;
        set_inner(left);
    }
}

fn replace_leftmost(t: &mut TableRef, with: TableRef) {
    match t {
        TableRef::Join { left, .. } => replace_leftmost(left, with),
        other => *other = with,
    }
}

/// Finds join-form IEs of `rel` that match more than one source tuple.
pub fn check_ie_integrity<K: Kernel + ?Sized>(rel: &str, catalog: &Catalog, kernel: &mut K) -> Result<Vec<Violation>> {
    let entry = catalog.get(rel).ok_or_else(|| Error::UnknownRelation(rel.to_string()))?;
    let Some(scheme) = entry.scheme().filter(|_| entry.kind == RelationKind::Sir) else { return Ok(Vec::new()) };
    let mut out = Vec::new();
    for ie in resolved_ies(scheme, catalog)? {
        let Some(sql) = integrity_query(&entry.name, &ie, kernel.quote_style())? else { continue };
        let rows = kernel.query(&sql).map_err(|e| Error::from(e).with_statement(&sql))?;
        for row in rows.rows {
            let (keys, count) = row.split_at(row.len() - 1);
            let count = match count[0] {
                Value::Integer(n) => n,
                _ => 0,
            };
            out.push(Violation {
                ie: ie.name.value.clone(),
                attrs: ie.join_attrs.iter().map(|a| a.value.clone()).collect(),
                keys: keys.to_vec(),
                count,
            });
        }
    }
    Ok(out)
}

/// Keys of the base rows of an SIR, as SQL literal tuples.
pub(crate) fn base_keys<K: Kernel + ?Sized>(entry: &Entry, kernel: &mut K) -> Result<Vec<Vec<Value>>> {
    let keys = keys_of(entry)?;
    let q = kernel.quote_style();
    let cols: Vec<String> = keys.iter().map(|k| crate::parser::quote_ident(k.as_str(), q)).collect();
    let sql = format!("SELECT {} FROM {}", cols.join(", "), crate::parser::quote_ident(base_name(&entry.name).as_str(), q));
    Ok(kernel.query(&sql)?.rows)
}

/// Fails when a row inserted since `before` has an IE that found no source
/// tuple, i.e. a join-form IE whose attributes are all NULL.
pub(crate) fn enforce_insert_computability<K: Kernel + ?Sized>(
    entry: &Entry,
    catalog: &Catalog,
    before: &[Vec<Value>],
    kernel: &mut K,
) -> Result<()> {
    let Some(scheme) = entry.scheme() else { return Ok(()) };
    let ies: Vec<ResolvedIe> = resolved_ies(scheme, catalog)?.into_iter().filter(|ie| ie.kind == IeKind::Join).collect();
    if ies.is_empty() {
        return Ok(());
    }
    let keys = keys_of(entry)?;
    let q = kernel.quote_style();
    let mut cols: Vec<String> = keys.iter().map(|k| crate::parser::quote_ident(k.as_str(), q)).collect();
    for ie in &ies {
        cols.extend(ie.produces.iter().map(|a| crate::parser::quote_ident(a.as_str(), q)));
    }
    let sql = format!("SELECT {} FROM {}", cols.join(", "), crate::parser::quote_ident(entry.name.as_str(), q));
    let rows = kernel.query(&sql)?;
    for row in rows.rows {
        let (key, rest) = row.split_at(keys.len());
        if before.iter().any(|b| b.as_slice() == key) {
            continue;
        }
        let mut missing = Vec::new();
        let mut at = 0;
        for ie in &ies {
            let n = ie.produces.len();
            if rest[at..at + n].iter().all(Value::is_null) {
                missing.push(ie.name.value.clone());
            }
            at += n;
        }
        if !missing.is_empty() {
            return Err(Error::IaNotComputable {
                relation: entry.name.value.clone(),
                ies: missing,
                keys: key.iter().map(|v| v.to_string()).collect(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
