//! Translation of a relation scheme into kernel objects: a base table for
//! the stored attributes and a chain of views adding the IEs one stage at a time.

use super::order::order_ies;
use super::resolve::{produced, resolve, IeKind, Inline, ResolvedIe};
use super::{CompileOptions, Target};
use crate::catalog::{base_name, AttrInfo, Catalog, Element, IeInfo, PlanKind, PlanObject, RelationKind, Scheme};
use crate::error::{Error, Result};
use crate::parser::ast::*;
use crate::parser::visit::{called_functions, walk_query, VisitMut};
use crate::parser::{render_ie, render_query, render_statement, Dialect};

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledTable {
    pub kind: RelationKind,
    pub attrs: Vec<AttrInfo>,
    pub ies: Vec<IeInfo>,
    /// Base table, then views in creation order, then indexes.
    pub objects: Vec<PlanObject>,
}

/// Renames the relation to an earlier stage, leaving scopes where an alias
/// hides the relation's name alone.
struct StageRename<'a> {
    from: &'a Ident,
    to: &'a Ident,
    shadowed: usize,
}

impl StageRename<'_> {
    fn shadows(&self, t: &TableRef) -> bool {
        match t {
            TableRef::Named { name, alias } => name != self.from && alias.as_ref() == Some(self.from),
            TableRef::Derived { alias, .. } => alias == self.from,
            TableRef::Join { left, right, .. } => self.shadows(left) || self.shadows(right),
            TableRef::Nested(inner) => self.shadows(inner),
        }
    }
}

impl VisitMut for StageRename<'_> {
    fn query(&mut self, q: &mut Query) {
        let shadow = q.select.from.iter().any(|t| self.shadows(t));
        self.shadowed += shadow as usize;
        walk_query(self, q);
        self.shadowed -= shadow as usize;
    }

    fn relation(&mut self, name: &mut Ident, _alias: &mut Option<Ident>) {
        if name == self.from {
            *name = self.to.clone();
        }
    }

    fn column(&mut self, c: &mut ColumnRef) {
        if self.shadowed == 0 && c.qualifier.as_ref() == Some(self.from) {
            c.qualifier = Some(self.to.clone());
        }
    }

    fn wildcard_qualifier(&mut self, q: &mut Ident) {
        if self.shadowed == 0 && q == self.from {
            *q = self.to.clone();
        }
    }
}

pub(crate) fn rename_stage(q: &mut Query, from: &Ident, to: &Ident) {
    StageRename { from, to, shadowed: 0 }.query(q);
}

fn item(ne: &NamedExpr) -> SelectItem {
    let alias = match &ne.expr {
        Expr::Column(c) if c.name == ne.alias => None,
        _ => Some(ne.alias.clone()),
    };
    SelectItem::Expr { expr: ne.expr.clone(), alias }
}

fn column_item(qualifier: &Ident, name: &Ident) -> SelectItem {
    SelectItem::Expr { expr: Expr::Column(ColumnRef::qualified(qualifier.clone(), name.clone())), alias: None }
}

/// FROM clause of a stage, written against the relation's own name.
pub(crate) fn stage_from(rel: &Ident, ie: &ResolvedIe) -> TableRef {
    let mut t = TableRef::Named { name: rel.clone(), alias: None };
    if ie.kind == IeKind::Join {
        for (s, on) in ie.sources.iter().zip(&ie.on) {
            t = TableRef::Join {
                left: Box::new(t),
                kind: JoinKind::Left,
                right: Box::new(TableRef::Named { name: s.relation.clone(), alias: s.alias.clone() }),
                on: Expr::and_all(on.clone()),
            };
        }
    }
    t
}

pub(crate) fn query_of(items: Vec<SelectItem>, from: TableRef) -> Query {
    Query { select: Select { items, from: vec![from], ..Select::default() }, ..Query::default() }
}

/// The IE as the query it stands for, over the relation itself.
fn canonical(rel: &Ident, ie: &ResolvedIe) -> Query {
    query_of(ie.items.iter().map(item).collect(), stage_from(rel, ie))
}

struct Stage {
    /// The IE whose FROM clause the stage uses (its first member).
    lead: usize,
    members: Vec<usize>,
    items: Vec<NamedExpr>,
}

impl Stage {
    fn produces(&self) -> Vec<Ident> {
        self.items.iter().map(|i| i.alias.clone()).collect()
    }
}

/// Groups IEs into stages. Consecutive value IEs share one stage when asked,
/// with earlier outputs inlined into later expressions.
fn stages(rel: &Ident, resolved: &[ResolvedIe], order: &[usize], attrs: &[Ident], catalog: &Catalog, collapse: bool) -> Vec<Stage> {
    let mut out: Vec<Stage> = Vec::new();
    for &i in order {
        let ie = &resolved[i];
        if collapse && ie.kind == IeKind::Value {
            if let Some(last) = out.last_mut().filter(|s| resolved[s.lead].kind == IeKind::Value) {
                let inlined: Vec<NamedExpr> = ie
                    .items
                    .iter()
                    .map(|ne| {
                        let mut e = ne.expr.clone();
                        Inline { rel, with: &last.items }.expr(&mut e);
                        NamedExpr { expr: e, alias: ne.alias.clone() }
                    })
                    .collect();
                let group = last.produces();
                let still_reads = inlined
                    .iter()
                    .flat_map(|ne| super::resolve::reads_in_expr(&ne.expr, rel, attrs, catalog))
                    .any(|r| group.contains(&r));
                if !still_reads {
                    last.members.push(i);
                    last.items.extend(inlined);
                    continue;
                }
            }
        }
        out.push(Stage { lead: i, members: vec![i], items: ie.items.clone() });
    }
    out
}

fn check_capabilities(ie: &ResolvedIe, decl: &IeDecl, target: &Target) -> Result<()> {
    let missing = |capability: &str| Error::CapabilityMissing { capability: capability.into(), context: ie.name.value.clone() };
    let caps = target.caps;
    match ie.kind {
        IeKind::Join if !caps.left_join => return Err(missing("left outer join")),
        IeKind::Subquery if !caps.scalar_subquery => return Err(missing("scalar subqueries")),
        _ => {}
    }
    let mut exprs: Vec<Expr> = ie.items.iter().map(|i| i.expr.clone()).collect();
    exprs.extend(ie.on.iter().flatten().cloned());
    if let IeForm::Select(q) = &decl.form {
        exprs.extend(q.select.selection.clone());
    }
    for e in &exprs {
        let fns = called_functions(e);
        if fns.iter().any(|f| f == "LIST") && !caps.string_aggregation {
            return Err(missing("the LIST string aggregate"));
        }
        if fns.iter().any(|f| f == "IIF") && !caps.conditional {
            return Err(missing("the IIF conditional"));
        }
        if !caps.scalar_subquery && super::contains_subquery(e) {
            return Err(missing("scalar subqueries"));
        }
    }
    Ok(())
}

fn foreign_target(rel: &Ident, scheme: &Scheme, table: &Ident, columns: &[Ident], catalog: &Catalog) -> Result<Ident> {
    if table == rel {
        for c in columns {
            if scheme.stored_attr(c.as_str()).is_none() {
                return Err(Error::invariant(rel, format!("foreign key column {c} of {rel} is not stored")));
            }
        }
        return Ok(if scheme.is_sir() { base_name(rel) } else { rel.clone() });
    }
    if catalog.base_owner(table.as_str()).is_some() {
        return Ok(table.clone());
    }
    let target = catalog.get(table.as_str()).ok_or_else(|| Error::UnknownRelation(table.value.clone()))?;
    match target.kind {
        RelationKind::View => Err(Error::invariant(rel, format!("foreign key to view {table}"))),
        RelationKind::Stored => Ok(target.name.clone()),
        RelationKind::Sir => {
            let s = target.scheme().expect("SIR has a scheme");
            for c in columns {
                if s.stored_attr(c.as_str()).is_none() {
                    return Err(Error::invariant(rel, format!("foreign key to inherited attribute {table}.{c}")));
                }
            }
            Ok(base_name(&target.name))
        }
    }
}

/// CREATE TABLE for the stored attributes, foreign keys pointed at base tables.
fn base_table(scheme: &Scheme, name: &Ident, catalog: &Catalog) -> Result<CreateTable> {
    let rel = &scheme.name;
    let mut elements = Vec::new();
    for a in scheme.stored() {
        let mut a = a.clone();
        if let Some(r) = &mut a.references {
            r.table = foreign_target(rel, scheme, &r.table, &r.columns, catalog)?;
        }
        elements.push(TableElement::Attribute(a));
    }
    for c in &scheme.constraints {
        let mut c = c.clone();
        if let TableConstraint::ForeignKey { columns, references } = &mut c {
            for col in columns.iter() {
                if scheme.stored_attr(col.as_str()).is_none() {
                    return Err(Error::invariant(rel, format!("foreign key column {col} is not stored")));
                }
            }
            references.table = foreign_target(rel, scheme, &references.table, &references.columns, catalog)?;
        }
        elements.push(TableElement::Constraint(c));
    }
    Ok(CreateTable { name: name.clone(), elements })
}

fn attr_layout(scheme: &Scheme, catalog: &Catalog) -> Result<Vec<AttrInfo>> {
    let rel = &scheme.name;
    let keys = scheme.keys();
    let is_key = |n: &Ident| keys.iter().any(|k| k.contains(n));
    let mut attrs: Vec<AttrInfo> = Vec::new();
    for el in &scheme.elements {
        match el {
            Element::Stored(a) => attrs.push(AttrInfo {
                name: a.name.clone(),
                sql_type: a.sql_type.clone(),
                is_key: is_key(&a.name),
                ie: None,
            }),
            Element::Ie(ie) => {
                let name = Scheme::ie_name(ie);
                for p in produced(ie, rel, catalog)? {
                    attrs.push(AttrInfo { name: p, sql_type: None, is_key: false, ie: Some(name.clone()) });
                }
            }
        }
    }
    for (i, a) in attrs.iter().enumerate() {
        if attrs[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::invariant(rel, format!("attribute {} appears twice", a.name)));
        }
    }
    let ie_names: Vec<&Ident> = scheme.ies().map(Scheme::ie_name).collect();
    for (i, n) in ie_names.iter().enumerate() {
        if ie_names[..i].contains(n) {
            return Err(Error::invariant(rel, format!("inheritance expression {n} appears twice")));
        }
        if let Some(a) = attrs.iter().find(|a| &a.name == *n) {
            if a.ie.as_ref() != Some(n) {
                return Err(Error::invariant(rel, format!("inheritance expression {n} has the name of an attribute")));
            }
        }
    }
    for key in &keys {
        for k in key {
            match attrs.iter().find(|a| &a.name == k) {
                None => return Err(Error::UnknownColumn { relation: rel.value.clone(), column: k.value.clone() }),
                Some(a) if a.is_inherited() => {
                    return Err(Error::invariant(rel, format!("key attribute {k} must be stored")))
                }
                _ => {}
            }
        }
    }
    for (cols, _) in scheme.foreign_keys() {
        for c in cols {
            if !attrs.iter().any(|a| a.name == c) {
                return Err(Error::UnknownColumn { relation: rel.value.clone(), column: c.value.clone() });
            }
        }
    }
    Ok(attrs)
}

fn index_objects(rel: &Ident, base: &Ident, attrs: &[AttrInfo], indexes: &[CreateIndex], dialect: &Dialect) -> Result<Vec<PlanObject>> {
    let mut out = Vec::new();
    for ix in indexes {
        for c in &ix.columns {
            match attrs.iter().find(|a| &a.name == c) {
                None => return Err(Error::UnknownColumn { relation: rel.value.clone(), column: c.value.clone() }),
                Some(a) if a.is_inherited() => {
                    return Err(Error::IndexOnInheritedAttribute { relation: rel.value.clone(), attribute: c.value.clone() })
                }
                _ => {}
            }
        }
        let stmt = Statement::CreateIndex(CreateIndex { table: base.clone(), ..ix.clone() });
        out.push(PlanObject { name: ix.name.value.clone(), kind: PlanKind::Index, ddl: render_statement(&stmt, dialect)? });
    }
    Ok(out)
}

fn view(name: &Ident, query: Query, dialect: &Dialect) -> Result<PlanObject> {
    let stmt = Statement::CreateView(CreateView { name: name.clone(), columns: Vec::new(), query });
    Ok(PlanObject { name: name.value.clone(), kind: PlanKind::View, ddl: render_statement(&stmt, dialect)? })
}

/// Compiles a stored relation or SIR scheme against the catalog.
pub fn compile_table(
    scheme: &Scheme,
    indexes: &[CreateIndex],
    catalog: &Catalog,
    options: &CompileOptions,
    target: &Target,
) -> Result<CompiledTable> {
    let rel = &scheme.name;
    let dialect = Dialect::kernel(target.quote);
    let attrs = attr_layout(scheme, catalog)?;
    let sir = scheme.is_sir();
    let base = if sir { base_name(rel) } else { rel.clone() };
    let table = Statement::CreateTable(base_table(scheme, &base, catalog)?);
    let mut objects =
        vec![PlanObject { name: base.value.clone(), kind: PlanKind::Table, ddl: render_statement(&table, &dialect)? }];
    if !sir {
        objects.extend(index_objects(rel, &base, &attrs, indexes, &dialect)?);
        return Ok(CompiledTable { kind: RelationKind::Stored, attrs, ies: Vec::new(), objects });
    }
    if scheme.keys().is_empty() {
        return Err(Error::invariant(rel, "a relation with inherited attributes needs a key"));
    }

    let names: Vec<Ident> = attrs.iter().map(|a| a.name.clone()).collect();
    let decls: Vec<&IeDecl> = scheme.ies().collect();
    let resolved: Vec<ResolvedIe> = decls.iter().map(|ie| resolve(ie, scheme, &names, catalog)).collect::<Result<_>>()?;
    for (ie, decl) in resolved.iter().zip(&decls) {
        check_capabilities(ie, decl, target)?;
    }
    let stored = scheme.stored_names();
    let joining: Vec<&ResolvedIe> = resolved.iter().filter(|r| r.kind != IeKind::Value).collect();
    if !joining.is_empty() && !joining.iter().any(|r| r.join_attrs.iter().any(|a| stored.contains(a))) {
        return Err(Error::invariant(rel, "no inheritance expression joins on a stored attribute"));
    }
    let order = order_ies(rel, &resolved)?;
    let stages = stages(rel, &resolved, &order, &names, catalog, options.collapse_value_ies);

    let mut prev = base.clone();
    let mut columns = stored.clone();
    let count = stages.len();
    for (k, stage) in stages.iter().enumerate() {
        let last = k + 1 == count;
        let mut next_columns = columns.clone();
        next_columns.extend(stage.produces());
        let in_order = next_columns == names;
        let from = stage_from(rel, &resolved[stage.lead]);
        let items: Vec<SelectItem> = if last && !in_order && options.skip_redundant_full_view {
            names
                .iter()
                .map(|n| match stage.items.iter().find(|ne| &ne.alias == n) {
                    Some(ne) => item(ne),
                    None => column_item(rel, n),
                })
                .collect()
        } else {
            std::iter::once(SelectItem::QualifiedWildcard(rel.clone())).chain(stage.items.iter().map(item)).collect()
        };
        let mut q = query_of(items, from);
        rename_stage(&mut q, rel, &prev);
        let folds = last && (in_order || options.skip_redundant_full_view);
        let name = if folds { rel.clone() } else { Ident::new(format!("{}_{}", rel.value, k + 1)) };
        objects.push(view(&name, q, &dialect)?);
        prev = name;
        columns = next_columns;
    }
    if !prev.eq(rel) {
        let items = names.iter().map(|n| column_item(&prev, n)).collect();
        objects.push(view(rel, query_of(items, TableRef::Named { name: prev.clone(), alias: None }), &dialect)?);
    }
    objects.extend(index_objects(rel, &base, &attrs, indexes, &dialect)?);

    let sir_dialect = Dialect::sirsql();
    let ies = resolved
        .iter()
        .zip(&decls)
        .map(|(r, decl)| {
            Ok(IeInfo {
                name: r.name.clone(),
                source_text: render_ie(decl, &sir_dialect)?,
                canonical_text: render_query(&canonical(rel, r), &sir_dialect)?,
                produces: r.produces.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(CompiledTable { kind: RelationKind::Sir, attrs, ies, objects })
}

/// The resolved IEs of a registered SIR, for integrity checks.
pub fn resolved_ies(scheme: &Scheme, catalog: &Catalog) -> Result<Vec<ResolvedIe>> {
    let names: Vec<Ident> = attr_layout(scheme, catalog)?.into_iter().map(|a| a.name).collect();
    scheme.ies().map(|ie| resolve(ie, scheme, &names, catalog)).collect()
}
