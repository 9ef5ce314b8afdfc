//! Resolution of one IE against its relation and the catalog: produced
//! attributes, sources, qualified column references, attributes read.

use crate::catalog::{Catalog, Scheme};
use crate::error::{Error, Result};
use crate::parser::ast::*;
use crate::parser::visit::{has_aggregate, walk_expr, walk_query, VisitMut};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IeKind {
    /// Non-aggregate SELECT: a recursive left outer join.
    Join,
    /// Single aggregate SELECT: a correlated scalar subquery.
    Subquery,
    /// Value expressions over the relation itself.
    Value,
}

#[derive(Debug, Clone)]
pub struct Source {
    pub relation: Ident,
    pub alias: Option<Ident>,
    pub columns: Vec<Ident>,
    /// Scans the relation being defined (through an alias).
    pub is_self: bool,
}

impl Source {
    pub fn label(&self) -> &Ident {
        self.alias.as_ref().unwrap_or(&self.relation)
    }

    fn has(&self, col: &Ident) -> bool {
        self.columns.contains(col)
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedIe {
    pub name: Ident,
    pub kind: IeKind,
    pub produces: Vec<Ident>,
    /// Output expressions named by the attribute they produce, written
    /// against the relation's own name.
    pub items: Vec<NamedExpr>,
    /// Join form: sources in join order and the ON conjuncts of each.
    pub sources: Vec<Source>,
    pub on: Vec<Vec<Expr>>,
    /// Attributes of the relation this IE reads.
    pub reads: Vec<Ident>,
    /// Attributes of the relation used to correlate with sources.
    pub join_attrs: Vec<Ident>,
}

fn push_unique(v: &mut Vec<Ident>, x: &Ident) {
    if !v.contains(x) {
        v.push(x.clone());
    }
}

pub fn ie_kind(ie: &IeDecl) -> IeKind {
    match &ie.form {
        IeForm::Value(_) => IeKind::Value,
        IeForm::Select(q) => match q.select.items.as_slice() {
            [SelectItem::Expr { expr, .. }] if has_aggregate(expr) => IeKind::Subquery,
            _ => IeKind::Join,
        },
    }
}

/// FROM entries of an IE query, flattened. Unaliased self entries come back
/// with `is_self` and no alias; the caller drops them.
fn gather(q: &Query, rel: &Ident, catalog: &Catalog) -> Result<(Vec<Source>, Vec<Expr>)> {
    fn walk(t: &TableRef, rel: &Ident, catalog: &Catalog, out: &mut Vec<Source>, on: &mut Vec<Expr>) -> Result<()> {
        match t {
            TableRef::Named { name, alias } => {
                let is_self = name == rel;
                let columns = if is_self {
                    Vec::new()
                } else {
                    catalog.columns_of(name.as_str()).ok_or_else(|| Error::UnknownRelation(name.value.clone()))?
                };
                out.push(Source { relation: name.clone(), alias: alias.clone(), columns, is_self });
                Ok(())
            }
            TableRef::Nested(inner) => walk(inner, rel, catalog, out, on),
            TableRef::Join { left, kind: JoinKind::Inner | JoinKind::Cross, right, on: cond } => {
                walk(left, rel, catalog, out, on)?;
                walk(right, rel, catalog, out, on)?;
                if let Some(c) = cond {
                    on.push(c.clone());
                }
                Ok(())
            }
            TableRef::Join { .. } => Err(Error::Unsupported("outer joins inside an inheritance expression".into())),
            TableRef::Derived { .. } => Err(Error::Unsupported("derived tables inside an inheritance expression".into())),
        }
    }
    let mut out = Vec::new();
    let mut on = Vec::new();
    for t in &q.select.from {
        walk(t, rel, catalog, &mut out, &mut on)?;
    }
    Ok((out, on))
}

/// Expands `*/…` over labelled sources: every source column in order,
/// minus the excluded ones, qualified by the source label.
pub fn expand_star_minus(sources: &[(Ident, Vec<Ident>)], excluded: &[ColumnRef]) -> Result<Vec<ColumnRef>> {
    for x in excluded {
        let known = sources.iter().any(|(label, cols)| {
            x.qualifier.as_ref().is_none_or(|q| q == label) && cols.contains(&x.name)
        });
        if !known {
            let shown = match &x.qualifier {
                Some(q) => format!("{q}.{}", x.name),
                None => x.name.value.clone(),
            };
            return Err(Error::UnknownExcludedColumn(shown));
        }
    }
    let mut out = Vec::new();
    for (label, cols) in sources {
        for c in cols {
            let dropped = excluded.iter().any(|x| &x.name == c && x.qualifier.as_ref().is_none_or(|q| q == label));
            if !dropped {
                out.push(ColumnRef::qualified(label.clone(), c.clone()));
            }
        }
    }
    Ok(out)
}

/// Items of a select-form IE with stars expanded, each with its output name.
fn select_items(q: &Query, ie_name: &Ident, sources: &[Source], rel: &Ident) -> Result<Vec<(Expr, Ident)>> {
    let single = q.select.items.len() == 1;
    let visible: Vec<(Ident, Vec<Ident>)> =
        sources.iter().filter(|s| !s.is_self).map(|s| (s.label().clone(), s.columns.clone())).collect();
    let mut out = Vec::new();
    for item in &q.select.items {
        match item {
            SelectItem::Expr { expr, alias: Some(a) } => out.push((expr.clone(), a.clone())),
            SelectItem::Expr { expr: Expr::Column(c), alias: None } => out.push((Expr::Column(c.clone()), c.name.clone())),
            SelectItem::Expr { expr, alias: None } if single => out.push((expr.clone(), ie_name.clone())),
            SelectItem::Expr { .. } => {
                return Err(Error::invariant(rel, format!("every expression of {ie_name} needs an attribute name")))
            }
            SelectItem::Wildcard => {
                for c in expand_star_minus(&visible, &[])? {
                    out.push((Expr::Column(c.clone()), c.name));
                }
            }
            SelectItem::QualifiedWildcard(qual) => {
                let src = visible
                    .iter()
                    .find(|(l, _)| l == qual)
                    .ok_or_else(|| Error::Unsupported(format!("{qual}.* in {ie_name} does not name a source")))?;
                for c in expand_star_minus(std::slice::from_ref(src), &[])? {
                    out.push((Expr::Column(c.clone()), c.name));
                }
            }
            SelectItem::StarMinus { excluded } => {
                for c in expand_star_minus(&visible, excluded)? {
                    out.push((Expr::Column(c.clone()), c.name));
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::invariant(rel, format!("{ie_name} produces no attribute")));
    }
    Ok(out)
}

/// The attributes an IE produces, in order.
pub fn produced(ie: &IeDecl, rel: &Ident, catalog: &Catalog) -> Result<Vec<Ident>> {
    let name = Scheme::ie_name(ie);
    match &ie.form {
        IeForm::Value(items) => Ok(items.iter().map(|i| i.alias.clone()).collect()),
        IeForm::Select(q) => {
            let (sources, _) = gather(q, rel, catalog)?;
            let stars = q.select.items.iter().any(|i| !matches!(i, SelectItem::Expr { .. }));
            if stars && sources.iter().any(|s| s.is_self && s.alias.is_some()) {
                return Err(Error::Unsupported(format!("{name}: a star over {rel} itself")));
            }
            Ok(select_items(q, name, &sources, rel)?.into_iter().map(|(_, a)| a).collect())
        }
    }
}

#[derive(Debug)]
struct ScopeSource {
    label: Ident,
    columns: Option<Vec<Ident>>,
    is_self: bool,
}

/// Collects the relation's attributes read anywhere inside expressions and
/// nested queries, following SQL name scoping.
pub(crate) struct ReadCollector<'a> {
    rel: &'a Ident,
    attrs: &'a [Ident],
    catalog: &'a Catalog,
    scopes: Vec<Vec<ScopeSource>>,
    pub reads: Vec<Ident>,
}

impl<'a> ReadCollector<'a> {
    /// Starts with the relation itself as the outermost scope.
    pub fn new(rel: &'a Ident, attrs: &'a [Ident], catalog: &'a Catalog) -> Self {
        let outer = vec![ScopeSource { label: rel.clone(), columns: Some(attrs.to_vec()), is_self: true }];
        ReadCollector { rel, attrs, catalog, scopes: vec![outer], reads: Vec::new() }
    }

    fn with_sources(mut self, sources: &[Source]) -> Self {
        let scope = sources
            .iter()
            .map(|s| ScopeSource {
                label: s.label().clone(),
                columns: Some(if s.is_self { self.attrs.to_vec() } else { s.columns.clone() }),
                is_self: s.is_self,
            })
            .collect();
        self.scopes.push(scope);
        self
    }

    fn scope_of(&self, q: &Query) -> Vec<ScopeSource> {
        fn walk(t: &TableRef, c: &ReadCollector<'_>, out: &mut Vec<ScopeSource>) {
            match t {
                TableRef::Named { name, alias } => {
                    let is_self = name == c.rel;
                    let columns = if is_self { Some(c.attrs.to_vec()) } else { c.catalog.columns_of(name.as_str()) };
                    out.push(ScopeSource { label: alias.clone().unwrap_or_else(|| name.clone()), columns, is_self });
                }
                TableRef::Derived { alias, .. } => {
                    out.push(ScopeSource { label: alias.clone(), columns: None, is_self: false })
                }
                TableRef::Join { left, right, .. } => {
                    walk(left, c, out);
                    walk(right, c, out);
                }
                TableRef::Nested(inner) => walk(inner, c, out),
            }
        }
        let mut out = Vec::new();
        for t in &q.select.from {
            walk(t, self, &mut out);
        }
        out
    }
}

impl VisitMut for ReadCollector<'_> {
    fn query(&mut self, q: &mut Query) {
        let scope = self.scope_of(q);
        self.scopes.push(scope);
        walk_query(self, q);
        self.scopes.pop();
    }

    fn column(&mut self, c: &mut ColumnRef) {
        let mut hit: Option<bool> = None;
        'outer: for scope in self.scopes.iter().rev() {
            for s in scope {
                let found = match &c.qualifier {
                    Some(q) => &s.label == q,
                    None => s.columns.as_ref().is_some_and(|cols| cols.contains(&c.name)),
                };
                if found {
                    hit = Some(s.is_self);
                    break 'outer;
                }
            }
        }
        let is_read = match hit {
            Some(is_self) => is_self,
            None => c.qualifier.as_ref().is_none_or(|q| q == self.rel),
        };
        if is_read {
            push_unique(&mut self.reads, &c.name);
        }
    }
}

pub(crate) fn reads_in_expr(e: &Expr, rel: &Ident, attrs: &[Ident], catalog: &Catalog) -> Vec<Ident> {
    let mut rc = ReadCollector::new(rel, attrs, catalog);
    rc.expr(&mut e.clone());
    rc.reads
}

struct Ctx<'a> {
    rel: &'a Ident,
    ie: &'a Ident,
    /// Attributes of the relation other than this IE's own.
    others: &'a [Ident],
    own: &'a [Ident],
    catalog: &'a Catalog,
}

impl Ctx<'_> {
    fn check_read(&self, name: &Ident) -> Result<()> {
        if self.others.contains(name) {
            Ok(())
        } else if self.own.contains(name) {
            Err(Error::IeCycle { relation: self.rel.value.clone(), ies: vec![self.ie.value.clone()] })
        } else {
            Err(Error::UnknownColumn { relation: self.rel.value.clone(), column: name.value.clone() })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Owner {
    Rel,
    Source(usize),
}

/// Qualifies the top-level column references of a join-form expression and
/// records what each one belongs to.
struct Qualify<'a, 'b> {
    ctx: &'a Ctx<'b>,
    sources: &'a [Source],
    owners: Vec<Owner>,
    reads: Vec<Ident>,
    error: Option<Error>,
}

impl Qualify<'_, '_> {
    fn resolve(&mut self, c: &ColumnRef) -> Result<(ColumnRef, Owner)> {
        let ctx = self.ctx;
        if let Some(q) = &c.qualifier {
            if let Some(i) = self.sources.iter().position(|s| s.label() == q) {
                let s = &self.sources[i];
                if s.is_self {
                    ctx.check_read(&c.name)?;
                    push_unique(&mut self.reads, &c.name);
                } else if !s.has(&c.name) {
                    return Err(Error::UnknownColumn { relation: s.relation.value.clone(), column: c.name.value.clone() });
                }
                return Ok((c.clone(), Owner::Source(i)));
            }
            if q == ctx.rel {
                ctx.check_read(&c.name)?;
                push_unique(&mut self.reads, &c.name);
                return Ok((c.clone(), Owner::Rel));
            }
            return Err(Error::UnknownColumn { relation: q.value.clone(), column: c.name.value.clone() });
        }
        let hits: Vec<usize> = (0..self.sources.len()).filter(|&i| self.sources[i].has(&c.name)).collect();
        match hits.as_slice() {
            [i] => {
                let s = &self.sources[*i];
                if s.is_self {
                    ctx.check_read(&c.name)?;
                    push_unique(&mut self.reads, &c.name);
                }
                let qualify = s.is_self || ctx.others.contains(&c.name);
                let col = if qualify { ColumnRef::qualified(s.label().clone(), c.name.clone()) } else { c.clone() };
                Ok((col, Owner::Source(*i)))
            }
            [] => {
                ctx.check_read(&c.name)?;
                push_unique(&mut self.reads, &c.name);
                Ok((ColumnRef::qualified(ctx.rel.clone(), c.name.clone()), Owner::Rel))
            }
            _ => Err(Error::invariant(ctx.rel, format!("column {} is ambiguous in {}", c.name, ctx.ie))),
        }
    }
}

impl VisitMut for Qualify<'_, '_> {
    fn query(&mut self, q: &mut Query) {
        let mut rc = ReadCollector::new(self.ctx.rel, self.ctx.others, self.ctx.catalog).with_sources(self.sources);
        rc.query(q);
        for r in &rc.reads {
            push_unique(&mut self.reads, r);
        }
        if !rc.reads.is_empty() {
            self.owners.push(Owner::Rel);
        }
    }

    fn column(&mut self, c: &mut ColumnRef) {
        if self.error.is_some() {
            return;
        }
        match self.resolve(c) {
            Ok((col, owner)) => {
                *c = col;
                self.owners.push(owner);
            }
            Err(e) => self.error = Some(e),
        }
    }
}

fn strip(e: &Expr) -> &Expr {
    match e {
        Expr::Nested(inner) => strip(inner),
        other => other,
    }
}

/// Resolves an IE of `scheme`. `attrs` is the relation's full attribute list.
pub fn resolve(ie: &IeDecl, scheme: &Scheme, attrs: &[Ident], catalog: &Catalog) -> Result<ResolvedIe> {
    let rel = &scheme.name;
    let name = Scheme::ie_name(ie).clone();
    let own = produced(ie, rel, catalog)?;
    let others: Vec<Ident> = attrs.iter().filter(|a| !own.contains(a)).cloned().collect();
    let ctx = Ctx { rel, ie: &name, others: &others, own: &own, catalog };
    match &ie.form {
        IeForm::Value(items) => resolve_value(&ctx, items),
        IeForm::Select(q) => match ie_kind(ie) {
            IeKind::Subquery => resolve_subquery(&ctx, q, &own),
            _ => resolve_join(&ctx, q),
        },
    }
}

fn check_relations(ctx: &Ctx<'_>, rels: Vec<Ident>) -> Result<()> {
    for r in rels {
        if &r != ctx.rel && ctx.catalog.columns_of(r.as_str()).is_none() {
            return Err(Error::UnknownRelation(r.value.clone()));
        }
    }
    Ok(())
}

fn resolve_value(ctx: &Ctx<'_>, items: &[NamedExpr]) -> Result<ResolvedIe> {
    let mut reads = Vec::new();
    for it in items {
        check_relations(ctx, crate::parser::visit::expr_relations(&it.expr))?;
        for c in crate::parser::visit::shallow_columns(&it.expr) {
            if c.qualifier.as_ref().is_none_or(|q| q == ctx.rel) {
                ctx.check_read(&c.name)?;
            } else {
                return Err(Error::UnknownColumn { relation: c.qualifier.unwrap().value, column: c.name.value });
            }
        }
        for r in reads_in_expr(&it.expr, ctx.rel, ctx.others, ctx.catalog) {
            ctx.check_read(&r)?;
            push_unique(&mut reads, &r);
        }
    }
    Ok(ResolvedIe {
        name: ctx.ie.clone(),
        kind: IeKind::Value,
        produces: items.iter().map(|i| i.alias.clone()).collect(),
        items: items.to_vec(),
        sources: Vec::new(),
        on: Vec::new(),
        reads,
        join_attrs: Vec::new(),
    })
}

fn resolve_subquery(ctx: &Ctx<'_>, q: &Query, own: &[Ident]) -> Result<ResolvedIe> {
    check_relations(ctx, crate::parser::visit::referenced_relations(q))?;
    let mut q = q.clone();
    if !q.order_by.is_empty() {
        let order = std::mem::take(&mut q.order_by);
        if let Some(SelectItem::Expr { expr: Expr::Function { name, order_by, .. }, .. }) = q.select.items.first_mut() {
            if order_by.is_empty() && (name.matches("LIST") || name.matches("GROUP_CONCAT")) {
                *order_by = order;
            }
        }
    }
    if let Some(SelectItem::Expr { alias, .. }) = q.select.items.first_mut() {
        *alias = None;
    }
    q.limit = None;
    let mut rc = ReadCollector::new(ctx.rel, ctx.others, ctx.catalog);
    rc.query(&mut q.clone());
    let mut reads = Vec::new();
    for r in &rc.reads {
        ctx.check_read(r)?;
        push_unique(&mut reads, r);
    }
    let mut join_attrs = Vec::new();
    if let Some(w) = &q.select.selection {
        let mut rc = ReadCollector::new(ctx.rel, ctx.others, ctx.catalog);
        let scope = rc.scope_of(&q);
        rc.scopes.push(scope);
        rc.expr(&mut w.clone());
        join_attrs = rc.reads;
    }
    Ok(ResolvedIe {
        name: ctx.ie.clone(),
        kind: IeKind::Subquery,
        produces: own.to_vec(),
        items: vec![NamedExpr { expr: Expr::Subquery(Box::new(q)), alias: own[0].clone() }],
        sources: Vec::new(),
        on: Vec::new(),
        reads,
        join_attrs,
    })
}

fn resolve_join(ctx: &Ctx<'_>, q: &Query) -> Result<ResolvedIe> {
    let s = &q.select;
    if s.distinct || !s.group_by.is_empty() || s.having.is_some() || q.limit.is_some() {
        return Err(Error::Unsupported(format!(
            "{}: DISTINCT, GROUP BY, HAVING or LIMIT in a non-aggregate inheritance expression",
            ctx.ie
        )));
    }
    let (all, inner_on) = gather(q, ctx.rel, ctx.catalog)?;
    let mut sources: Vec<Source> = all.into_iter().filter(|s| !(s.is_self && s.alias.is_none())).collect();
    for src in sources.iter_mut().filter(|s| s.is_self) {
        src.columns = ctx.others.to_vec();
    }
    let named = select_items(q, ctx.ie, &sources, ctx.rel)?;

    let mut q_ = Qualify { ctx, sources: &sources, owners: Vec::new(), reads: Vec::new(), error: None };
    let mut items = Vec::new();
    for (mut e, alias) in named {
        q_.expr(&mut e);
        items.push(NamedExpr { expr: e, alias });
    }
    let mut conjuncts: Vec<Expr> = Vec::new();
    for c in inner_on.iter().chain(s.selection.iter()) {
        conjuncts.extend(c.conjuncts().into_iter().cloned());
    }
    let mut classified: Vec<(Expr, bool, Vec<usize>)> = Vec::new();
    let mut join_attrs = Vec::new();
    for mut c in conjuncts {
        q_.owners.clear();
        let before = q_.reads.len();
        q_.expr(&mut c);
        let refs_rel = q_.owners.contains(&Owner::Rel);
        let mut srcs: Vec<usize> = q_
            .owners
            .iter()
            .filter_map(|o| match o {
                Owner::Source(i) => Some(*i),
                Owner::Rel => None,
            })
            .collect();
        srcs.sort();
        srcs.dedup();
        if refs_rel {
            let mut rc = Vec::new();
            for col in crate::parser::visit::expr_columns(&c) {
                if col.qualifier.as_ref() == Some(ctx.rel) || sources.iter().any(|s| s.is_self && col.qualifier.as_ref() == Some(s.label())) {
                    push_unique(&mut rc, &col.name);
                }
            }
            for r in &q_.reads[before..] {
                push_unique(&mut rc, r);
            }
            for r in rc {
                push_unique(&mut join_attrs, &r);
            }
        }
        classified.push((c, refs_rel, srcs));
    }
    if let Some(e) = q_.error.take() {
        return Err(e);
    }
    let reads = std::mem::take(&mut q_.reads);

    // A conjunct tying the relation to a source is a recursive join; those must be equalities.
    let mut has_recursive = false;
    for (c, refs_rel, srcs) in &classified {
        if *refs_rel && !srcs.is_empty() {
            if !matches!(strip(c), Expr::Binary { op: BinaryOp::Eq, .. }) {
                return Err(Error::NonEquiRecursiveJoin { relation: ctx.rel.value.clone(), ie: ctx.ie.value.clone() });
            }
            has_recursive = true;
        }
    }
    if !has_recursive || sources.is_empty() {
        return Err(Error::MissingRecursiveJoin { relation: ctx.rel.value.clone(), ie: ctx.ie.value.clone() });
    }

    // Place sources in declaration order, each as soon as one of its
    // conjuncts only needs the relation and sources placed before it.
    let mut placed: Vec<usize> = Vec::new();
    while placed.len() < sources.len() {
        let next = (0..sources.len()).find(|i| {
            !placed.contains(i)
                && classified.iter().any(|(_, _, srcs)| srcs.contains(i) && srcs.iter().all(|s| s == i || placed.contains(s)))
        });
        match next {
            Some(i) => placed.push(i),
            None => {
                return Err(Error::MissingRecursiveJoin { relation: ctx.rel.value.clone(), ie: ctx.ie.value.clone() })
            }
        }
    }
    let mut on: Vec<Vec<Expr>> = vec![Vec::new(); sources.len()];
    for (c, _, srcs) in classified {
        let slot = srcs.iter().map(|s| placed.iter().position(|p| p == s).unwrap()).max().unwrap_or(0);
        on[slot].push(c);
    }
    let ordered: Vec<Source> = placed.iter().map(|&i| sources[i].clone()).collect();
    Ok(ResolvedIe {
        name: ctx.ie.clone(),
        kind: IeKind::Join,
        produces: items.iter().map(|i| i.alias.clone()).collect(),
        items,
        sources: ordered,
        on,
        reads,
        join_attrs,
    })
}

/// Replaces top-level references to `names` with the given expressions.
pub(crate) struct Inline<'a> {
    pub rel: &'a Ident,
    pub with: &'a [NamedExpr],
}

impl VisitMut for Inline<'_> {
    fn query(&mut self, _q: &mut Query) {}

    fn expr(&mut self, e: &mut Expr) {
        if let Expr::Column(c) = e {
            if c.qualifier.as_ref().is_none_or(|q| q == self.rel) {
                if let Some(ne) = self.with.iter().find(|ne| ne.alias == c.name) {
                    *e = Expr::Nested(Box::new(ne.expr.clone()));
                }
            }
            return;
        }
        walk_expr(self, e);
    }
}
