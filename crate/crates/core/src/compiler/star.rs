use super::resolve::expand_star_minus;
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::parser::ast::*;
use crate::parser::visit::{walk_query, VisitMut};

fn derived_columns(q: &Query) -> Result<Vec<Ident>> {
    q.select
        .items
        .iter()
        .map(|i| match i {
            SelectItem::Expr { alias: Some(a), .. } => Ok(a.clone()),
            SelectItem::Expr { expr: Expr::Column(c), alias: None } => Ok(c.name.clone()),
            _ => Err(Error::Unsupported("*/ over a derived table whose columns are not all named".into())),
        })
        .collect()
}

fn sources(t: &TableRef, catalog: &Catalog, out: &mut Vec<(Ident, Vec<Ident>)>) -> Result<()> {
    match t {
        TableRef::Named { name, alias } => {
            let cols = catalog.columns_of(name.as_str()).ok_or_else(|| Error::UnknownRelation(name.value.clone()))?;
            out.push((alias.clone().unwrap_or_else(|| name.clone()), cols));
        }
        TableRef::Derived { query, alias } => out.push((alias.clone(), derived_columns(query)?)),
        TableRef::Join { left, right, .. } => {
            sources(left, catalog, out)?;
            sources(right, catalog, out)?;
        }
        TableRef::Nested(inner) => sources(inner, catalog, out)?,
    }
    Ok(())
}

struct Expand<'a> {
    catalog: &'a Catalog,
    error: Option<Error>,
}

impl Expand<'_> {
    fn expand(&self, q: &mut Query) -> Result<()> {
        if !q.select.items.iter().any(|i| matches!(i, SelectItem::StarMinus { .. })) {
            return Ok(());
        }
        let mut srcs = Vec::new();
        for t in &q.select.from {
            sources(t, self.catalog, &mut srcs)?;
        }
        let mut items = Vec::new();
        for item in std::mem::take(&mut q.select.items) {
            match item {
                SelectItem::StarMinus { excluded } => {
                    for c in expand_star_minus(&srcs, &excluded)? {
                        items.push(SelectItem::Expr { expr: Expr::Column(c), alias: None });
                    }
                }
                other => items.push(other),
            }
        }
        q.select.items = items;
        Ok(())
    }
}

impl VisitMut for Expand<'_> {
    fn query(&mut self, q: &mut Query) {
        walk_query(self, q);
        if self.error.is_none() {
            if let Err(e) = self.expand(q) {
                self.error = Some(e);
            }
        }
    }
}

/// Replaces every star-minus item, at any depth, with the columns it stands for.
pub fn expand_query(q: &mut Query, catalog: &Catalog) -> Result<()> {
    let mut x = Expand { catalog, error: None };
    x.query(q);
    x.error.map_or(Ok(()), Err)
}
