use crate::catalog::{base_name, ie_relations, Catalog, DependencyGraph, Element, RelationKind, Scheme};
use crate::error::{Error, Result};
use crate::parser::ast::*;
use crate::parser::visit::{rename_relation_in_expr, rename_relation_in_query, VisitMut};

struct Refs {
    columns: Vec<ColumnRef>,
    /// (relation, alias) of every FROM entry.
    from: Vec<(Ident, Option<Ident>)>,
}

impl VisitMut for Refs {
    fn column(&mut self, c: &mut ColumnRef) {
        self.columns.push(c.clone());
    }

    fn relation(&mut self, name: &mut Ident, alias: &mut Option<Ident>) {
        self.from.push((name.clone(), alias.clone()));
    }
}

fn refs(ie: &IeDecl) -> Refs {
    let mut r = Refs { columns: Vec::new(), from: Vec::new() };
    match &ie.form {
        IeForm::Select(q) => r.query(&mut (**q).clone()),
        IeForm::Value(items) => {
            for it in items {
                r.expr(&mut it.expr.clone());
            }
        }
    }
    r
}

/// Points the IEs of `scheme` at base tables of relations that read it back,
/// provided they use only stored attributes of those relations. Returns the
/// rewrites made, as `IE: X -> X_B`.
pub fn rewrite_to_base(scheme: &mut Scheme, catalog: &Catalog, graph: &DependencyGraph) -> Result<Vec<String>> {
    let rel = scheme.name.clone();
    let mut notes = Vec::new();
    for el in scheme.elements.iter_mut() {
        let Element::Ie(ie) = el else { continue };
        let name = Scheme::ie_name(ie).clone();
        for x in ie_relations(ie) {
            if x == rel || !graph.reaches(&x, &rel) {
                continue;
            }
            let Some(entry) = catalog.get(x.as_str()).filter(|e| e.kind == RelationKind::Sir) else { continue };
            let r = refs(ie);
            let labels: Vec<Ident> = r
                .from
                .iter()
                .filter(|(n, _)| n == &x)
                .map(|(n, a)| a.clone().unwrap_or_else(|| n.clone()))
                .collect();
            let others: Vec<Vec<Ident>> = r
                .from
                .iter()
                .filter(|(n, _)| n != &x)
                .filter_map(|(n, _)| catalog.columns_of(n.as_str()))
                .collect();
            for c in &r.columns {
                let of_x = match &c.qualifier {
                    Some(q) => labels.contains(q),
                    None => entry.attr(c.name.as_str()).is_some() && !others.iter().any(|cols| cols.contains(&c.name)),
                };
                if of_x && entry.attr(c.name.as_str()).is_some_and(|a| a.is_inherited()) {
                    return Err(Error::NotRewritable {
                        ie: name.value.clone(),
                        relation: x.value.clone(),
                        attribute: c.name.value.clone(),
                    });
                }
            }
            let base = base_name(&entry.name);
            match &mut ie.form {
                IeForm::Select(q) => rename_relation_in_query(q, &x, &base),
                IeForm::Value(items) => {
                    for it in items {
                        rename_relation_in_expr(&mut it.expr, &x, &base);
                    }
                }
            }
            notes.push(format!("{name}: {x} -> {base}"));
        }
    }
    Ok(notes)
}
