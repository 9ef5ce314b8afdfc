//! Kernel statements that turn the objects of one catalog into those of another,
//! keeping base-table rows.

use super::Target;
use crate::catalog::{Catalog, Entry, PlanKind, PlanObject};
use crate::parser::{parse, quote_ident, Ident, Statement, TableElement};

fn find<'a>(catalog: &'a Catalog, name: &str) -> Option<(&'a Entry, &'a PlanObject)> {
    catalog.objects().find(|(_, o)| o.name.eq_ignore_ascii_case(name))
}

fn unchanged(other: &Catalog, o: &PlanObject) -> bool {
    find(other, &o.name).is_some_and(|(_, p)| p.kind == o.kind && p.ddl == o.ddl)
}

fn stored_columns(e: &Entry) -> Vec<Ident> {
    e.scheme().map(|s| s.stored_names()).unwrap_or_default()
}

/// Column definitions of a CREATE TABLE text, and the constraint elements.
fn table_parts(ddl: &str) -> Option<(Vec<TableElement>, Vec<TableElement>)> {
    let Some(Statement::CreateTable(ct)) = parse(&format!("{ddl};")).ok()?.pop() else { return None };
    Some(ct.elements.into_iter().partition(|e| matches!(e, TableElement::Attribute(_))))
}

/// `ALTER TABLE ADD COLUMN` statements when the new table only appends
/// plain columns to the old one.
fn added_columns(old: &PlanObject, new: &PlanObject, target: &Target) -> Option<Vec<String>> {
    let (old_cols, old_cons) = table_parts(&old.ddl)?;
    let (new_cols, new_cons) = table_parts(&new.ddl)?;
    if old_cons != new_cons || new_cols.len() <= old_cols.len() || new_cols[..old_cols.len()] != old_cols[..] {
        return None;
    }
    let mut out = Vec::new();
    for el in &new_cols[old_cols.len()..] {
        let TableElement::Attribute(a) = el else { return None };
        if a.is_primary_key || a.unique || a.not_null {
            return None;
        }
        let mut def = quote_ident(a.name.as_str(), target.quote);
        if let Some(t) = &a.sql_type {
            def.push(' ');
            def.push_str(t);
        }
        if let Some(r) = &a.references {
            def.push_str(&format!(" REFERENCES {}", quote_ident(r.table.as_str(), target.quote)));
            if !r.columns.is_empty() {
                let cols: Vec<String> = r.columns.iter().map(|c| quote_ident(c.as_str(), target.quote)).collect();
                def.push_str(&format!(" ({})", cols.join(", ")));
            }
        }
        out.push(format!("ALTER TABLE {} ADD COLUMN {def}", quote_ident(&new.name, target.quote)));
    }
    Some(out)
}

fn copy_rows(into: &str, from: &str, old_cols: &[Ident], new_cols: &[Ident], target: &Target) -> Option<String> {
    let common: Vec<String> =
        new_cols.iter().filter(|c| old_cols.contains(c)).map(|c| quote_ident(c.as_str(), target.quote)).collect();
    if common.is_empty() {
        return None;
    }
    let list = common.join(", ");
    Some(format!(
        "INSERT INTO {} ({list}) SELECT {list} FROM {}",
        quote_ident(into, target.quote),
        quote_ident(from, target.quote)
    ))
}

/// Statements taking the kernel from `old`'s objects to `new`'s.
pub fn migrate(old: &Catalog, new: &Catalog, target: &Target) -> Vec<String> {
    let q = |n: &str| quote_ident(n, target.quote);
    let mut out = Vec::new();

    let old_objects: Vec<(&Entry, &PlanObject)> = old.objects().collect();
    for (_, o) in old_objects.iter().rev() {
        if o.kind == PlanKind::View && !unchanged(new, o) {
            out.push(format!("DROP VIEW {}", q(&o.name)));
        }
    }

    // Tables whose rows move or whose definition changes lose their indexes.
    let mut rebuilt: Vec<String> = Vec::new();
    let mut creates = Vec::new();
    let mut rebuilds = Vec::new();
    let mut drops = Vec::new();
    for (e, o) in old_objects.iter().filter(|(_, o)| o.kind == PlanKind::Table) {
        match find(new, &o.name) {
            Some((_, n)) if n.kind == PlanKind::Table && n.ddl == o.ddl => {}
            Some((ne, n)) if n.kind == PlanKind::Table => {
                if let Some(alters) = added_columns(o, n, target) {
                    rebuilds.extend(alters);
                    continue;
                }
                let tmp = "sir_rebuild";
                rebuilds.push(format!("CREATE TABLE {tmp} AS SELECT * FROM {}", q(&o.name)));
                rebuilds.push(format!("DROP TABLE {}", q(&o.name)));
                rebuilds.push(n.ddl.clone());
                rebuilds.extend(copy_rows(&o.name, tmp, &stored_columns(e), &stored_columns(ne), target));
                rebuilds.push(format!("DROP TABLE {tmp}"));
                rebuilt.push(o.name.to_ascii_lowercase());
            }
            _ => {
                drops.push(format!("DROP TABLE {}", q(&o.name)));
                rebuilt.push(o.name.to_ascii_lowercase());
            }
        }
    }
    for (ne, n) in new.objects().filter(|(_, o)| o.kind == PlanKind::Table) {
        if find(old, &n.name).is_some_and(|(_, o)| o.kind == PlanKind::Table) {
            continue;
        }
        creates.push(n.ddl.clone());
        rebuilt.push(n.name.to_ascii_lowercase());
        // A relation switching between stored and inherited keeps its rows.
        if let Some(oe) = old.get(ne.name.as_str()) {
            if let Some(from) = oe.objects.iter().find(|o| o.kind == PlanKind::Table && !o.name.eq_ignore_ascii_case(&n.name)) {
                creates.extend(copy_rows(&n.name, &from.name, &stored_columns(oe), &stored_columns(ne), target));
            }
        }
    }

    for (e, o) in &old_objects {
        if o.kind != PlanKind::Index {
            continue;
        }
        let table_gone = e.base_table().is_none_or(|b| rebuilt.contains(&b.key()))
            || !new.get(e.name.as_str()).is_some_and(|ne| ne.base_table() == e.base_table());
        if !unchanged(new, o) || table_gone {
            out.push(format!("DROP INDEX IF EXISTS {}", q(&o.name)));
        }
    }
    out.extend(creates);
    out.extend(rebuilds);
    out.extend(drops);

    let order = new.topo_order().unwrap_or_else(|_| new.entries().map(|e| e.name.clone()).collect());
    for name in &order {
        let e = new.get(name.as_str()).unwrap();
        for o in e.objects.iter().filter(|o| o.kind == PlanKind::View) {
            if !unchanged(old, o) {
                out.push(o.ddl.clone());
            }
        }
    }
    for (e, o) in new.objects().filter(|(_, o)| o.kind == PlanKind::Index) {
        let table_new = e.base_table().is_some_and(|b| rebuilt.contains(&b.key()));
        let moved = old.get(e.name.as_str()).is_none_or(|oe| oe.base_table() != e.base_table());
        if !unchanged(old, o) || table_new || moved {
            out.push(o.ddl.clone());
        }
    }
    out
}
