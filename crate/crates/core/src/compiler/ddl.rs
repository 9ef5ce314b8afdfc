//! Planning of DDL statements: the catalog after the statement, and the
//! kernel statements that take the database there.

use super::bps::{compile_table, resolved_ies};
use super::migrate::migrate;
use super::rewrite::rewrite_to_base;
use super::star::expand_query;
use super::{CompileOptions, Target};
use crate::catalog::{AttrInfo, Catalog, Definition, Element, Entry, PlanKind, PlanObject, RelationKind, Scheme};
use crate::error::{Error, Result};
use crate::parser::ast::*;
use crate::parser::{render_statement, Dialect};

#[derive(Debug, Clone)]
pub struct Change {
    pub catalog: Catalog,
    /// Kernel statements, in execution order.
    pub statements: Vec<String>,
    /// Informational notes such as base-table rewrites.
    pub notes: Vec<String>,
}

/// Plans one DDL statement against `catalog`.
pub fn plan(stmt: &Statement, catalog: &Catalog, options: &CompileOptions, target: &Target) -> Result<Change> {
    let mut next = catalog.clone();
    let mut notes = Vec::new();
    let subject = match stmt {
        Statement::CreateTable(ct) => {
            check_new_name(catalog, &ct.name)?;
            let scheme = Scheme::from_create(ct)?;
            let kind = if scheme.is_sir() { RelationKind::Sir } else { RelationKind::Stored };
            if kind == RelationKind::Sir {
                check_generated_names(catalog, &ct.name)?;
            }
            let created_at = next.next_seq();
            next.insert(table_entry(scheme, kind, created_at));
            Some(ct.name.clone())
        }
        Statement::CreateView(v) => {
            check_new_name(catalog, &v.name)?;
            let mut query = v.query.clone();
            expand_query(&mut query, catalog)?;
            let kernel_view = Statement::CreateView(CreateView { query, ..v.clone() });
            let ddl = render_statement(&kernel_view, &Dialect::kernel(target.quote))?;
            let created_at = next.next_seq();
            next.insert(Entry {
                name: v.name.clone(),
                kind: RelationKind::View,
                definition: Definition::View(v.clone()),
                attrs: v.columns.iter().map(|c| AttrInfo { name: c.clone(), sql_type: None, is_key: false, ie: None }).collect(),
                ies: Vec::new(),
                objects: vec![PlanObject { name: v.name.value.clone(), kind: PlanKind::View, ddl }],
                indexes: Vec::new(),
                created_at,
            });
            None
        }
        Statement::AlterTable(a) => {
            let entry = table(catalog, &a.name)?;
            let mut scheme = entry.scheme().cloned().expect("table entry");
            for action in &a.actions {
                alter(&mut scheme, entry, action, catalog)?;
            }
            if scheme.is_sir() && entry.kind != RelationKind::Sir {
                check_generated_names(catalog, &a.name)?;
            }
            let e = next.get_mut(a.name.as_str()).unwrap();
            e.kind = if scheme.is_sir() { RelationKind::Sir } else { RelationKind::Stored };
            e.definition = Definition::Table(scheme);
            Some(a.name.clone())
        }
        Statement::DropTable(d) | Statement::DropView(d) => {
            let want_view = matches!(stmt, Statement::DropView(_));
            let Some(entry) = catalog.get(d.name.as_str()) else {
                if d.if_exists {
                    return Ok(Change { catalog: next, statements: Vec::new(), notes });
                }
                return Err(Error::UnknownRelation(d.name.value.clone()));
            };
            if (entry.kind == RelationKind::View) != want_view {
                let what = if want_view { "DROP VIEW" } else { "DROP TABLE" };
                return Err(Error::Unsupported(format!("{what} on {} {}", entry.kind, entry.name)));
            }
            let dependents = catalog.dependents_of(d.name.as_str());
            if !dependents.is_empty() && d.behavior.unwrap_or_default() == DropBehavior::Restrict {
                return Err(Error::DependentsExist {
                    relation: entry.name.value.clone(),
                    dependents: dependents.iter().map(|d| d.value.clone()).collect(),
                });
            }
            next.remove(d.name.as_str());
            for dep in &dependents {
                next.remove(dep.as_str());
                notes.push(format!("dropped dependent {dep}"));
            }
            None
        }
        Statement::CreateIndex(ix) => {
            let entry = table(catalog, &ix.table)?;
            if catalog.index(ix.name.as_str()).is_some() || catalog.contains(ix.name.as_str()) {
                return Err(Error::DuplicateName(ix.name.value.clone()));
            }
            let e = next.get_mut(entry.name.as_str()).unwrap();
            e.indexes.push(CreateIndex { table: entry.name.clone(), ..ix.clone() });
            None
        }
        other => return Err(Error::Unsupported(format!("{} is not DDL", other.label()))),
    };
    if let Some(rel) = &subject {
        notes.extend(break_cycles(&mut next, rel, options)?);
    }
    recompile(&mut next, options, target)?;
    check_object_names(&next)?;
    let statements = migrate(catalog, &next, target);
    Ok(Change { catalog: next, statements, notes })
}

fn table_entry(scheme: Scheme, kind: RelationKind, created_at: u64) -> Entry {
    Entry {
        name: scheme.name.clone(),
        kind,
        definition: Definition::Table(scheme),
        attrs: Vec::new(),
        ies: Vec::new(),
        objects: Vec::new(),
        indexes: Vec::new(),
        created_at,
    }
}

fn table<'a>(catalog: &'a Catalog, name: &Ident) -> Result<&'a Entry> {
    let entry = catalog.get(name.as_str()).ok_or_else(|| Error::UnknownRelation(name.value.clone()))?;
    if entry.kind == RelationKind::View {
        return Err(Error::Unsupported(format!("{name} is a view")));
    }
    Ok(entry)
}

fn check_new_name(catalog: &Catalog, name: &Ident) -> Result<()> {
    if catalog.contains(name.as_str()) || catalog.index(name.as_str()).is_some() {
        return Err(Error::DuplicateName(name.value.clone()));
    }
    if let Some(reason) = catalog.reserved_reason(name.as_str()) {
        return Err(Error::ReservedName { name: name.value.clone(), reason });
    }
    Ok(())
}

/// An SIR's base and stage names must be free.
fn check_generated_names(catalog: &Catalog, rel: &Ident) -> Result<()> {
    for e in catalog.entries() {
        if let Some((stem, suffix)) = e.name.value.rsplit_once('_') {
            let generated = suffix.eq_ignore_ascii_case("B") || (!suffix.is_empty() && suffix.bytes().all(|b| b.is_ascii_digit()));
            if generated && rel.matches(stem) {
                return Err(Error::NameCollision(e.name.value.clone()));
            }
        }
    }
    Ok(())
}

fn check_object_names(catalog: &Catalog) -> Result<()> {
    let mut seen: Vec<String> = Vec::new();
    for (_, o) in catalog.objects() {
        let key = o.name.to_ascii_lowercase();
        if seen.contains(&key) {
            return Err(Error::NameCollision(o.name.clone()));
        }
        seen.push(key);
    }
    Ok(())
}

/// Element index of an attribute, looking through IEs for inherited ones.
fn slot_of(scheme: &Scheme, entry: &Entry, name: &Ident) -> Option<usize> {
    scheme.position_of(name.as_str()).or_else(|| {
        let ie = entry.attr(name.as_str())?.ie.clone()?;
        scheme.position_of(ie.as_str())
    })
}

fn join_attr_users(scheme: &Scheme, catalog: &Catalog, attr: &Ident) -> Result<bool> {
    Ok(resolved_ies(scheme, catalog)?.iter().any(|ie| ie.join_attrs.contains(attr)))
}

fn alter(scheme: &mut Scheme, entry: &Entry, action: &AlterAction, catalog: &Catalog) -> Result<()> {
    let rel = scheme.name.clone();
    match action {
        AlterAction::Add { position, elements } => {
            let at = match position {
                None => scheme.elements.len(),
                Some(Position::Before(x)) | Some(Position::After(x)) => {
                    let i = slot_of(scheme, entry, x)
                        .ok_or_else(|| Error::UnknownColumn { relation: rel.value.clone(), column: x.value.clone() })?;
                    if matches!(position, Some(Position::After(_))) { i + 1 } else { i }
                }
            };
            for (k, el) in elements.iter().enumerate() {
                let el = match el {
                    NewElement::Attribute(a) => Element::Stored(a.clone()),
                    NewElement::Ie(ie) => Element::Ie(scheme.named_ie(ie.clone())),
                };
                scheme.elements.insert(at + k, el);
            }
        }
        AlterAction::Drop { name } => {
            if scheme.stored_attr(name.as_str()).is_some() {
                if entry.kind == RelationKind::Sir && join_attr_users(scheme, catalog, name)? {
                    return Err(Error::RecursiveJoinAttributeDrop { relation: rel.value.clone(), attribute: name.value.clone() });
                }
                if constraint_uses(scheme, name) {
                    return Err(Error::invariant(&rel, format!("{name} is used by a table constraint")));
                }
                let i = scheme.position_of(name.as_str()).unwrap();
                scheme.elements.remove(i);
            } else if scheme.ie(name.as_str()).is_some() {
                let i = scheme.position_of(name.as_str()).unwrap();
                scheme.elements.remove(i);
            } else if let Some(ie) = entry.attr(name.as_str()).and_then(|a| a.ie.clone()) {
                let produced = entry.attrs.iter().filter(|a| a.ie.as_ref() == Some(&ie)).count();
                if produced > 1 {
                    return Err(Error::invariant(&rel, format!("{name} comes from {ie}, which produces other attributes; drop {ie}")));
                }
                let i = scheme.position_of(ie.as_str()).unwrap();
                scheme.elements.remove(i);
            } else {
                return Err(Error::UnknownColumn { relation: rel.value.clone(), column: name.value.clone() });
            }
            if scheme.stored().next().is_none() {
                return Err(Error::invariant(&rel, "a relation needs at least one stored attribute"));
            }
        }
        AlterAction::Alter { target, replacement } => {
            let i = slot_of(scheme, entry, target)
                .ok_or_else(|| Error::UnknownIe { relation: rel.value.clone(), name: target.value.clone() })?;
            if let Element::Stored(a) = &scheme.elements[i] {
                if entry.kind == RelationKind::Sir && join_attr_users(scheme, catalog, &a.name)? {
                    return Err(Error::RecursiveJoinAttributeDrop { relation: rel.value.clone(), attribute: a.name.value.clone() });
                }
                if constraint_uses(scheme, &a.name) {
                    return Err(Error::invariant(&rel, format!("{} is used by a table constraint", a.name)));
                }
            }
            let mut ie = replacement.clone();
            if ie.name.is_none() {
                ie.name = Some(target.clone());
            }
            scheme.elements[i] = Element::Ie(ie);
        }
    }
    Ok(())
}

fn constraint_uses(scheme: &Scheme, name: &Ident) -> bool {
    scheme.constraints.iter().any(|c| match c {
        TableConstraint::PrimaryKey(cols) | TableConstraint::Unique(cols) => cols.contains(name),
        TableConstraint::ForeignKey { columns, .. } => columns.contains(name),
    }) || scheme.stored_attr(name.as_str()).is_some_and(|a| a.is_primary_key || a.unique)
}

/// Fails on a dependency cycle, first trying the base-table rewrite when enabled.
fn break_cycles(catalog: &mut Catalog, rel: &Ident, options: &CompileOptions) -> Result<Vec<String>> {
    let Some(cycle) = catalog.graph().find_cycle() else { return Ok(Vec::new()) };
    if !options.rewrite_to_base || !cycle.contains(rel) {
        return Err(Error::CircularReference { cycle: cycle.iter().map(|c| c.value.clone()).collect() });
    }
    let graph = catalog.graph();
    let mut scheme = catalog.get(rel.as_str()).and_then(|e| e.scheme().cloned()).expect("table entry");
    let notes = rewrite_to_base(&mut scheme, catalog, &graph)?;
    catalog.get_mut(rel.as_str()).unwrap().definition = Definition::Table(scheme);
    if let Some(cycle) = catalog.graph().find_cycle() {
        return Err(Error::CircularReference { cycle: cycle.iter().map(|c| c.value.clone()).collect() });
    }
    Ok(notes)
}

/// Recompiles every table entry, sources before readers.
fn recompile(catalog: &mut Catalog, options: &CompileOptions, target: &Target) -> Result<()> {
    let order = catalog
        .topo_order()
        .map_err(|cycle| Error::CircularReference { cycle: cycle.iter().map(|c| c.value.clone()).collect() })?;
    for name in order {
        let entry = catalog.get(name.as_str()).unwrap();
        let Some(scheme) = entry.scheme() else { continue };
        let compiled = compile_table(scheme, &entry.indexes, catalog, options, target)?;
        let e = catalog.get_mut(name.as_str()).unwrap();
        e.kind = compiled.kind;
        e.attrs = compiled.attrs;
        e.ies = compiled.ies;
        e.objects = compiled.objects;
    }
    Ok(())
}
