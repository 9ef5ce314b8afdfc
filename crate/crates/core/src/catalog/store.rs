//! Catalog persistence in kernel meta-tables, so a database reopens intact.

use super::{AttrInfo, Catalog, Definition, Entry, IeInfo, PlanKind, PlanObject, RelationKind, Scheme};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, RowSet, Value};
use crate::parser::{parse, CreateIndex, Ident, Statement};

pub const META_TABLES: [&str; 5] = ["sir_relations", "sir_attrs", "sir_ies", "sir_deps", "sir_objects"];

const META_DDL: [&str; 5] = [
    "CREATE TABLE IF NOT EXISTS sir_relations (name TEXT PRIMARY KEY, kind TEXT NOT NULL, created_at INTEGER NOT NULL, definition TEXT NOT NULL)",
    "CREATE TABLE IF NOT EXISTS sir_attrs (rel TEXT NOT NULL, ordinal INTEGER NOT NULL, name TEXT NOT NULL, sql_type TEXT, is_key INTEGER NOT NULL, is_inherited INTEGER NOT NULL, ie_name TEXT, PRIMARY KEY (rel, ordinal))",
    "CREATE TABLE IF NOT EXISTS sir_ies (rel TEXT NOT NULL, ordinal INTEGER NOT NULL, name TEXT NOT NULL, source_text TEXT NOT NULL, canonical_text TEXT NOT NULL, PRIMARY KEY (rel, ordinal))",
    "CREATE TABLE IF NOT EXISTS sir_deps (src TEXT NOT NULL, dst TEXT NOT NULL)",
    "CREATE TABLE IF NOT EXISTS sir_objects (rel TEXT NOT NULL, ordinal INTEGER NOT NULL, name TEXT NOT NULL, kind TEXT NOT NULL, ddl TEXT NOT NULL, PRIMARY KEY (rel, ordinal))",
];

fn text(s: &str) -> String {
    Value::Text(s.to_string()).to_sql()
}

fn opt_text(s: Option<&str>) -> String {
    s.map(text).unwrap_or_else(|| "NULL".into())
}

/// Rewrites every meta-table row from `catalog`. Runs inside the caller's transaction.
pub fn persist<K: Kernel + ?Sized>(kernel: &mut K, catalog: &Catalog) -> Result<()> {
    for ddl in META_DDL {
        kernel.execute(ddl)?;
    }
    for t in META_TABLES {
        kernel.execute(&format!("DELETE FROM {t}"))?;
    }
    for e in catalog.entries() {
        let definition = e.definition_text()?;
        kernel.execute(&format!(
            "INSERT INTO sir_relations VALUES ({}, {}, {}, {})",
            text(e.name.as_str()),
            text(e.kind.as_str()),
            e.created_at,
            text(&definition)
        ))?;
        for (i, a) in e.attrs.iter().enumerate() {
            kernel.execute(&format!(
                "INSERT INTO sir_attrs VALUES ({}, {}, {}, {}, {}, {}, {})",
                text(e.name.as_str()),
                i + 1,
                text(a.name.as_str()),
                opt_text(a.sql_type.as_deref()),
                a.is_key as i32,
                a.is_inherited() as i32,
                opt_text(a.ie.as_ref().map(Ident::as_str))
            ))?;
        }
        for (i, ie) in e.ies.iter().enumerate() {
            kernel.execute(&format!(
                "INSERT INTO sir_ies VALUES ({}, {}, {}, {}, {})",
                text(e.name.as_str()),
                i + 1,
                text(ie.name.as_str()),
                text(&ie.source_text),
                text(&ie.canonical_text)
            ))?;
        }
        for dst in e.reads() {
            kernel.execute(&format!(
                "INSERT INTO sir_deps VALUES ({}, {})",
                text(e.name.as_str()),
                text(dst.as_str())
            ))?;
        }
        for (i, o) in e.objects.iter().enumerate() {
            kernel.execute(&format!(
                "INSERT INTO sir_objects VALUES ({}, {}, {}, {}, {})",
                text(e.name.as_str()),
                i + 1,
                text(&o.name),
                text(o.kind.as_str()),
                text(&o.ddl)
            ))?;
        }
    }
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptCatalog(msg.into())
}

fn cell_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        other => Some(other.to_string()),
    }
}

fn cell_int(v: &Value) -> Result<i64> {
    match v {
        Value::Integer(i) => Ok(*i),
        other => Err(corrupt(format!("expected an integer, found {other}"))),
    }
}

fn rows_for<'a>(rs: &'a RowSet, rel: &'a Ident) -> impl Iterator<Item = &'a Vec<Value>> + 'a {
    rs.rows.iter().filter(move |r| matches!(&r[0], Value::Text(t) if rel.matches(t)))
}

/// Reads the catalog back from the meta-tables; empty when none exist yet.
pub fn load<K: Kernel + ?Sized>(kernel: &mut K) -> Result<Catalog> {
    let objects = kernel.objects()?;
    let present = |name: &str| objects.iter().any(|o| o.name.eq_ignore_ascii_case(name));
    let found = META_TABLES.iter().filter(|t| present(t)).count();
    if found == 0 {
        return Ok(Catalog::new());
    }
    if found != META_TABLES.len() {
        return Err(corrupt("some catalog tables are missing"));
    }
    let relations = kernel.query("SELECT name, kind, created_at, definition FROM sir_relations ORDER BY created_at")?;
    let attrs = kernel.query("SELECT rel, ordinal, name, sql_type, is_key, is_inherited, ie_name FROM sir_attrs ORDER BY rel, ordinal")?;
    let ies = kernel.query("SELECT rel, ordinal, name, source_text, canonical_text FROM sir_ies ORDER BY rel, ordinal")?;
    let objs = kernel.query("SELECT rel, ordinal, name, kind, ddl FROM sir_objects ORDER BY rel, ordinal")?;

    let mut catalog = Catalog::new();
    for row in &relations.rows {
        let name = Ident::new(cell_text(&row[0]).ok_or_else(|| corrupt("relation without a name"))?);
        let kind = cell_text(&row[1])
            .and_then(|k| RelationKind::parse(&k))
            .ok_or_else(|| corrupt(format!("{name}: unknown kind")))?;
        let created_at = cell_int(&row[2])? as u64;
        let text_def = cell_text(&row[3]).ok_or_else(|| corrupt(format!("{name}: missing definition")))?;
        let stmt = parse(&format!("{text_def};"))
            .map_err(|e| corrupt(format!("{name}: definition does not parse: {e}")))?
            .into_iter()
            .next();
        let definition = match (stmt, kind) {
            (Some(Statement::CreateView(v)), RelationKind::View) => Definition::View(v),
            (Some(Statement::CreateTable(ct)), RelationKind::Stored | RelationKind::Sir) => {
                let s = Scheme::from_create(&ct).map_err(|e| corrupt(format!("{name}: {e}")))?;
                if s.is_sir() != (kind == RelationKind::Sir) {
                    return Err(corrupt(format!("{name}: kind {kind} does not match its definition")));
                }
                Definition::Table(s)
            }
            _ => return Err(corrupt(format!("{name}: definition does not match kind {kind}"))),
        };

        let mut entry_attrs = Vec::new();
        for r in rows_for(&attrs, &name) {
            let ie = cell_text(&r[6]).map(Ident::new);
            if (cell_int(&r[5])? != 0) != ie.is_some() {
                return Err(corrupt(format!("{name}: inherited flag disagrees with IE name")));
            }
            entry_attrs.push(AttrInfo {
                name: Ident::new(cell_text(&r[2]).unwrap_or_default()),
                sql_type: cell_text(&r[3]),
                is_key: cell_int(&r[4])? != 0,
                ie,
            });
        }
        let mut entry_ies = Vec::new();
        for r in rows_for(&ies, &name) {
            let ie_name = Ident::new(cell_text(&r[2]).unwrap_or_default());
            let produces = entry_attrs.iter().filter(|a| a.ie.as_ref() == Some(&ie_name)).map(|a| a.name.clone()).collect();
            entry_ies.push(IeInfo {
                name: ie_name,
                source_text: cell_text(&r[3]).unwrap_or_default(),
                canonical_text: cell_text(&r[4]).unwrap_or_default(),
                produces,
            });
        }
        let mut entry_objects = Vec::new();
        let mut indexes = Vec::new();
        for r in rows_for(&objs, &name) {
            let kind = cell_text(&r[3])
                .and_then(|k| PlanKind::parse(&k))
                .ok_or_else(|| corrupt(format!("{name}: unknown object kind")))?;
            let obj = PlanObject { name: cell_text(&r[2]).unwrap_or_default(), kind, ddl: cell_text(&r[4]).unwrap_or_default() };
            if kind == PlanKind::Index {
                indexes.push(index_decl(&obj, &name)?);
            }
            entry_objects.push(obj);
        }

        if let Definition::Table(s) = &definition {
            let stored: Vec<Ident> = entry_attrs.iter().filter(|a| a.ie.is_none()).map(|a| a.name.clone()).collect();
            if stored != s.stored_names() {
                return Err(corrupt(format!("{name}: stored attributes disagree with the definition")));
            }
            let declared: Vec<&Ident> = s.ies().map(Scheme::ie_name).collect();
            let recorded: Vec<&Ident> = entry_ies.iter().map(|i| &i.name).collect();
            if declared != recorded {
                return Err(corrupt(format!("{name}: inheritance expressions disagree with the definition")));
            }
        }
        for o in entry_objects.iter().filter(|o| o.kind != PlanKind::Index) {
            if !present(&o.name) {
                return Err(corrupt(format!("{name}: kernel object {} is missing", o.name)));
            }
        }
        let columns = kernel.introspect(name.as_str()).map_err(|e| corrupt(format!("{name}: {e}")))?;
        let expected: Vec<String> = entry_attrs.iter().map(|a| a.name.value.clone()).collect();
        if !columns.iter().map(|c| c.to_ascii_lowercase()).eq(expected.iter().map(|c| c.to_ascii_lowercase())) {
            return Err(corrupt(format!("{name}: kernel columns {columns:?} disagree with recorded {expected:?}")));
        }

        catalog.insert(Entry {
            name,
            kind,
            definition,
            attrs: entry_attrs,
            ies: entry_ies,
            objects: entry_objects,
            indexes,
            created_at,
        });
    }
    Ok(catalog)
}

/// Recovers an index declaration (on the relation) from its kernel DDL.
fn index_decl(obj: &PlanObject, rel: &Ident) -> Result<CreateIndex> {
    match parse(&format!("{};", obj.ddl)).ok().and_then(|mut v| v.pop()) {
        Some(Statement::CreateIndex(mut ix)) => {
            ix.table = rel.clone();
            Ok(ix)
        }
        _ => Err(corrupt(format!("{rel}: index {} has unreadable DDL", obj.name))),
    }
}
