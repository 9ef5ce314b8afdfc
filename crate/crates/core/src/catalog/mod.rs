//! Registered relations, their compiled kernel objects and dependencies.

mod graph;
mod scheme;
mod store;

use std::fmt;

use indexmap::IndexMap;

use crate::parser::visit::referenced_relations;
use crate::parser::{render_statement, CreateIndex, CreateView, Dialect, Ident, RenderError, Statement};

pub use graph::DependencyGraph;
pub use scheme::{ie_relations, Element, Scheme};
pub use store::{load, persist, META_TABLES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationKind {
    Stored,
    View,
    Sir,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Stored => "stored",
            RelationKind::View => "view",
            RelationKind::Sir => "sir",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "stored" => Some(RelationKind::Stored),
            "view" => Some(RelationKind::View),
            "sir" => Some(RelationKind::Sir),
            _ => None,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Definition {
    Table(Scheme),
    View(CreateView),
}

/// One visible attribute of a relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttrInfo {
    pub name: Ident,
    pub sql_type: Option<String>,
    pub is_key: bool,
    /// The IE producing this attribute; `None` for stored attributes.
    pub ie: Option<Ident>,
}

impl AttrInfo {
    pub fn is_inherited(&self) -> bool {
        self.ie.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IeInfo {
    pub name: Ident,
    /// The IE as declared.
    pub source_text: String,
    /// The IE as the recursive left-join (or scalar/value) query it stands for.
    pub canonical_text: String,
    pub produces: Vec<Ident>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanKind {
    Table,
    View,
    Index,
}

impl PlanKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanKind::Table => "table",
            PlanKind::View => "view",
            PlanKind::Index => "index",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "table" => Some(PlanKind::Table),
            "view" => Some(PlanKind::View),
            "index" => Some(PlanKind::Index),
            _ => None,
        }
    }
}

/// A kernel object owned by a relation, with the DDL that creates it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanObject {
    pub name: String,
    pub kind: PlanKind,
    pub ddl: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: Ident,
    pub kind: RelationKind,
    pub definition: Definition,
    pub attrs: Vec<AttrInfo>,
    pub ies: Vec<IeInfo>,
    /// Tables and views in creation order, then indexes.
    pub objects: Vec<PlanObject>,
    pub indexes: Vec<CreateIndex>,
    pub created_at: u64,
}

impl Entry {
    pub fn scheme(&self) -> Option<&Scheme> {
        match &self.definition {
            Definition::Table(s) => Some(s),
            Definition::View(_) => None,
        }
    }

    pub fn scheme_mut(&mut self) -> Option<&mut Scheme> {
        match &mut self.definition {
            Definition::Table(s) => Some(s),
            Definition::View(_) => None,
        }
    }

    pub fn attr_names(&self) -> Vec<Ident> {
        self.attrs.iter().map(|a| a.name.clone()).collect()
    }

    pub fn attr(&self, name: &str) -> Option<&AttrInfo> {
        self.attrs.iter().find(|a| a.name.matches(name))
    }

    /// Name of the kernel table holding the stored attributes.
    pub fn base_table(&self) -> Option<Ident> {
        match self.kind {
            RelationKind::Sir => Some(base_name(&self.name)),
            RelationKind::Stored => Some(self.name.clone()),
            RelationKind::View => None,
        }
    }

    /// Relations this one reads, as written (base names like `SP_B` kept).
    pub fn reads(&self) -> Vec<Ident> {
        match &self.definition {
            Definition::Table(s) => s.ie_relations(),
            Definition::View(v) => referenced_relations(&v.query).into_iter().filter(|r| r != &self.name).collect(),
        }
    }

    /// The definition as re-parseable sirsql text.
    pub fn definition_text(&self) -> Result<String, RenderError> {
        let stmt = match &self.definition {
            Definition::Table(s) => Statement::CreateTable(s.to_create()),
            Definition::View(v) => Statement::CreateView(v.clone()),
        };
        render_statement(&stmt, &Dialect::sirsql())
    }

    pub fn kernel_objects(&self) -> impl Iterator<Item = &PlanObject> {
        self.objects.iter().filter(|o| o.kind != PlanKind::Index)
    }
}

pub fn base_name(rel: &Ident) -> Ident {
    Ident::new(format!("{}_B", rel.value))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    entries: IndexMap<String, Entry>,
    next_seq: u64,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Entry> {
        self.entries.get(&name.to_ascii_lowercase())
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Entry> {
        self.entries.get_mut(&name.to_ascii_lowercase())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.entries.values()
    }

    pub fn entries_mut(&mut self) -> impl Iterator<Item = &mut Entry> {
        self.entries.values_mut()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn next_seq(&mut self) -> u64 {
        self.next_seq += 1;
        self.next_seq
    }

    /// Adds or replaces an entry, keeping its registration slot.
    pub fn insert(&mut self, entry: Entry) {
        self.next_seq = self.next_seq.max(entry.created_at);
        self.entries.insert(entry.name.key(), entry);
    }

    pub fn remove(&mut self, name: &str) -> Option<Entry> {
        self.entries.shift_remove(&name.to_ascii_lowercase())
    }

    /// For a base-table name `X_B` of a registered SIR `X`, returns `X`.
    pub fn base_owner(&self, name: &str) -> Option<&Entry> {
        let stem = name.strip_suffix("_B").or_else(|| name.strip_suffix("_b"))?;
        self.get(stem).filter(|e| e.kind == RelationKind::Sir)
    }

    /// Columns readable under `name`: a registered relation, or an SIR's base.
    pub fn columns_of(&self, name: &str) -> Option<Vec<Ident>> {
        if let Some(e) = self.get(name) {
            return Some(e.attr_names());
        }
        self.base_owner(name).and_then(|e| e.scheme()).map(|s| s.stored_names())
    }

    /// The relation owning `name`, whether `name` is the relation or its base.
    pub fn owner_of(&self, name: &str) -> Option<&Entry> {
        self.get(name).or_else(|| self.base_owner(name))
    }

    /// Why `name` cannot be given to a new relation, if anything.
    pub fn reserved_reason(&self, name: &str) -> Option<String> {
        if name.get(..4).is_some_and(|p| p.eq_ignore_ascii_case("sir_")) {
            return Some("the sir_ prefix belongs to the catalog tables".into());
        }
        if let Some((stem, suffix)) = name.rsplit_once('_') {
            let generated = suffix.eq_ignore_ascii_case("B") || (!suffix.is_empty() && suffix.bytes().all(|b| b.is_ascii_digit()));
            if generated && self.get(stem).is_some_and(|e| e.kind == RelationKind::Sir) {
                return Some(format!("it names a kernel object of {stem}"));
            }
        }
        None
    }

    pub fn graph(&self) -> DependencyGraph {
        let mut g = DependencyGraph::new();
        for e in self.entries() {
            g.add_node(&e.name);
            for r in e.reads() {
                g.add_edge(&e.name, &r);
            }
        }
        g
    }

    /// Entries with dependencies first. Base tables exist before any view,
    /// so reads of them impose no order.
    pub fn topo_order(&self) -> Result<Vec<Ident>, Vec<Ident>> {
        let mut g = DependencyGraph::new();
        for e in self.entries() {
            g.add_node(&e.name);
            for r in e.reads() {
                if self.base_owner(r.as_str()).is_none() {
                    g.add_edge(&e.name, &r);
                }
            }
        }
        Ok(g.topo_order()?.into_iter().filter(|n| self.contains(n.as_str())).collect())
    }

    /// Relations reading `name` or its base directly, or holding a foreign key to it.
    pub fn direct_dependents(&self, name: &str) -> Vec<Ident> {
        let target = Ident::new(name);
        let base = base_name(&target);
        let mut out: Vec<Ident> = Vec::new();
        for e in self.entries() {
            if e.name == target {
                continue;
            }
            let reads = e.reads().iter().any(|r| r == &target || r == &base);
            let refs = e.scheme().is_some_and(|s| s.foreign_keys().iter().any(|(_, f)| f.table == target || f.table == base));
            if (reads || refs) && !out.contains(&e.name) {
                out.push(e.name.clone());
            }
        }
        out
    }

    /// Transitive closure of `direct_dependents`, nearest first.
    pub fn dependents_of(&self, name: &str) -> Vec<Ident> {
        let mut out: Vec<Ident> = Vec::new();
        let mut frontier = vec![Ident::new(name)];
        while let Some(n) = frontier.pop() {
            for d in self.direct_dependents(n.as_str()) {
                if !d.matches(name) && !out.contains(&d) {
                    out.push(d.clone());
                    frontier.push(d);
                }
            }
        }
        out
    }

    /// The entry and index declaration owning an index name.
    pub fn index(&self, name: &str) -> Option<(&Entry, &CreateIndex)> {
        self.entries().find_map(|e| e.indexes.iter().find(|i| i.name.matches(name)).map(|i| (e, i)))
    }

    /// Every kernel object the catalog owns, with its owner.
    pub fn objects(&self) -> impl Iterator<Item = (&Entry, &PlanObject)> {
        self.entries().flat_map(|e| e.objects.iter().map(move |o| (e, o)))
    }
}
