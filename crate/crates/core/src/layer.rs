//! The SIR layer: a client of the kernel that compiles schema statements,
//! routes data statements, and keeps its catalog in kernel meta-tables.

use crate::catalog::{self, AttrInfo, Catalog, Definition, PlanKind, RelationKind};
use crate::compiler::{plan, CompileOptions, Target};
use crate::error::{Error, Result};
use crate::kernel::{within_transaction, Kernel, KernelObject, Outcome, RowSet};
use crate::parser::{parse, quote_ident, render_statement, Dialect, Ident, Statement};
use crate::router::{self, Route, Violation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LayerOptions {
    pub compile: CompileOptions,
    /// Refuse inserts whose rows leave a join-form IE without a match.
    pub strict_integrity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StatementResult {
    /// A schema change: the kernel statements run and any rewrite notes.
    Schema { statements: Vec<String>, notes: Vec<String> },
    Rows(RowSet),
    Affected(usize),
}

pub struct SirLayer<K: Kernel> {
    kernel: K,
    catalog: Catalog,
    options: LayerOptions,
}

impl<K: Kernel> SirLayer<K> {
    /// Opens the layer over a kernel, loading any catalog it already holds.
    pub fn open(mut kernel: K, options: LayerOptions) -> Result<Self> {
        let catalog = catalog::load(&mut kernel)?;
        Ok(SirLayer { kernel, catalog, options })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn options(&self) -> &LayerOptions {
        &self.options
    }

    pub fn kernel_mut(&mut self) -> &mut K {
        &mut self.kernel
    }

    pub fn into_kernel(self) -> K {
        self.kernel
    }

    fn target(&self) -> Target {
        Target::of(&self.kernel)
    }

    /// Parses and runs a script, stopping at the first failure.
    pub fn execute_script(&mut self, text: &str) -> Result<Vec<StatementResult>> {
        parse(text)?.iter().map(|s| self.execute(s)).collect()
    }

    pub fn execute(&mut self, stmt: &Statement) -> Result<StatementResult> {
        let text = render_statement(stmt, &Dialect::sirsql()).unwrap_or_default();
        let out = if stmt.is_ddl() { self.schema(stmt) } else { self.data(stmt) };
        out.map_err(|e| e.with_statement(&text))
    }

    /// Runs one statement of the sirsql dialect.
    pub fn execute_sql(&mut self, sql: &str) -> Result<StatementResult> {
        let stmts = parse(sql)?;
        let mut last = StatementResult::Affected(0);
        for s in &stmts {
            last = self.execute(s)?;
        }
        Ok(last)
    }

    /// Runs a query and returns its rows.
    pub fn query(&mut self, sql: &str) -> Result<RowSet> {
        match self.execute_sql(sql)? {
            StatementResult::Rows(r) => Ok(r),
            _ => Ok(RowSet::default()),
        }
    }

    fn schema(&mut self, stmt: &Statement) -> Result<StatementResult> {
        let change = plan(stmt, &self.catalog, &self.options.compile, &self.target())?;
        let owned: Vec<String> = self.catalog.objects().map(|(_, o)| o.name.to_ascii_lowercase()).collect();
        let mut next = change.catalog;
        let statements = change.statements;
        within_transaction(&mut self.kernel, |k| -> Result<()> {
            let existing = user_objects(k)?;
            for (_, o) in next.objects() {
                let lower = o.name.to_ascii_lowercase();
                if o.kind != PlanKind::Index
                    && !owned.contains(&lower)
                    && existing.iter().any(|x| x.name.eq_ignore_ascii_case(&o.name))
                {
                    return Err(Error::NameCollision(o.name.clone()));
                }
            }
            for s in &statements {
                k.execute(s).map_err(|e| Error::from(e).with_statement(s))?;
            }
            settle(k, &mut next)?;
            catalog::persist(k, &next)
        })?;
        self.catalog = next;
        Ok(StatementResult::Schema { statements, notes: change.notes })
    }

    fn data(&mut self, stmt: &Statement) -> Result<StatementResult> {
        let routed = router::route(stmt, &self.catalog)?;
        let dialect = Dialect::kernel(self.kernel.quote_style());
        match routed.route {
            Route::Rejected(reason) => {
                let relation = match stmt {
                    Statement::Insert(i) => i.table.value.clone(),
                    Statement::Update(u) => u.table.value.clone(),
                    Statement::Delete(d) => d.table.value.clone(),
                    _ => String::new(),
                };
                Err(Error::RejectedWrite { relation, reason })
            }
            Route::PassThrough(Statement::Query(q)) => {
                let sql = render_statement(&Statement::Query(q), &dialect)?;
                Ok(StatementResult::Rows(self.kernel.query(&sql).map_err(|e| Error::from(e).with_statement(&sql))?))
            }
            Route::PassThrough(s) => {
                let sql = render_statement(&s, &dialect)?;
                let n = within_transaction(&mut self.kernel, |k| k.execute(&sql).map_err(|e| Error::from(e).with_statement(&sql)))?;
                Ok(affected(n))
            }
            Route::BaseRewrite { statement, .. } => {
                let sql = render_statement(&statement, &dialect)?;
                let strict = self.options.strict_integrity && matches!(stmt, Statement::Insert(_));
                let entry = match stmt {
                    Statement::Insert(i) => self.catalog.get(i.table.as_str()),
                    _ => None,
                };
                let catalog = &self.catalog;
                let n = within_transaction(&mut self.kernel, |k| -> Result<Outcome> {
                    let before = match (strict, entry) {
                        (true, Some(e)) => router::base_keys(e, k)?,
                        _ => Vec::new(),
                    };
                    let n = k.execute(&sql).map_err(|e| Error::from(e).with_statement(&sql))?;
                    if let (true, Some(e)) = (strict, entry) {
                        router::enforce_insert_computability(e, catalog, &before, k)?;
                    }
                    Ok(n)
                })?;
                Ok(affected(n))
            }
        }
    }

    /// The kernel statements behind a relation, in creation order.
    pub fn explain(&self, relation: &str) -> Result<Vec<String>> {
        let e = self.catalog.get(relation).ok_or_else(|| Error::UnknownRelation(relation.to_string()))?;
        Ok(e.objects.iter().map(|o| o.ddl.clone()).collect())
    }

    pub fn check(&mut self, relation: &str) -> Result<Vec<Violation>> {
        router::check_ie_integrity(relation, &self.catalog, &mut self.kernel)
    }

    /// Tables and views in the kernel, meta-tables excluded.
    pub fn kernel_objects(&mut self) -> Result<Vec<KernelObject>> {
        user_objects(&mut self.kernel)
    }
}

fn affected(o: Outcome) -> StatementResult {
    match o {
        Outcome::Affected(n) => StatementResult::Affected(n),
        Outcome::Rows(r) => StatementResult::Rows(r),
    }
}

fn user_objects<K: Kernel + ?Sized>(k: &mut K) -> Result<Vec<KernelObject>> {
    Ok(k.objects()?.into_iter().filter(|o| !is_meta(&o.name)).collect())
}

fn is_meta(name: &str) -> bool {
    name.get(..4).is_some_and(|p| p.eq_ignore_ascii_case("sir_"))
}

/// Fills view attributes from the kernel and probes every view, so a view
/// left dangling by the change fails the whole transaction.
fn settle<K: Kernel + ?Sized>(k: &mut K, catalog: &mut Catalog) -> Result<()> {
    let q = k.quote_style();
    for e in catalog.entries_mut() {
        for o in e.objects.iter().filter(|o| o.kind == PlanKind::View) {
            let sql = format!("SELECT * FROM {} LIMIT 0", quote_ident(&o.name, q));
            k.query(&sql).map_err(|err| Error::from(err).with_statement(&o.ddl))?;
        }
        let columns = k.introspect(e.name.as_str())?;
        match (&e.definition, e.kind) {
            (Definition::View(_), _) => {
                e.attrs = columns
                    .into_iter()
                    .map(|c| AttrInfo { name: Ident::new(c), sql_type: None, is_key: false, ie: None })
                    .collect();
            }
            (_, RelationKind::Sir | RelationKind::Stored) => {
                let expected: Vec<String> = e.attrs.iter().map(|a| a.name.value.clone()).collect();
                if !columns.iter().map(|c| c.to_ascii_lowercase()).eq(expected.iter().map(|c| c.to_ascii_lowercase())) {
                    return Err(Error::invariant(
                        &e.name,
                        format!("kernel columns {columns:?} differ from declared {expected:?}"),
                    ));
                }
            }
            _ => {}
        }
    }
    Ok(())
}
