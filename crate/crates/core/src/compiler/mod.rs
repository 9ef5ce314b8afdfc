//! Compilation of sirsql DDL into kernel objects.

mod bps;
mod ddl;
mod migrate;
mod order;
pub mod resolve;
mod rewrite;
mod star;

use crate::kernel::{Capabilities, Kernel};
use crate::parser::ast::*;
use crate::parser::visit::{walk_expr, VisitMut};
use crate::parser::QuoteStyle;

pub use bps::{compile_table, resolved_ies, CompiledTable};
pub(crate) use bps::{query_of, rename_stage, stage_from};
pub use ddl::{plan, Change};
pub use migrate::migrate;
pub use order::order_ies;
pub use rewrite::rewrite_to_base;
pub use star::expand_query;

/// Optional plan rewrites. All default off; none changes query results.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CompileOptions {
    /// Fold the last IE into the reordering view instead of a stage of its own.
    pub skip_redundant_full_view: bool,
    /// Merge consecutive value IEs into one stage.
    pub collapse_value_ies: bool,
    /// Break a dependency cycle by reading the other relation's base table.
    pub rewrite_to_base: bool,
}

/// What the compiler needs to know about the kernel it emits for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Target {
    pub caps: Capabilities,
    pub quote: QuoteStyle,
}

impl Target {
    pub fn of<K: Kernel + ?Sized>(kernel: &K) -> Self {
        Target { caps: kernel.capabilities(), quote: kernel.quote_style() }
    }

    /// A kernel with every capability, quoting with brackets.
    pub fn full() -> Self {
        Target {
            caps: Capabilities { left_join: true, scalar_subquery: true, string_aggregation: true, conditional: true },
            quote: QuoteStyle::Bracket,
        }
    }
}

pub(crate) fn contains_subquery(e: &Expr) -> bool {
    struct Find(bool);
    impl VisitMut for Find {
        fn query(&mut self, _q: &mut Query) {
            self.0 = true;
        }
        fn expr(&mut self, e: &mut Expr) {
            walk_expr(self, e);
        }
    }
    let mut f = Find(false);
    f.expr(&mut e.clone());
    f.0
}
