//! Dependency-driven schema design for SIRs: closures, normal-form tests on
//! the stored part of a scheme, and the Heath and Fagin decompositions that
//! leave inheritance expressions in place of split-off attributes.

mod decompose;
mod input;
mod lossless;

use std::fmt;

pub use decompose::{fagin_decompose, heath_decompose, normalize, NormalizeOptions, Normalized};
pub use input::{parse_problem, render_trace, to_sirsql, Problem};
pub use lossless::{lossless_check, stored_value_count};

/// A set of attributes of one universe, as a bitmask over attribute positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct AttrSet(pub u128);

impl AttrSet {
    pub const MAX: usize = 128;

    pub fn empty() -> Self {
        AttrSet(0)
    }

    pub fn single(i: usize) -> Self {
        AttrSet(1 << i)
    }

    /// The first `n` attributes.
    pub fn first(n: usize) -> Self {
        if n >= Self::MAX {
            AttrSet(u128::MAX)
        } else {
            AttrSet((1u128 << n) - 1)
        }
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Self {
        AttrSet(self.0 | 1 << i)
    }

    pub fn union(self, o: Self) -> Self {
        AttrSet(self.0 | o.0)
    }

    pub fn inter(self, o: Self) -> Self {
        AttrSet(self.0 & o.0)
    }

    pub fn minus(self, o: Self) -> Self {
        AttrSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Positions in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..Self::MAX).filter(move |&i| self.contains(i))
    }

    /// Every subset, smallest first, then by position order.
    pub fn subsets(self) -> Vec<AttrSet> {
        let idx: Vec<usize> = self.iter().collect();
        let mut out: Vec<AttrSet> = (0u64..1 << idx.len())
            .map(|m| idx.iter().enumerate().filter(|(b, _)| m >> b & 1 == 1).fold(AttrSet::empty(), |s, (_, &i)| s.with(i)))
            .collect();
        out.sort_by_key(|s| (s.len(), s.iter().collect::<Vec<_>>()));
        out
    }
}

/// The attribute names sets refer to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub names: Vec<String>,
}

impl Universe {
    pub fn new(names: Vec<String>) -> Self {
        Universe { names }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n.eq_ignore_ascii_case(name))
    }

    pub fn all(&self) -> AttrSet {
        AttrSet::first(self.names.len())
    }

    pub fn set(&self, names: &[&str]) -> Option<AttrSet> {
        names.iter().try_fold(AttrSet::empty(), |s, n| self.index_of(n).map(|i| s.with(i)))
    }

    pub fn names_of(&self, s: AttrSet) -> Vec<&str> {
        s.iter().map(|i| self.names[i].as_str()).collect()
    }

    pub fn show(&self, s: AttrSet) -> String {
        self.names_of(s).join(", ")
    }
}

/// Projection names a dependency line asks for.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Hint {
    /// The projection split off by the dependency.
    pub name: String,
    /// A new name for what remains.
    pub rest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fd {
    pub lhs: AttrSet,
    pub rhs: AttrSet,
    pub hint: Option<Hint>,
}

impl Fd {
    pub fn new(lhs: AttrSet, rhs: AttrSet) -> Self {
        Fd { lhs, rhs, hint: None }
    }
}

/// `lhs ->> branch | rest`, the rest being whatever the scheme holds besides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mvd {
    pub lhs: AttrSet,
    pub branch: AttrSet,
    pub hint: Option<Hint>,
}

/// An inheritance expression of a draft: `produces` read from `source`
/// where the `join` attributes agree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IeDraft {
    pub name: String,
    pub source: String,
    pub produces: AttrSet,
    pub join: AttrSet,
    /// Written as every source column except the join attributes.
    pub star: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeDraft {
    pub name: String,
    /// Stored and inherited attributes.
    pub attrs: AttrSet,
    pub stored: AttrSet,
    pub ies: Vec<IeDraft>,
    pub key: AttrSet,
}

impl SchemeDraft {
    pub fn inherited(&self) -> AttrSet {
        self.attrs.minus(self.stored)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Heath,
    Fagin,
}

impl fmt::Display for StepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepKind::Heath => "Heath",
            StepKind::Fagin => "Fagin",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionStep {
    pub kind: StepKind,
    pub input: SchemeDraft,
    pub dependency: String,
    /// The split-off projection, then the remainder.
    pub outputs: [SchemeDraft; 2],
    /// Inheritance expressions the step generated.
    pub ies: Vec<IeDraft>,
    pub note: Option<String>,
}

/// Least fixpoint of `attrs` under `fds`.
pub fn attribute_closure(attrs: AttrSet, fds: &[Fd]) -> AttrSet {
    let mut out = attrs;
    loop {
        let next = fds.iter().filter(|f| f.lhs.is_subset(out)).fold(out, |s, f| s.union(f.rhs));
        if next == out {
            return out;
        }
        out = next;
    }
}

/// A minimal key of the stored attributes, dropping later attributes first.
pub fn minimal_key(stored: AttrSet, fds: &[Fd]) -> AttrSet {
    let mut key = stored;
    let idx: Vec<usize> = stored.iter().collect();
    for &i in idx.iter().rev() {
        let k = key.minus(AttrSet::single(i));
        if !k.is_empty() && stored.is_subset(attribute_closure(k, fds)) {
            key = k;
        }
    }
    key
}

/// A subset of the stored attributes that determines more of them without
/// being a superkey, with what it determines.
fn violating_lhs(stored: AttrSet, fds: &[Fd]) -> Option<(AttrSet, AttrSet)> {
    let check = |y: AttrSet| {
        let c = attribute_closure(y, fds);
        let rhs = c.inter(stored).minus(y);
        (!rhs.is_empty() && !stored.is_subset(c)).then_some((y, rhs))
    };
    let mut declared: Vec<AttrSet> = fds.iter().map(|f| f.lhs).filter(|l| l.is_subset(stored)).collect();
    declared.sort_by_key(|s| (s.len(), s.iter().collect::<Vec<_>>()));
    declared.dedup();
    declared.into_iter().find_map(check).or_else(|| stored.subsets().into_iter().filter(|y| !y.is_empty()).find_map(check))
}

/// BCNF of the stored part: every nontrivial FD projected onto it has a superkey lhs.
pub fn is_bcnf(draft: &SchemeDraft, fds: &[Fd]) -> bool {
    violating_lhs(draft.stored, fds).is_none()
}

/// A declared MVD that is nontrivial on the stored part and whose lhs is no superkey.
pub(crate) fn violating_mvd<'a>(draft: &SchemeDraft, fds: &[Fd], mvds: &'a [Mvd]) -> Option<&'a Mvd> {
    let s = draft.stored;
    mvds.iter().find(|m| {
        let b = m.branch.inter(s).minus(m.lhs);
        let c = s.minus(m.lhs).minus(b);
        m.lhs.is_subset(s) && !b.is_empty() && !c.is_empty() && !s.is_subset(attribute_closure(m.lhs, fds))
    })
}

pub fn is_4nf(draft: &SchemeDraft, fds: &[Fd], mvds: &[Mvd]) -> bool {
    is_bcnf(draft, fds) && violating_mvd(draft, fds, mvds).is_none()
}

#[cfg(test)]
mod tests;
