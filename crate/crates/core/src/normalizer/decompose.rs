use std::collections::BTreeSet;

use super::{
    attribute_closure, is_4nf, minimal_key, violating_mvd, AttrSet, DecompositionStep, Fd, Hint, IeDraft, Mvd, SchemeDraft,
    StepKind, Universe,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Split on FDs before MVDs, which the optimal design forbids.
    pub heath_first: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub drafts: Vec<SchemeDraft>,
    pub trace: Vec<DecompositionStep>,
}

fn initials(u: &Universe, s: AttrSet) -> String {
    u.names_of(s)
        .iter()
        .filter_map(|n| n.chars().find(|c| c.is_ascii_alphanumeric()))
        .map(|c| c.to_ascii_uppercase())
        .collect()
}

fn ie_name(existing: &[IeDraft], source: &str) -> String {
    let base = format!("I_{source}");
    let taken = |n: &str| existing.iter().any(|i| i.name.eq_ignore_ascii_case(n));
    if !taken(&base) {
        return base;
    }
    (2..).map(|k| format!("{base}_{k}")).find(|n| !taken(n)).unwrap()
}

fn fd_text(u: &Universe, a: AttrSet, b: AttrSet) -> String {
    format!("{} -> {}", u.show(a), u.show(b))
}

/// The restated Heath split of `draft` on `fd`: AB keeps A and B stored,
/// the remainder keeps every attribute and inherits B from AB.
pub fn heath_decompose(u: &Universe, draft: &SchemeDraft, fd: &Fd, fds: &[Fd]) -> Result<DecompositionStep> {
    let hint = fd.hint.clone().unwrap_or_else(|| Hint { name: initials(u, fd.lhs), rest: None });
    let rest = hint.rest.clone().unwrap_or_else(|| draft.name.clone());
    heath(u, draft, fd.lhs, fd.rhs, fds, &hint.name, &rest)
}

fn heath(u: &Universe, draft: &SchemeDraft, a: AttrSet, b: AttrSet, fds: &[Fd], ab: &str, rest: &str) -> Result<DecompositionStep> {
    let dep = fd_text(u, a, b);
    if !a.is_subset(draft.stored) {
        return Err(Error::NotApplicable(format!("{dep}: lhs is not stored in {}", draft.name)));
    }
    let closure = attribute_closure(a, fds);
    if draft.stored.is_subset(closure) {
        return Err(Error::NotApplicable(format!("{dep}: lhs is a key of {}", draft.name)));
    }
    let b = b.inter(draft.stored).minus(a);
    if b.is_empty() {
        return Err(Error::NotApplicable(format!("{dep} is trivial in {}", draft.name)));
    }
    if !b.is_subset(closure) {
        return Err(Error::NotApplicable(format!("{dep} does not follow from the dependencies")));
    }
    let split = SchemeDraft { name: ab.to_string(), attrs: a.union(b), stored: a.union(b), ies: Vec::new(), key: minimal_key(a.union(b), fds) };
    let ie = IeDraft { name: ie_name(&draft.ies, ab), source: ab.to_string(), produces: b, join: a, star: true };
    let stored = draft.stored.minus(b);
    let mut ies = draft.ies.clone();
    ies.push(ie.clone());
    let remainder = SchemeDraft { name: rest.to_string(), attrs: draft.attrs, stored, ies, key: minimal_key(stored, fds) };
    Ok(DecompositionStep { kind: StepKind::Heath, input: draft.clone(), dependency: dep, outputs: [split, remainder], ies: vec![ie], note: None })
}

/// The restated Fagin split of `draft` on `mvd`. Each side inherits from the
/// other what A determines there.
pub fn fagin_decompose(u: &Universe, draft: &SchemeDraft, mvd: &Mvd, fds: &[Fd]) -> Result<DecompositionStep> {
    let hint = mvd.hint.clone().unwrap_or_else(|| {
        Hint { name: format!("{}{}", initials(u, mvd.lhs), initials(u, mvd.branch.minus(mvd.lhs))), rest: None }
    });
    let rest = hint.rest.clone().unwrap_or_else(|| draft.name.clone());
    fagin(u, draft, mvd, fds, &hint.name, &rest)
}

fn fagin(u: &Universe, draft: &SchemeDraft, mvd: &Mvd, fds: &[Fd], ab: &str, rest: &str) -> Result<DecompositionStep> {
    let a = mvd.lhs;
    let s = draft.stored;
    let b = mvd.branch.inter(s).minus(a);
    let c = s.minus(a).minus(b);
    let dep = format!("{} ->> {} | {}", u.show(a), u.show(b), u.show(c));
    if !a.is_subset(s) || b.is_empty() || c.is_empty() {
        return Err(Error::NotApplicable(format!("{dep} is trivial in {}", draft.name)));
    }
    let closure = attribute_closure(a, fds);
    let (b1, c1) = (closure.inter(b), closure.inter(c));

    let mut ab_ies = Vec::new();
    let mut ac_ies = Vec::new();
    for ie in &draft.ies {
        if ie.join.is_subset(a.union(c)) {
            ac_ies.push(ie.clone());
        } else if ie.join.is_subset(a.union(b)) {
            ab_ies.push(ie.clone());
        } else {
            return Err(Error::NotApplicable(format!("{dep} separates the join attributes of {}", ie.name)));
        }
    }
    let produced = |v: &[IeDraft]| v.iter().fold(AttrSet::empty(), |x, i| x.union(i.produces));
    let mut generated = Vec::new();
    let mut attrs_ab = a.union(b).union(produced(&ab_ies));
    if !c1.is_empty() {
        let ie = IeDraft { name: ie_name(&ab_ies, rest), source: rest.to_string(), produces: c1, join: a, star: false };
        attrs_ab = attrs_ab.union(c1);
        ab_ies.push(ie.clone());
        generated.push(ie);
    }
    let mut attrs_ac = a.union(c).union(produced(&ac_ies));
    if !b1.is_empty() {
        let ie = IeDraft { name: ie_name(&ac_ies, ab), source: ab.to_string(), produces: b1, join: a, star: false };
        attrs_ac = attrs_ac.union(b1);
        ac_ies.push(ie.clone());
        generated.push(ie);
    }
    let note = (!b1.is_empty() && !c1.is_empty()).then(|| format!("{ab} and {rest} inherit from each other"));
    let split = SchemeDraft { name: ab.to_string(), attrs: attrs_ab, stored: a.union(b), ies: ab_ies, key: minimal_key(a.union(b), fds) };
    let remainder = SchemeDraft { name: rest.to_string(), attrs: attrs_ac, stored: a.union(c), ies: ac_ies, key: minimal_key(a.union(c), fds) };
    Ok(DecompositionStep { kind: StepKind::Fagin, input: draft.clone(), dependency: dep, outputs: [split, remainder], ies: generated, note })
}

/// The FD to split on: smallest lhs, then earliest attributes; its rhs is
/// what the lhs determines directly, or failing that through the closure.
fn heath_candidate(draft: &SchemeDraft, fds: &[Fd]) -> Option<(AttrSet, AttrSet, Option<Hint>)> {
    let s = draft.stored;
    let mut lhs: Vec<AttrSet> = fds.iter().map(|f| f.lhs).filter(|l| l.is_subset(s)).collect();
    lhs.sort_by_key(|x| (x.len(), x.iter().collect::<Vec<_>>()));
    lhs.dedup();
    let pick = |a: AttrSet| -> Option<(AttrSet, AttrSet, Option<Hint>)> {
        let closure = attribute_closure(a, fds);
        if s.is_subset(closure) {
            return None;
        }
        let direct = fds.iter().filter(|f| f.lhs == a).fold(AttrSet::empty(), |x, f| x.union(f.rhs)).inter(s).minus(a);
        if !direct.is_empty() {
            let hint = fds.iter().filter(|f| f.lhs == a).find_map(|f| f.hint.clone());
            return Some((a, direct, hint));
        }
        let derived = closure.inter(s).minus(a);
        if derived.is_empty() {
            return None;
        }
        let hint = fds
            .iter()
            .filter(|f| f.hint.is_some() && !f.rhs.inter(derived).is_empty())
            .max_by_key(|f| (f.rhs.inter(derived).len(), std::cmp::Reverse(f.lhs)))
            .and_then(|f| f.hint.as_ref())
            .map(|h| Hint { name: h.name.clone(), rest: None });
        Some((a, derived, hint))
    };
    lhs.into_iter().find_map(pick).or_else(|| s.subsets().into_iter().filter(|x| !x.is_empty() && *x != s).find_map(pick))
}

fn unique(taken: &BTreeSet<String>, base: &str) -> String {
    let free = |n: &str| !taken.contains(&n.to_ascii_lowercase());
    if free(base) {
        return base.to_string();
    }
    (2..).map(|k| format!("{base}_{k}")).find(|n| free(n)).unwrap()
}

fn rename_source(drafts: &mut [SchemeDraft], old: &str, new: &str) {
    for d in drafts {
        for ie in d.ies.iter_mut().filter(|i| i.source == old) {
            ie.source = new.to_string();
            if ie.name == format!("I_{old}") {
                ie.name = format!("I_{new}");
            }
        }
    }
}

/// Decomposes `universal` until every draft is in 4NF on its stored part.
pub fn normalize(u: &Universe, universal: &SchemeDraft, fds: &[Fd], mvds: &[Mvd], options: NormalizeOptions) -> Result<Normalized> {
    let mut drafts = vec![universal.clone()];
    let mut trace = Vec::new();
    let mut taken: BTreeSet<String> = BTreeSet::from([universal.name.to_ascii_lowercase()]);
    let limit = 2 * universal.attrs.len() + 2;
    while let Some(i) = drafts.iter().position(|d| !is_4nf(d, fds, mvds)) {
        let d = drafts[i].clone();
        if trace.len() >= limit {
            return Err(Error::NoProgress(format!("{} still violates after {} steps", d.name, trace.len())));
        }
        let mvd = violating_mvd(&d, fds, mvds);
        let fd = heath_candidate(&d, fds);
        let step = match (mvd, fd) {
            (Some(m), f) if !options.heath_first || f.is_none() => {
                let hint = m.hint.clone().unwrap_or_else(|| Hint {
                    name: format!("{}{}", initials(u, m.lhs), initials(u, m.branch.minus(m.lhs))),
                    rest: None,
                });
                let ab = unique(&taken, &hint.name);
                let rest = rest_name(&taken, &d.name, hint.rest.as_deref(), &ab);
                fagin(u, &d, m, fds, &ab, &rest)?
            }
            (_, Some((a, b, hint))) => {
                let hint = hint.unwrap_or_else(|| Hint { name: initials(u, a), rest: None });
                let ab = unique(&taken, &hint.name);
                let rest = rest_name(&taken, &d.name, hint.rest.as_deref(), &ab);
                heath(u, &d, a, b, fds, &ab, &rest)?
            }
            _ => return Err(Error::NoProgress(format!("{} fails 4NF but no declared dependency splits it", d.name))),
        };
        let [split, remainder] = step.outputs.clone();
        if split.stored == d.stored || remainder.stored == d.stored {
            return Err(Error::NoProgress(format!("{} on {} keeps every stored attribute", step.dependency, d.name)));
        }
        if remainder.name != d.name {
            rename_source(&mut drafts, &d.name, &remainder.name);
        }
        taken.insert(split.name.to_ascii_lowercase());
        taken.insert(remainder.name.to_ascii_lowercase());
        drafts[i] = remainder;
        drafts.insert(i, split);
        trace.push(step);
    }
    Ok(Normalized { drafts, trace })
}

fn rest_name(taken: &BTreeSet<String>, current: &str, wanted: Option<&str>, ab: &str) -> String {
    match wanted {
        Some(w) if !w.eq_ignore_ascii_case(current) => {
            let mut t = taken.clone();
            t.insert(ab.to_ascii_lowercase());
            unique(&t, w)
        }
        _ => current.to_string(),
    }
}
