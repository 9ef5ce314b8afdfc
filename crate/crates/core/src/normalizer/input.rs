use std::fmt::Write as _;

use super::{minimal_key, AttrSet, DecompositionStep, Fd, Hint, Mvd, SchemeDraft, Universe};
use crate::error::{Error, Result};

/// A universal relation and the dependencies declared over it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub relation: String,
    pub universe: Universe,
    pub fds: Vec<Fd>,
    pub mvds: Vec<Mvd>,
}

impl Problem {
    /// The starting draft: everything stored.
    pub fn universal(&self) -> SchemeDraft {
        let all = self.universe.all();
        SchemeDraft { name: self.relation.clone(), attrs: all, stored: all, ies: Vec::new(), key: minimal_key(all, &self.fds) }
    }
}

fn bad(line: usize, message: impl Into<String>) -> Error {
    Error::InputFormat { line, message: message.into() }
}

fn split_names(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

/// Reads `RELATION U(a, b, ...)` followed by lines `A, B -> C` and
/// `A ->> B | C`, each optionally ending in `as NAME` or `as NAME, REST`.
/// Blank lines and lines starting with `#` or `--` are skipped.
pub fn parse_problem(text: &str) -> Result<Problem> {
    let mut header: Option<(String, Universe)> = None;
    let mut fds = Vec::new();
    let mut mvds = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with("--") {
            continue;
        }
        let Some((_, u)) = &header else {
            let body = t
                .get(..8)
                .filter(|k| k.eq_ignore_ascii_case("relation"))
                .map(|_| t[8..].trim())
                .ok_or_else(|| bad(line, "expected RELATION NAME(attr, ...)"))?;
            let open = body.find('(').ok_or_else(|| bad(line, "missing ( in relation header"))?;
            let close = body.rfind(')').filter(|&c| c > open).ok_or_else(|| bad(line, "missing ) in relation header"))?;
            let name = body[..open].trim();
            if name.is_empty() {
                return Err(bad(line, "relation name missing"));
            }
            let attrs: Vec<String> = split_names(&body[open + 1..close]).into_iter().map(String::from).collect();
            if attrs.is_empty() || attrs.len() > AttrSet::MAX {
                return Err(bad(line, format!("a relation takes 1 to {} attributes", AttrSet::MAX)));
            }
            for (i, a) in attrs.iter().enumerate() {
                if attrs[..i].iter().any(|b| b.eq_ignore_ascii_case(a)) {
                    return Err(bad(line, format!("attribute {a} listed twice")));
                }
            }
            header = Some((name.to_string(), Universe::new(attrs)));
            continue;
        };
        let (dep, hint) = match t.to_ascii_lowercase().find(" as ") {
            Some(p) => {
                let names = split_names(&t[p + 4..]);
                let hint = match names.as_slice() {
                    [n] => Hint { name: n.to_string(), rest: None },
                    [n, r] => Hint { name: n.to_string(), rest: Some(r.to_string()) },
                    _ => return Err(bad(line, "expected as NAME or as NAME, REST")),
                };
                (&t[..p], Some(hint))
            }
            None => (t, None),
        };
        let set = |s: &str| -> Result<AttrSet> {
            let names = split_names(s);
            if names.is_empty() {
                return Err(bad(line, "empty attribute list"));
            }
            names.iter().try_fold(AttrSet::empty(), |acc, n| {
                u.index_of(n).map(|i| acc.with(i)).ok_or_else(|| bad(line, format!("unknown attribute {n}")))
            })
        };
        if let Some((l, r)) = dep.split_once("->>") {
            let lhs = set(l)?;
            let (b, c) = match r.split_once('|') {
                Some((b, c)) => (set(b)?, Some(set(c)?)),
                None => (set(r)?, None),
            };
            let rest = u.all().minus(lhs).minus(b);
            if !b.inter(lhs).is_empty() {
                return Err(bad(line, "branch overlaps the lhs"));
            }
            if rest.is_empty() {
                return Err(bad(line, "trivial MVD: nothing besides lhs and branch"));
            }
            if c.is_some_and(|c| c != rest) {
                return Err(bad(line, "complement must hold every other attribute"));
            }
            mvds.push(Mvd { lhs, branch: b, hint });
        } else if let Some((l, r)) = dep.split_once("->") {
            fds.push(Fd { lhs: set(l)?, rhs: set(r)?, hint });
        } else {
            return Err(bad(line, "expected -> or ->>"));
        }
    }
    let (relation, universe) = header.ok_or_else(|| bad(0, "missing RELATION header"))?;
    Ok(Problem { relation, universe, fds, mvds })
}

fn topo(drafts: &[SchemeDraft]) -> Vec<&SchemeDraft> {
    let mut out: Vec<&SchemeDraft> = Vec::new();
    let mut left: Vec<&SchemeDraft> = drafts.iter().collect();
    while !left.is_empty() {
        let ready = left.iter().position(|d| {
            d.ies.iter().all(|ie| {
                ie.source == d.name
                    || out.iter().any(|o| o.name == ie.source)
                    || !drafts.iter().any(|x| x.name == ie.source)
            })
        });
        out.push(left.remove(ready.unwrap_or(0)));
    }
    out
}

/// Create Table statements for the drafts, sources before their readers.
pub fn to_sirsql(u: &Universe, drafts: &[SchemeDraft]) -> String {
    let mut out = String::new();
    for d in topo(drafts) {
        let mut parts: Vec<String> = u.names_of(d.stored).iter().map(|s| s.to_string()).collect();
        for ie in &d.ies {
            let list = if ie.star {
                match u.names_of(ie.join).as_slice() {
                    [one] => format!("*/{one}"),
                    many => format!("*/({})", many.join(", ")),
                }
            } else {
                u.show(ie.produces)
            };
            let on: Vec<String> = u.names_of(ie.join).iter().map(|a| format!("{}.{a} = {a}", d.name)).collect();
            parts.push(format!("{} (Select {list} From {} Where {})", ie.name, ie.source, on.join(" And ")));
        }
        parts.push(format!("Primary Key ({})", u.show(d.key)));
        let _ = writeln!(out, "Create Table {} ({});", d.name, parts.join(", "));
    }
    out
}

pub fn render_trace(u: &Universe, trace: &[DecompositionStep]) -> String {
    let mut out = String::new();
    for (i, s) in trace.iter().enumerate() {
        let _ = writeln!(out, "{}. {} on {} with {}", i + 1, s.kind, s.input.name, s.dependency);
        for o in &s.outputs {
            let ies: Vec<String> = o.ies.iter().map(|ie| format!("{} <- {}({})", ie.name, ie.source, u.show(ie.produces))).collect();
            let _ = write!(out, "   {} stored ({}) key ({})", o.name, u.show(o.stored), u.show(o.key));
            if !ies.is_empty() {
                let _ = write!(out, " inherits {}", ies.join("; "));
            }
            out.push('\n');
        }
        if let Some(n) = &s.note {
            let _ = writeln!(out, "   note: {n}");
        }
    }
    out
}
