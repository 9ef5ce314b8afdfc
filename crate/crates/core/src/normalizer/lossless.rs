use std::collections::BTreeSet;

use super::{AttrSet, DecompositionStep, SchemeDraft, Universe};
use crate::error::{Error, Result};
use crate::kernel::{RowSet, Value};

/// Rows keyed by a textual image of each value, so sets compare exactly.
type Tuple = Vec<String>;

fn image(v: &Value) -> String {
    match v {
        Value::Null => "\0null".into(),
        Value::Integer(i) => format!("i{i}"),
        Value::Real(r) => format!("r{r}"),
        Value::Text(t) => format!("t{t}"),
    }
}

fn positions(u: &Universe, instance: &RowSet, attrs: AttrSet) -> Result<Vec<usize>> {
    u.names_of(attrs)
        .into_iter()
        .map(|n| {
            instance
                .columns
                .iter()
                .position(|c| c.eq_ignore_ascii_case(n))
                .ok_or_else(|| Error::SchemaMismatch(format!("instance has no column {n}")))
        })
        .collect()
}

fn project(instance: &RowSet, cols: &[usize]) -> BTreeSet<Tuple> {
    instance.rows.iter().map(|r| cols.iter().map(|&c| image(&r[c])).collect()).collect()
}

/// Projects the instance onto both outputs' stored attributes, joins them
/// back on the shared ones and compares with the original.
pub fn lossless_check(u: &Universe, step: &DecompositionStep, instance: &RowSet) -> Result<bool> {
    let input = step.input.stored;
    if instance.columns.len() != input.len() {
        return Err(Error::SchemaMismatch(format!(
            "instance has {} columns, {} stores {}",
            instance.columns.len(),
            step.input.name,
            input.len()
        )));
    }
    let all = positions(u, instance, input)?;
    let original = project(instance, &all);
    let [l, r] = [&step.outputs[0], &step.outputs[1]].map(|o| o.stored);
    if l.union(r) != input {
        return Err(Error::SchemaMismatch("outputs do not cover the input's stored attributes".into()));
    }
    let left = project(instance, &positions(u, instance, l)?);
    let right = project(instance, &positions(u, instance, r)?);
    let order: Vec<usize> = input.iter().collect();
    let li: Vec<usize> = l.iter().collect();
    let ri: Vec<usize> = r.iter().collect();
    let shared: Vec<(usize, usize)> = l.inter(r).iter().map(|a| (li.iter().position(|&x| x == a).unwrap(), ri.iter().position(|&x| x == a).unwrap())).collect();
    let mut joined = BTreeSet::new();
    for a in &left {
        for b in right.iter().filter(|b| shared.iter().all(|&(x, y)| a[x] == b[y])) {
            let row: Tuple = order
                .iter()
                .map(|attr| match li.iter().position(|x| x == attr) {
                    Some(p) => a[p].clone(),
                    None => b[ri.iter().position(|x| x == attr).unwrap()].clone(),
                })
                .collect();
            joined.insert(row);
        }
    }
    Ok(joined == original)
}

/// Distinct projected rows times stored attributes, summed over schemes.
pub fn stored_value_count(u: &Universe, schemes: &[SchemeDraft], instance: &RowSet) -> Result<usize> {
    schemes.iter().try_fold(0, |acc, s| {
        let cols = positions(u, instance, s.stored)?;
        Ok(acc + project(instance, &cols).len() * cols.len())
    })
}
