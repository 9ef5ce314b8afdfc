use super::resolve::ResolvedIe;
use crate::error::{Error, Result};
use crate::parser::Ident;

/// Evaluation order of a relation's IEs: each after every IE whose output it
/// reads. Ties go by declaration order.
pub fn order_ies(rel: &Ident, ies: &[ResolvedIe]) -> Result<Vec<usize>> {
    let depends = |j: usize, k: usize| j != k && ies[j].reads.iter().any(|r| ies[k].produces.contains(r));
    let mut done: Vec<usize> = Vec::with_capacity(ies.len());
    while done.len() < ies.len() {
        let ready = (0..ies.len()).find(|&j| !done.contains(&j) && (0..ies.len()).all(|k| !depends(j, k) || done.contains(&k)));
        match ready {
            Some(j) => done.push(j),
            None => {
                let stuck = (0..ies.len()).filter(|j| !done.contains(j)).map(|j| ies[j].name.value.clone()).collect();
                return Err(Error::IeCycle { relation: rel.value.clone(), ies: stuck });
            }
        }
    }
    Ok(done)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::resolve::IeKind;

    fn ie(name: &str, produces: &[&str], reads: &[&str]) -> ResolvedIe {
        ResolvedIe {
            name: Ident::new(name),
            kind: IeKind::Value,
            produces: produces.iter().map(|s| Ident::new(*s)).collect(),
            items: Vec::new(),
            sources: Vec::new(),
            on: Vec::new(),
            reads: reads.iter().map(|s| Ident::new(*s)).collect(),
            join_attrs: Vec::new(),
        }
    }

    #[test]
    fn readers_follow_producers() {
        let ies = [ie("WEIGHT_T", &["WEIGHT_T"], &["WEIGHT_KG"]), ie("WEIGHT_KG", &["WEIGHT_KG"], &["WEIGHT"])];
        assert_eq!(order_ies(&Ident::new("P"), &ies).unwrap(), vec![1, 0]);
    }

    #[test]
    fn independent_ies_keep_declaration_order() {
        let ies = [ie("A", &["A"], &["K"]), ie("B", &["B"], &["K"]), ie("C", &["C"], &["A"])];
        assert_eq!(order_ies(&Ident::new("R"), &ies).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn mutual_reads_are_a_cycle() {
        let ies = [ie("A", &["A"], &["B"]), ie("B", &["B"], &["A"]), ie("C", &["C"], &[])];
        let err = order_ies(&Ident::new("R"), &ies).unwrap_err();
        assert!(matches!(err, Error::IeCycle { ies, .. } if ies == ["A", "B"]));
    }
}
