use crate::error::{Error, Result};
use crate::parser::ast::*;
use crate::parser::visit::referenced_relations;

/// One attribute slot of a relation scheme: a stored attribute, or an IE
/// standing for the attributes it produces.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Stored(AttributeDecl),
    /// Always carries a name once inside a scheme.
    Ie(IeDecl),
}

/// A table's scheme in declared attribute order. Covers stored relations
/// (no IEs) and SIRs alike.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub name: Ident,
    pub elements: Vec<Element>,
    pub constraints: Vec<TableConstraint>,
}

impl Scheme {
    pub fn from_create(ct: &CreateTable) -> Result<Scheme> {
        let mut scheme = Scheme { name: ct.name.clone(), elements: Vec::new(), constraints: Vec::new() };
        for el in &ct.elements {
            match el {
                TableElement::Attribute(a) => scheme.elements.push(Element::Stored(a.clone())),
                TableElement::Ie(ie) => {
                    let named = scheme.named_ie(ie.clone());
                    scheme.elements.push(Element::Ie(named));
                }
                TableElement::Constraint(c) => scheme.constraints.push(c.clone()),
            }
        }
        if scheme.stored().next().is_none() {
            return Err(Error::invariant(&scheme.name, "a relation needs at least one stored attribute"));
        }
        Ok(scheme)
    }

    pub fn to_create(&self) -> CreateTable {
        let mut elements: Vec<TableElement> = self
            .elements
            .iter()
            .map(|e| match e {
                Element::Stored(a) => TableElement::Attribute(a.clone()),
                Element::Ie(ie) => TableElement::Ie(ie.clone()),
            })
            .collect();
        elements.extend(self.constraints.iter().cloned().map(TableElement::Constraint));
        CreateTable { name: self.name.clone(), elements }
    }

    /// Gives an unnamed IE a name: its single attribute, else `I_<first source>`,
    /// made unique against the names already in the scheme.
    pub fn named_ie(&self, mut ie: IeDecl) -> IeDecl {
        if ie.name.is_some() {
            return ie;
        }
        if let Some(n) = ie.effective_name() {
            ie.name = Some(n);
            return ie;
        }
        let stem = match &ie.form {
            IeForm::Select(q) => referenced_relations(q)
                .into_iter()
                .next()
                .map(|r| format!("I_{}", r.value))
                .unwrap_or_else(|| "I".to_string()),
            IeForm::Value(items) => format!("I_{}", items[0].alias.value),
        };
        let taken = |n: &str| self.ies().any(|i| i.name.as_ref().is_some_and(|x| x.matches(n))) || self.stored_attr(n).is_some();
        let mut candidate = stem.clone();
        let mut k = 2;
        while taken(&candidate) {
            candidate = format!("{stem}_{k}");
            k += 1;
        }
        ie.name = Some(Ident::new(candidate));
        ie
    }

    pub fn is_sir(&self) -> bool {
        self.ies().next().is_some()
    }

    pub fn stored(&self) -> impl Iterator<Item = &AttributeDecl> {
        self.elements.iter().filter_map(|e| match e {
            Element::Stored(a) => Some(a),
            _ => None,
        })
    }

    pub fn stored_names(&self) -> Vec<Ident> {
        self.stored().map(|a| a.name.clone()).collect()
    }

    pub fn stored_attr(&self, name: &str) -> Option<&AttributeDecl> {
        self.stored().find(|a| a.name.matches(name))
    }

    pub fn ies(&self) -> impl Iterator<Item = &IeDecl> {
        self.elements.iter().filter_map(|e| match e {
            Element::Ie(ie) => Some(ie),
            _ => None,
        })
    }

    pub fn ie(&self, name: &str) -> Option<&IeDecl> {
        self.ies().find(|ie| ie.name.as_ref().is_some_and(|n| n.matches(name)))
    }

    pub fn ie_name(ie: &IeDecl) -> &Ident {
        ie.name.as_ref().expect("scheme IEs are named")
    }

    /// Declared keys, primary key first.
    pub fn keys(&self) -> Vec<Vec<Ident>> {
        let mut primary = Vec::new();
        let mut unique = Vec::new();
        for a in self.stored() {
            if a.is_primary_key {
                primary.push(vec![a.name.clone()]);
            } else if a.unique {
                unique.push(vec![a.name.clone()]);
            }
        }
        for c in &self.constraints {
            match c {
                TableConstraint::PrimaryKey(cols) => primary.push(cols.clone()),
                TableConstraint::Unique(cols) => unique.push(cols.clone()),
                TableConstraint::ForeignKey { .. } => {}
            }
        }
        primary.extend(unique);
        primary
    }

    pub fn primary_key(&self) -> Option<Vec<Ident>> {
        self.keys().into_iter().next()
    }

    pub fn foreign_keys(&self) -> Vec<(Vec<Ident>, ForeignRef)> {
        let mut out = Vec::new();
        for a in self.stored() {
            if let Some(r) = &a.references {
                out.push((vec![a.name.clone()], r.clone()));
            }
        }
        for c in &self.constraints {
            if let TableConstraint::ForeignKey { columns, references } = c {
                out.push((columns.clone(), references.clone()));
            }
        }
        out
    }

    /// Index of the element holding `name`: a stored attribute or an IE by name.
    pub fn position_of(&self, name: &str) -> Option<usize> {
        self.elements.iter().position(|e| match e {
            Element::Stored(a) => a.name.matches(name),
            Element::Ie(ie) => Self::ie_name(ie).matches(name),
        })
    }

    /// Relations read by the IEs, first occurrence order, excluding the relation itself.
    pub fn ie_relations(&self) -> Vec<Ident> {
        let mut out: Vec<Ident> = Vec::new();
        for ie in self.ies() {
            for r in ie_relations(ie) {
                if r != self.name && !out.contains(&r) {
                    out.push(r);
                }
            }
        }
        out
    }
}

/// Relations named anywhere inside an IE.
pub fn ie_relations(ie: &IeDecl) -> Vec<Ident> {
    match &ie.form {
        IeForm::Select(q) => referenced_relations(q),
        IeForm::Value(items) => {
            let mut out: Vec<Ident> = Vec::new();
            for it in items {
                for r in crate::parser::visit::expr_relations(&it.expr) {
                    if !out.contains(&r) {
                        out.push(r);
                    }
                }
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn scheme(sql: &str) -> Scheme {
        match parse(sql).unwrap().remove(0) {
            Statement::CreateTable(ct) => Scheme::from_create(&ct).unwrap(),
            _ => panic!(),
        }
    }

    #[test]
    fn unnamed_ies_get_names() {
        let s = scheme("Create Table T (K Int Primary Key, (K * 2 As K2, K + 1 As K1), (Select A, B From U Where T.K = U.K), Z As (K));");
        let names: Vec<_> = s.ies().map(|i| Scheme::ie_name(i).value.clone()).collect();
        assert_eq!(names, ["I_K2", "I_U", "Z"]);
    }

    #[test]
    fn keys_primary_first() {
        let s = scheme("Create Table T (A Int Unique, B Int, C Int, Primary Key (B, C));");
        assert_eq!(s.keys(), vec![vec![Ident::new("B"), Ident::new("C")], vec![Ident::new("A")]]);
    }

    #[test]
    fn round_trips_through_create() {
        let s = scheme("Create Table SP (S# Char, P# Char, QTY Int, I_S (Select SNAME From S Where SP.S# = S#), Primary Key (S#, P#));");
        assert_eq!(Scheme::from_create(&s.to_create()).unwrap(), s);
        assert_eq!(s.ie_relations(), vec![Ident::new("S")]);
    }
}
