use indexmap::IndexMap;

use crate::parser::Ident;

/// Directed "reads from" graph between relations. Base-table nodes (`X_B`)
/// appear as sinks: reading a base never closes a cycle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DependencyGraph {
    edges: IndexMap<Ident, Vec<Ident>>,
}

impl DependencyGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: &Ident) {
        self.edges.entry(node.clone()).or_default();
    }

    /// Self-edges are dropped; an SIR may scan itself through an alias.
    pub fn add_edge(&mut self, from: &Ident, to: &Ident) {
        self.add_node(to);
        let out = self.edges.entry(from.clone()).or_default();
        if from != to && !out.contains(to) {
            out.push(to.clone());
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Ident> {
        self.edges.keys()
    }

    pub fn edges_from(&self, node: &Ident) -> &[Ident] {
        self.edges.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Nodes with an edge into `node`, in registration order.
    pub fn dependents_of(&self, node: &Ident) -> Vec<Ident> {
        self.edges.iter().filter(|(_, out)| out.contains(node)).map(|(n, _)| n.clone()).collect()
    }

    /// Every node that reaches `node`, nearest first.
    pub fn transitive_dependents(&self, node: &Ident) -> Vec<Ident> {
        let mut out: Vec<Ident> = Vec::new();
        let mut frontier = vec![node.clone()];
        while let Some(n) = frontier.pop() {
            for d in self.dependents_of(&n) {
                if &d != node && !out.contains(&d) {
                    out.push(d.clone());
                    frontier.push(d);
                }
            }
        }
        out
    }

    pub fn reaches(&self, from: &Ident, to: &Ident) -> bool {
        let mut seen: Vec<&Ident> = Vec::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            for m in self.edges_from(n) {
                if m == to {
                    return true;
                }
                if !seen.contains(&m) {
                    seen.push(m);
                    stack.push(m);
                }
            }
        }
        false
    }

    /// First cycle found by depth-first search in registration order, as the
    /// list of nodes along it.
    pub fn find_cycle(&self) -> Option<Vec<Ident>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        fn visit(g: &DependencyGraph, i: usize, marks: &mut [Mark], path: &mut Vec<usize>) -> Option<Vec<Ident>> {
            marks[i] = Mark::Active;
            path.push(i);
            let (_, out) = g.edges.get_index(i).unwrap();
            for m in out {
                let j = g.edges.get_index_of(m).unwrap();
                match marks[j] {
                    Mark::Active => {
                        let start = path.iter().position(|&p| p == j).unwrap();
                        return Some(path[start..].iter().map(|&p| g.edges.get_index(p).unwrap().0.clone()).collect());
                    }
                    Mark::New => {
                        if let Some(c) = visit(g, j, marks, path) {
                            return Some(c);
                        }
                    }
                    Mark::Done => {}
                }
            }
            path.pop();
            marks[i] = Mark::Done;
            None
        }
        let mut marks = vec![Mark::New; self.edges.len()];
        for i in 0..self.edges.len() {
            if marks[i] == Mark::New {
                if let Some(c) = visit(self, i, &mut marks, &mut Vec::new()) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Nodes with dependencies before dependents; ties keep registration order.
    pub fn topo_order(&self) -> Result<Vec<Ident>, Vec<Ident>> {
        if let Some(c) = self.find_cycle() {
            return Err(c);
        }
        let mut done: Vec<Ident> = Vec::new();
        while done.len() < self.edges.len() {
            let next = self
                .edges
                .iter()
                .find(|(n, out)| !done.contains(n) && out.iter().all(|m| done.contains(m)))
                .map(|(n, _)| n.clone())
                .expect("acyclic graph has a ready node");
            done.push(next);
        }
        Ok(done)
    }
}
