//! Problem graphs: the conclusion and every premise merged into one
//! directed acyclic multigraph under a shared root, with one node per
//! distinct canonical subformula.
//!
//! Edges into the antecedent of a conditional and into the body of a
//! negation carry sign -1; every other edge carries +1.

use std::cell::OnceCell;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::formula::{Formula, Sequent};

pub type NodeId = usize;

pub const ROOT: NodeId = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeLabel {
    Root,
    Formula(Formula),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    pub sign: Sign,
    /// Child position at the source (argument slot, or premise index + 1 at the root).
    pub slot: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Positive,
    Negative,
    Mixed,
}

impl Parity {
    fn flip(self) -> Parity {
        match self {
            Parity::Positive => Parity::Negative,
            Parity::Negative => Parity::Positive,
            Parity::Mixed => Parity::Mixed,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0} is not in the graph")]
    UnknownNode(NodeId),
    #[error("node {target} is not reachable from node {ancestor}")]
    Unreachable { ancestor: NodeId, target: NodeId },
}

#[derive(Clone, Debug)]
pub struct ProblemGraph {
    labels: Vec<NodeLabel>,
    edges: Vec<Edge>,
    out_edges: Vec<Vec<usize>>,
    in_edges: Vec<Vec<usize>>,
    index: HashMap<Formula, NodeId>,
    conclusion: NodeId,
    premises: Vec<NodeId>,
}

impl ProblemGraph {
    pub fn build(s: &Sequent) -> Self {
        let mut g = ProblemGraph {
            labels: vec![NodeLabel::Root],
            edges: Vec::new(),
            out_edges: vec![Vec::new()],
            in_edges: vec![Vec::new()],
            index: HashMap::new(),
            conclusion: ROOT,
            premises: Vec::new(),
        };
        g.conclusion = g.insert(&s.conclusion().canonicalize());
        g.add_edge(ROOT, g.conclusion, Sign::Plus, 0);
        for (i, p) in s.premises().iter().enumerate() {
            let id = g.insert(&p.canonicalize());
            g.add_edge(ROOT, id, Sign::Plus, i + 1);
            g.premises.push(id);
        }
        g
    }

    fn insert(&mut self, f: &Formula) -> NodeId {
        if let Some(&id) = self.index.get(f) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(NodeLabel::Formula(f.clone()));
        self.out_edges.push(Vec::new());
        self.in_edges.push(Vec::new());
        self.index.insert(f.clone(), id);
        let signs: &[Sign] = match f {
            Formula::Not(_) => &[Sign::Minus],
            Formula::Implies(..) => &[Sign::Minus, Sign::Plus],
            _ => &[Sign::Plus, Sign::Plus],
        };
        for (slot, (child, sign)) in f.children().into_iter().zip(signs).enumerate() {
            let cid = self.insert(child);
            self.add_edge(id, cid, *sign, slot);
        }
        id
    }

    fn add_edge(&mut self, from: NodeId, to: NodeId, sign: Sign, slot: usize) {
        let e = self.edges.len();
        self.edges.push(Edge { from, to, sign, slot });
        self.out_edges[from].push(e);
        self.in_edges[to].push(e);
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn label(&self, n: NodeId) -> Option<&NodeLabel> {
        self.labels.get(n)
    }

    pub fn conclusion_node(&self) -> NodeId {
        self.conclusion
    }

    pub fn premise_nodes(&self) -> &[NodeId] {
        &self.premises
    }

    /// Node holding `f` (looked up modulo bound-variable renaming).
    pub fn node_of(&self, f: &Formula) -> Option<NodeId> {
        self.index.get(&f.canonicalize()).copied()
    }

    pub fn out_edges(&self, n: NodeId) -> impl Iterator<Item = &Edge> {
        self.out_edges[n].iter().map(|&e| &self.edges[e])
    }

    pub fn in_edges(&self, n: NodeId) -> impl Iterator<Item = &Edge> {
        self.in_edges[n].iter().map(|&e| &self.edges[e])
    }

    /// Successor lists, one entry per edge (parallel edges repeat).
    pub fn adjacency(&self) -> Vec<Vec<NodeId>> {
        (0..self.node_count())
            .map(|n| self.out_edges(n).map(|e| e.to).collect())
            .collect()
    }

    fn check_node(&self, n: NodeId) -> Result<(), GraphError> {
        if n < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(n))
        }
    }

    /// Parity of `target` relative to `ancestor`.
    ///
    /// The counter starts from the ancestor's incoming edge signs (the root,
    /// having none, starts positive; disagreeing signs give `Mixed` at once),
    /// then flips along each negative edge on the way down. Paths that
    /// arrive with different counters make the result `Mixed`.
    pub fn parity(&self, ancestor: NodeId, target: NodeId) -> Result<Parity, GraphError> {
        self.check_node(ancestor)?;
        self.check_node(target)?;
        let mut memo = vec![None; self.node_count()];
        let reach = self.path_signs(ancestor, target, &mut memo);
        if reach == 0 {
            return Err(GraphError::Unreachable { ancestor, target });
        }
        let mut incoming = self.in_edges(ancestor).map(|e| e.sign);
        let seed = match incoming.next() {
            None => Parity::Positive,
            Some(first) => {
                if incoming.any(|s| s != first) {
                    return Ok(Parity::Mixed);
                }
                if first == Sign::Plus {
                    Parity::Positive
                } else {
                    Parity::Negative
                }
            }
        };
        Ok(match reach {
            EVEN => seed,
            ODD => seed.flip(),
            _ => Parity::Mixed,
        })
    }

    /// Bitmask of sign products over all paths `from` -> `target`.
    fn path_signs(&self, from: NodeId, target: NodeId, memo: &mut [Option<u8>]) -> u8 {
        if from == target {
            return EVEN;
        }
        if let Some(m) = memo[from] {
            return m;
        }
        let mut mask = 0;
        for &e in &self.out_edges[from] {
            let edge = &self.edges[e];
            let below = self.path_signs(edge.to, target, memo);
            mask |= match edge.sign {
                Sign::Plus => below,
                Sign::Minus => ((below & EVEN) << 1) | ((below & ODD) >> 1),
            };
        }
        memo[from] = Some(mask);
        mask
    }

    /// Unit-weight shortest directed path length; `None` when unreachable.
    pub fn shortest_distance(&self, from: NodeId, to: NodeId) -> Result<Option<u32>, GraphError> {
        self.check_node(from)?;
        self.check_node(to)?;
        Ok(shortest_path_with(self.node_count(), from, to, |n| self.out_edges(n).map(|e| e.to)))
    }

    /// Kahn's algorithm; true when every node can be ordered.
    pub fn is_acyclic(&self) -> bool {
        let mut indeg: Vec<usize> = (0..self.node_count()).map(|n| self.in_edges[n].len()).collect();
        let mut ready: Vec<NodeId> = (0..self.node_count()).filter(|&n| indeg[n] == 0).collect();
        let mut seen = 0;
        while let Some(n) = ready.pop() {
            seen += 1;
            for e in self.out_edges(n) {
                indeg[e.to] -= 1;
                if indeg[e.to] == 0 {
                    ready.push(e.to);
                }
            }
        }
        seen == self.node_count()
    }

    /// Graphviz rendering with nodes and edges in construction order.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph problem {\n");
        for (id, label) in self.labels.iter().enumerate() {
            let text = match label {
                NodeLabel::Root => "⊢?".to_string(),
                NodeLabel::Formula(f) => f.to_string(),
            };
            let _ = writeln!(out, "  n{id} [label=\"{}\"];", text.replace('"', "\\\""));
        }
        for e in &self.edges {
            let sign = match e.sign {
                Sign::Plus => "+1",
                Sign::Minus => "-1",
            };
            let _ = writeln!(out, "  n{} -> n{} [label=\"{sign}\"];", e.from, e.to);
        }
        out.push_str("}\n");
        out
    }
}

const EVEN: u8 = 0b01;
const ODD: u8 = 0b10;

pub fn build_graph(s: &Sequent) -> ProblemGraph {
    ProblemGraph::build(s)
}

/// A problem graph built on first use.
pub struct LazyGraph<'a> {
    seq: &'a Sequent,
    cell: OnceCell<ProblemGraph>,
}

impl<'a> LazyGraph<'a> {
    pub fn new(seq: &'a Sequent) -> Self {
        LazyGraph {
            seq,
            cell: OnceCell::new(),
        }
    }

    pub fn sequent(&self) -> &Sequent {
        self.seq
    }

    pub fn get(&self) -> &ProblemGraph {
        self.cell.get_or_init(|| ProblemGraph::build(self.seq))
    }

    pub fn is_built(&self) -> bool {
        self.cell.get().is_some()
    }
}

/// Dijkstra over unit-weight successor lists.
pub fn shortest_path(adj: &[Vec<usize>], from: usize, to: usize) -> Option<u32> {
    shortest_path_with(adj.len(), from, to, |n| adj[n].iter().copied())
}

fn shortest_path_with<I>(nodes: usize, from: usize, to: usize, successors: impl Fn(usize) -> I) -> Option<u32>
where
    I: IntoIterator<Item = usize>,
{
    if from == to {
        return Some(0);
    }
    let mut dist = vec![u32::MAX; nodes];
    let mut heap = BinaryHeap::new();
    dist[from] = 0;
    heap.push(Reverse((0u32, from)));
    while let Some(Reverse((d, n))) = heap.pop() {
        if n == to {
            return Some(d);
        }
        if d > dist[n] {
            continue;
        }
        for m in successors(n) {
            let nd = d + 1;
            if nd < dist[m] {
                dist[m] = nd;
                heap.push(Reverse((nd, m)));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, parse_sequent};

    fn fig1() -> ProblemGraph {
        build_graph(&parse_sequent("A(a), A(a) -> (B(a) | C(a)), ~C(a) |- B(a)").unwrap())
    }

    fn node(g: &ProblemGraph, f: &str) -> NodeId {
        g.node_of(&parse_formula(f).unwrap()).unwrap()
    }

    #[test]
    fn figure_one_sharing() {
        let g = fig1();
        // root, B, A, A->(B|C), B|C, C, ~C
        assert_eq!(g.node_count(), 7);
        assert_eq!(g.premise_nodes()[0], node(&g, "A(a)"));
        assert_eq!(g.conclusion_node(), node(&g, "B(a)"));
        let imp = node(&g, "A(a) -> (B(a) | C(a))");
        let antecedent = g.out_edges(imp).find(|e| e.slot == 0).unwrap();
        assert_eq!(antecedent.to, node(&g, "A(a)"));
        assert_eq!(antecedent.sign, Sign::Minus);
        assert!(g.is_acyclic());
    }

    #[test]
    fn single_atom_graph() {
        let g = build_graph(&parse_sequent("|- A(a)").unwrap());
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[Edge { from: ROOT, to: 1, sign: Sign::Plus, slot: 0 }]);
    }

    #[test]
    fn parallel_edges_for_repeated_children() {
        let g = build_graph(&parse_sequent("A(a) & A(a) |- B(a)").unwrap());
        let and = node(&g, "A(a) & A(a)");
        let a = node(&g, "A(a)");
        let to_a: Vec<_> = g.out_edges(and).filter(|e| e.to == a).collect();
        assert_eq!(to_a.len(), 2);
        assert!(to_a.iter().all(|e| e.sign == Sign::Plus));
    }

    #[test]
    fn figure_one_parities() {
        let g = fig1();
        let imp = node(&g, "A(a) -> (B(a) | C(a))");
        assert_eq!(g.parity(imp, node(&g, "B(a)")).unwrap(), Parity::Positive);
        assert_eq!(g.parity(ROOT, node(&g, "A(a)")).unwrap(), Parity::Mixed);
        assert_eq!(g.parity(ROOT, node(&g, "C(a)")).unwrap(), Parity::Mixed);
        assert_eq!(g.parity(node(&g, "~C(a)"), node(&g, "C(a)")).unwrap(), Parity::Negative);
        assert!(matches!(
            g.parity(node(&g, "A(a)"), node(&g, "B(a)")),
            Err(GraphError::Unreachable { .. })
        ));
    }

    #[test]
    fn ancestor_with_mixed_incoming_edges() {
        // C(a) is reached positively through the disjunction and negatively
        // through the negation, so everything below it is mixed too.
        let g = fig1();
        let c = node(&g, "C(a)");
        assert_eq!(g.parity(c, c).unwrap(), Parity::Mixed);
    }

    #[test]
    fn figure_one_distances() {
        let g = fig1();
        let b = node(&g, "B(a)");
        assert_eq!(g.shortest_distance(b, b).unwrap(), Some(0));
        let imp = node(&g, "A(a) -> (B(a) | C(a))");
        assert_eq!(g.shortest_distance(imp, b).unwrap(), Some(2));
        assert_eq!(g.shortest_distance(node(&g, "A(a)"), b).unwrap(), None);
        assert_eq!(g.shortest_distance(99, b), Err(GraphError::UnknownNode(99)));
    }

    #[test]
    fn alpha_variants_share_nodes() {
        let g = build_graph(&parse_sequent("forall x. P(x) |- forall y. P(y)").unwrap());
        assert_eq!(g.conclusion_node(), g.premise_nodes()[0]);
        assert_eq!(g.node_count(), 3);
    }

    #[test]
    fn dot_output() {
        let g = build_graph(&parse_sequent("~A(a) |- A(a)").unwrap());
        let dot = g.to_dot();
        assert_eq!(
            dot,
            "digraph problem {\n  n0 [label=\"⊢?\"];\n  n1 [label=\"A(a)\"];\n  n2 [label=\"~A(a)\"];\n  \
             n0 -> n1 [label=\"+1\"];\n  n2 -> n1 [label=\"-1\"];\n  n0 -> n2 [label=\"+1\"];\n}\n"
        );
    }
}
