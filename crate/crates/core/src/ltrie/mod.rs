//! Constraint tries for satisfiable (SCS) and unsatisfiable (UCS) results.
//!
//! A stored constraint is a root-to-leaf path whose edge labels are its
//! atoms in canonical order. The SCS keeps the longer of two constraints
//! where one is a prefix of the other; the UCS keeps the shorter. Every
//! label is also registered in the store's [`Ipog`].

mod ipog;
mod persist;

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{Atom, Conjunction, Solution};

pub use ipog::{Group, Ipog, Member};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreKind {
    /// Satisfiable constraints with a solution at every leaf.
    Sat,
    /// Unsatisfiable constraints.
    Unsat,
}

impl StoreKind {
    pub fn tag(self) -> &'static str {
        match self {
            StoreKind::Sat => "SCS",
            StoreKind::Unsat => "UCS",
        }
    }
}

impl fmt::Display for StoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreReport {
    /// A new path was added.
    Inserted,
    /// An equal or stronger constraint is already represented.
    IgnoredSubsumed,
    /// A stored SCS constraint was a prefix of the new one and got extended.
    ExtendedExisting,
    /// Stored UCS constraints extending the new one were cut back to it.
    TruncatedExisting,
}

#[derive(Debug, Clone)]
pub struct TrieNode {
    label: Option<Atom>,
    parent: Option<NodeId>,
    children: BTreeMap<String, NodeId>,
    solution: Option<Solution>,
}

impl TrieNode {
    fn new(label: Option<Atom>, parent: Option<NodeId>) -> Self {
        TrieNode {
            label,
            parent,
            children: BTreeMap::new(),
            solution: None,
        }
    }

    /// The atom on the incoming edge; `None` only at the root.
    pub fn label(&self) -> Option<&Atom> {
        self.label.as_ref()
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    /// Children in canonical label order.
    pub fn children(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.children.values().copied()
    }

    pub fn child(&self, key: &str) -> Option<NodeId> {
        self.children.get(key).copied()
    }

    pub fn solution(&self) -> Option<&Solution> {
        self.solution.as_ref()
    }
}

/// One root-to-leaf path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredConstraint {
    pub leaf: NodeId,
    pub atoms: Vec<Atom>,
    pub solution: Option<Solution>,
}

#[derive(Debug, Clone)]
pub struct Store {
    kind: StoreKind,
    nodes: Vec<Option<TrieNode>>,
    free: Vec<usize>,
    ipog: Ipog,
}

impl Store {
    pub fn new(kind: StoreKind) -> Self {
        Store {
            kind,
            nodes: vec![Some(TrieNode::new(None, None))],
            free: Vec::new(),
            ipog: Ipog::default(),
        }
    }

    pub fn kind(&self) -> StoreKind {
        self.kind
    }

    pub fn ipog(&self) -> &Ipog {
        &self.ipog
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    /// Panics on a freed or foreign id.
    pub fn node(&self, id: NodeId) -> &TrieNode {
        self.nodes[id.0].as_ref().expect("live node")
    }

    fn node_mut(&mut self, id: NodeId) -> &mut TrieNode {
        self.nodes[id.0].as_mut().expect("live node")
    }

    /// A non-root node without children.
    pub fn is_leaf(&self, id: NodeId) -> bool {
        id != NodeId::ROOT && self.node(id).children.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.node(NodeId::ROOT).children.is_empty()
    }

    /// Number of trie edges.
    pub fn edge_count(&self) -> usize {
        self.nodes.iter().flatten().count() - 1
    }

    /// Labels from the root down to `id`.
    pub fn path_to(&self, id: NodeId) -> Vec<&Atom> {
        let mut out = Vec::new();
        let mut cur = id;
        while let Some(label) = self.node(cur).label() {
            out.push(label);
            cur = self.node(cur).parent.expect("labelled nodes have parents");
        }
        out.reverse();
        out
    }

    pub fn depth(&self, id: NodeId) -> usize {
        let mut d = 0;
        let mut cur = id;
        while let Some(p) = self.node(cur).parent {
            d += 1;
            cur = p;
        }
        d
    }

    /// The first leaf below `id` in canonical order (`id` itself if a leaf).
    pub fn leftmost_leaf(&self, id: NodeId) -> NodeId {
        let mut cur = id;
        while let Some(&next) = self.node(cur).children.values().next() {
            cur = next;
        }
        cur
    }

    /// All stored constraints in preorder.
    pub fn constraints(&self) -> Vec<StoredConstraint> {
        let mut out = Vec::new();
        let mut stack = vec![NodeId::ROOT];
        while let Some(id) = stack.pop() {
            if self.is_leaf(id) {
                out.push(StoredConstraint {
                    leaf: id,
                    atoms: self.path_to(id).into_iter().cloned().collect(),
                    solution: self.node(id).solution.clone(),
                });
            }
            stack.extend(self.node(id).children.values().rev());
        }
        out
    }

    fn alloc(&mut self, node: TrieNode) -> NodeId {
        match self.free.pop() {
            Some(i) => {
                self.nodes[i] = Some(node);
                NodeId(i)
            }
            None => {
                self.nodes.push(Some(node));
                NodeId(self.nodes.len() - 1)
            }
        }
    }

    fn append_chain(&mut self, mut cur: NodeId, atoms: &[Atom]) -> NodeId {
        for a in atoms {
            let id = self.alloc(TrieNode::new(Some(a.clone()), Some(cur)));
            self.node_mut(cur).children.insert(a.key().to_string(), id);
            self.ipog.register(a, id);
            cur = id;
        }
        cur
    }

    fn remove_subtrees_below(&mut self, id: NodeId) {
        let mut stack: Vec<NodeId> = self.node_mut(id).children.values().copied().collect();
        self.node_mut(id).children.clear();
        while let Some(n) = stack.pop() {
            let node = self.nodes[n.0].take().expect("live node");
            if let Some(label) = &node.label {
                self.ipog.unregister(label, n);
            }
            stack.extend(node.children.values());
            self.free.push(n.0);
        }
    }

    /// Stores a solved constraint. `sol` is required for the SCS, where it
    /// must satisfy `c`, and must be absent for the UCS.
    pub fn insert(&mut self, c: &Conjunction, sol: Option<Solution>) -> Result<StoreReport> {
        if c.is_empty() {
            return Err(Error::EmptyConjunction);
        }
        match (self.kind, &sol) {
            (StoreKind::Sat, None) => {
                return Err(Error::InvalidSolution("SCS entries need a solution".into()))
            }
            (StoreKind::Unsat, Some(_)) => {
                return Err(Error::InvalidSolution(
                    "UCS entries carry no solution".into(),
                ))
            }
            (StoreKind::Sat, Some(s)) => match c.holds(s) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(Error::InvalidSolution(format!("{s} does not satisfy {c}")))
                }
                Err(e) => return Err(Error::InvalidSolution(e.to_string())),
            },
            (StoreKind::Unsat, None) => {}
        }

        let atoms = c.atoms();
        let mut cur = NodeId::ROOT;
        let mut matched = 0;
        while matched < atoms.len() {
            match self.node(cur).child(atoms[matched].key()) {
                Some(next) => {
                    cur = next;
                    matched += 1;
                }
                None => break,
            }
        }

        let report = if self.is_leaf(cur) {
            if matched == atoms.len() {
                StoreReport::IgnoredSubsumed
            } else {
                match self.kind {
                    StoreKind::Sat => {
                        self.node_mut(cur).solution = None;
                        let leaf = self.append_chain(cur, &atoms[matched..]);
                        self.node_mut(leaf).solution = sol;
                        StoreReport::ExtendedExisting
                    }
                    StoreKind::Unsat => StoreReport::IgnoredSubsumed,
                }
            }
        } else if matched == atoms.len() {
            match self.kind {
                StoreKind::Sat => StoreReport::IgnoredSubsumed,
                StoreKind::Unsat => {
                    self.remove_subtrees_below(cur);
                    self.node_mut(cur).solution = None;
                    StoreReport::TruncatedExisting
                }
            }
        } else {
            let leaf = self.append_chain(cur, &atoms[matched..]);
            self.node_mut(leaf).solution = sol;
            StoreReport::Inserted
        };
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{normalize_atomic, Normalized};
    use crate::expr::parse;

    fn conj(text: &str) -> Conjunction {
        Conjunction::new(
            parse(text)
                .unwrap()
                .iter()
                .map(|r| match normalize_atomic(r) {
                    Normalized::Atom(a) => a,
                    other => panic!("{other:?}"),
                }),
        )
    }

    fn sol(text: &str) -> Option<Solution> {
        Some(Solution::parse_bindings(text).unwrap())
    }

    fn shape(s: &Store) -> Vec<String> {
        s.constraints()
            .iter()
            .map(|c| {
                let labels: Vec<&str> = c.atoms.iter().map(Atom::key).collect();
                match &c.solution {
                    Some(sol) => format!("{} | {}", labels.join(" "), sol),
                    None => labels.join(" "),
                }
            })
            .collect()
    }

    #[test]
    fn scs_extends_prefix() {
        let mut s = Store::new(StoreKind::Sat);
        assert_eq!(
            s.insert(&conj("a>=0 && b>=0"), sol("a=0 b=0")).unwrap(),
            StoreReport::Inserted
        );
        assert_eq!(
            s.insert(&conj("a>=0 && b>=0 && c>=0"), sol("a=1 b=1 c=1"))
                .unwrap(),
            StoreReport::ExtendedExisting
        );
        assert_eq!(s.edge_count(), 3);
        assert_eq!(shape(&s), vec!["a>=0 b>=0 c>=0 | a=1 b=1 c=1"]);
        let inner = s.node(NodeId::ROOT).child("a>=0").unwrap();
        let inner = s.node(inner).child("b>=0").unwrap();
        assert!(s.node(inner).solution().is_none());
    }

    #[test]
    fn scs_ignores_prefix_of_stored() {
        let mut s = Store::new(StoreKind::Sat);
        s.insert(&conj("a>=0 && b>=0 && c>=0"), sol("a=0 b=0 c=0"))
            .unwrap();
        assert_eq!(
            s.insert(&conj("a>=0 && b>=0"), sol("a=0 b=0")).unwrap(),
            StoreReport::IgnoredSubsumed
        );
        assert_eq!(s.edge_count(), 3);
    }

    #[test]
    fn ucs_truncates_extensions() {
        let mut s = Store::new(StoreKind::Unsat);
        s.insert(&conj("a>=0 && b>=0 && c>=0"), None).unwrap();
        s.insert(&conj("a>=0 && b>=0 && d>=0"), None).unwrap();
        assert_eq!(s.ipog().member_count(), 4);
        assert_eq!(
            s.insert(&conj("a>=0 && b>=0"), None).unwrap(),
            StoreReport::TruncatedExisting
        );
        assert_eq!(s.edge_count(), 2);
        assert_eq!(shape(&s), vec!["a>=0 b>=0"]);
        assert_eq!(s.ipog().member_count(), 2);
        assert!(s.ipog().group("c").is_none());
    }

    #[test]
    fn ucs_ignores_extension_of_stored() {
        let mut s = Store::new(StoreKind::Unsat);
        s.insert(&conj("a>=0 && b>=0"), None).unwrap();
        assert_eq!(
            s.insert(&conj("a>=0 && b>=0 && c>=0"), None).unwrap(),
            StoreReport::IgnoredSubsumed
        );
        assert_eq!(s.edge_count(), 2);
    }

    #[test]
    fn branching_paths_share_prefixes() {
        let mut s = Store::new(StoreKind::Sat);
        s.insert(&conj("v0+5>=0 && v0+v1<=0"), sol("v0=0 v1=-1"))
            .unwrap();
        s.insert(&conj("v0+5>=0 && v0-3<=0"), sol("v0=0")).unwrap();
        assert_eq!(s.edge_count(), 3);
        assert_eq!(
            shape(&s),
            vec!["v0+5>=0 v0+v1<=0 | v0=0 v1=-1", "v0+5>=0 v0-3<=0 | v0=0"]
        );
        let member = s
            .ipog()
            .member(&conj("v0+5>=0").atoms()[0].clone())
            .unwrap();
        assert_eq!(member.refs().len(), 1);
    }

    #[test]
    fn duplicate_insert_is_ignored() {
        let mut s = Store::new(StoreKind::Sat);
        s.insert(&conj("a>=0"), sol("a=3")).unwrap();
        assert_eq!(
            s.insert(&conj("a>=0"), sol("a=0")).unwrap(),
            StoreReport::IgnoredSubsumed
        );
        assert_eq!(shape(&s), vec!["a>=0 | a=3"]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut s = Store::new(StoreKind::Sat);
        assert!(matches!(
            s.insert(&Conjunction::default(), sol("")),
            Err(Error::EmptyConjunction)
        ));
        assert!(matches!(
            s.insert(&conj("a>=1"), sol("a=0")),
            Err(Error::InvalidSolution(_))
        ));
        assert!(matches!(
            s.insert(&conj("a>=1"), sol("b=0")),
            Err(Error::InvalidSolution(_))
        ));
        assert!(matches!(
            s.insert(&conj("a>=1"), None),
            Err(Error::InvalidSolution(_))
        ));
        let mut u = Store::new(StoreKind::Unsat);
        assert!(matches!(
            u.insert(&conj("a>=1"), sol("a=1")),
            Err(Error::InvalidSolution(_))
        ));
    }

    #[test]
    fn freed_slots_are_reused() {
        let mut s = Store::new(StoreKind::Unsat);
        s.insert(&conj("a>=0 && b>=0 && c>=0"), None).unwrap();
        s.insert(&conj("a>=0"), None).unwrap();
        let before = s.nodes.len();
        s.insert(&conj("d>=0 && e>=0"), None).unwrap();
        assert_eq!(s.nodes.len(), before);
        assert_eq!(s.edge_count(), 3);
    }
}
