//! Implication partial-order graph over the labels of a trie.
//!
//! Labels are grouped by non-constant prefix. Inside a group every member
//! keeps direct edges to all members it implies and all members implying
//! it, so the stored relation is the full same-prefix implication relation.
//! Each group is also indexed by `(op, constant)`, which turns "who implies
//! this atom" and "what does this atom imply" into a handful of range scans.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Bound::{self, Excluded, Included, Unbounded};

use num_bigint::BigInt;

use super::NodeId;
use crate::expr::{Atom, CmpOp};

#[derive(Debug, Clone)]
pub struct Member {
    atom: Atom,
    refs: Vec<NodeId>,
    implies: BTreeSet<String>,
    implied_by: BTreeSet<String>,
}

impl Member {
    pub fn atom(&self) -> &Atom {
        &self.atom
    }

    /// Trie nodes whose incoming edge carries this label, in registration
    /// order.
    pub fn refs(&self) -> &[NodeId] {
        &self.refs
    }

    /// Keys of the other group members this one implies.
    pub fn implies(&self) -> &BTreeSet<String> {
        &self.implies
    }

    pub fn implied_by(&self) -> &BTreeSet<String> {
        &self.implied_by
    }
}

#[derive(Debug, Clone, Default)]
pub struct Group {
    members: BTreeMap<String, Member>,
    by_bound: BTreeMap<CmpOp, BTreeMap<BigInt, String>>,
}

type Range<'a> = (CmpOp, Bound<&'a BigInt>, Bound<&'a BigInt>);

impl Group {
    pub fn members(&self) -> impl Iterator<Item = &Member> {
        self.members.values()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&Member> {
        self.members.get(key)
    }

    fn scan<'a>(&'a self, ranges: &[Range<'_>], skip: Option<&BigInt>) -> Vec<&'a Member> {
        let mut keys: Vec<&String> = Vec::new();
        for (op, lo, hi) in ranges {
            if let Some(index) = self.by_bound.get(op) {
                keys.extend(
                    index
                        .range::<BigInt, _>((*lo, *hi))
                        .filter(|(k, _)| Some(*k) != skip)
                        .map(|(_, key)| key),
                );
            }
        }
        keys.sort();
        keys.into_iter().map(|k| &self.members[k]).collect()
    }

    /// Members `g` with `implies(g, a)`; `a` must have this group's prefix.
    pub fn implying(&self, a: &Atom) -> Vec<&Member> {
        use CmpOp::*;
        let n = a.constant();
        let point = (Included(n), Included(n));
        match a.op() {
            Eq => self.scan(&[(Eq, point.0, point.1)], None),
            Ne => {
                let mut out = self.scan(&[(Eq, Unbounded, Unbounded)], Some(n));
                out.extend(self.scan(
                    &[
                        (Le, Excluded(n), Unbounded),
                        (Ge, Unbounded, Excluded(n)),
                        (Ne, point.0, point.1),
                    ],
                    None,
                ));
                out.sort_by(|x, y| x.atom.cmp(&y.atom));
                out
            }
            Le => self.scan(
                &[(Eq, Included(n), Unbounded), (Le, Included(n), Unbounded)],
                None,
            ),
            Ge => self.scan(
                &[(Eq, Unbounded, Included(n)), (Ge, Unbounded, Included(n))],
                None,
            ),
        }
    }

    /// Members `g` with `implies(a, g)`.
    pub fn implied_by(&self, a: &Atom) -> Vec<&Member> {
        use CmpOp::*;
        let n = a.constant();
        match a.op() {
            Eq => {
                let mut out = self.scan(&[(Ne, Unbounded, Unbounded)], Some(n));
                out.extend(self.scan(
                    &[
                        (Eq, Included(n), Included(n)),
                        (Le, Unbounded, Included(n)),
                        (Ge, Included(n), Unbounded),
                    ],
                    None,
                ));
                out.sort_by(|x, y| x.atom.cmp(&y.atom));
                out
            }
            Ne => self.scan(&[(Ne, Included(n), Included(n))], None),
            Le => self.scan(
                &[(Ne, Unbounded, Excluded(n)), (Le, Unbounded, Included(n))],
                None,
            ),
            Ge => self.scan(
                &[(Ne, Excluded(n), Unbounded), (Ge, Included(n), Unbounded)],
                None,
            ),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ipog {
    groups: BTreeMap<String, Group>,
}

impl Ipog {
    pub fn group(&self, prefix: &str) -> Option<&Group> {
        self.groups.get(prefix)
    }

    pub fn groups(&self) -> impl Iterator<Item = (&str, &Group)> {
        self.groups.iter().map(|(k, g)| (k.as_str(), g))
    }

    pub fn member(&self, a: &Atom) -> Option<&Member> {
        self.groups.get(a.prefix())?.members.get(a.key())
    }

    pub fn member_count(&self) -> usize {
        self.groups.values().map(Group::len).sum()
    }

    /// Stored labels implying `a` (reverse implication set).
    pub fn implying(&self, a: &Atom) -> Vec<&Member> {
        self.groups
            .get(a.prefix())
            .map_or_else(Vec::new, |g| g.implying(a))
    }

    /// Stored labels implied by `a` (implication set).
    pub fn implied_by(&self, a: &Atom) -> Vec<&Member> {
        self.groups
            .get(a.prefix())
            .map_or_else(Vec::new, |g| g.implied_by(a))
    }

    /// Records that trie node `node` carries label `a`.
    pub fn register(&mut self, a: &Atom, node: NodeId) {
        let group = self.groups.entry(a.prefix().to_string()).or_default();
        if let Some(m) = group.members.get_mut(a.key()) {
            m.refs.push(node);
            return;
        }
        let key = a.key().to_string();
        let implies: BTreeSet<String> = group
            .implied_by(a)
            .into_iter()
            .map(|m| m.atom.key().to_string())
            .collect();
        let implied_by: BTreeSet<String> = group
            .implying(a)
            .into_iter()
            .map(|m| m.atom.key().to_string())
            .collect();
        for k in &implies {
            group
                .members
                .get_mut(k)
                .unwrap()
                .implied_by
                .insert(key.clone());
        }
        for k in &implied_by {
            group
                .members
                .get_mut(k)
                .unwrap()
                .implies
                .insert(key.clone());
        }
        group
            .by_bound
            .entry(a.op())
            .or_default()
            .insert(a.constant().clone(), key.clone());
        group.members.insert(
            key,
            Member {
                atom: a.clone(),
                refs: vec![node],
                implies,
                implied_by,
            },
        );
    }

    /// Drops the reference from `node`; the member disappears with its last
    /// reference.
    pub fn unregister(&mut self, a: &Atom, node: NodeId) {
        let Some(group) = self.groups.get_mut(a.prefix()) else {
            return;
        };
        let Some(m) = group.members.get_mut(a.key()) else {
            return;
        };
        m.refs.retain(|&r| r != node);
        if !m.refs.is_empty() {
            return;
        }
        let m = group.members.remove(a.key()).expect("just looked up");
        for k in &m.implies {
            if let Some(other) = group.members.get_mut(k) {
                other.implied_by.remove(a.key());
            }
        }
        for k in &m.implied_by {
            if let Some(other) = group.members.get_mut(k) {
                other.implies.remove(a.key());
            }
        }
        if let Some(index) = group.by_bound.get_mut(&a.op()) {
            index.remove(a.constant());
            if index.is_empty() {
                group.by_bound.remove(&a.op());
            }
        }
        if group.members.is_empty() {
            self.groups.remove(a.prefix());
        }
    }
}
