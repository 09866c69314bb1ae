//! Logical superset lookups in the SCS and logical subset lookups in the
//! UCS.
//!
//! A stored satisfiable constraint answers a query when every query atom is
//! implied by some atom on the stored path; its solution then satisfies the
//! query. A stored unsatisfiable constraint answers a query when every atom
//! on the stored path is implied by some query atom.

use std::collections::HashSet;

use crate::expr::{Atom, Conjunction, Solution};
use crate::imply::implies;
use crate::ltrie::{NodeId, Store};

/// Stored SCS labels implying `a`.
pub fn ris(a: &Atom, scs: &Store) -> Vec<Atom> {
    scs.ipog()
        .implying(a)
        .into_iter()
        .map(|m| m.atom().clone())
        .collect()
}

/// Stored UCS labels implied by `a`.
pub fn is_set(a: &Atom, ucs: &Store) -> Vec<Atom> {
    ucs.ipog()
        .implied_by(a)
        .into_iter()
        .map(|m| m.atom().clone())
        .collect()
}

/// Finds a stored satisfiable constraint whose atoms imply all of `c` and
/// returns its solution.
///
/// Candidate start nodes are the trie nodes labelled by a member of the
/// rightmost atom's reverse implication set. From each, the path up to the
/// root is scanned for coverage of the query atoms; whatever is still
/// uncovered must then be covered somewhere between the start node and a
/// leaf below it. The solution of the first leaf found (in canonical order)
/// is returned.
pub fn check_superset(c: &Conjunction, scs: &Store) -> Option<Solution> {
    let last = c.atoms().last()?;
    let mut ris_keys: Vec<HashSet<&str>> = Vec::with_capacity(c.len());
    for a in c {
        let members = scs.ipog().implying(a);
        if members.is_empty() {
            return None;
        }
        ris_keys.push(members.iter().map(|m| m.atom().key()).collect());
    }

    for member in scs.ipog().implying(last) {
        let mut starts: Vec<(Vec<&str>, NodeId)> = member
            .refs()
            .iter()
            .map(|&id| (scs.path_to(id).iter().map(|a| a.key()).collect(), id))
            .collect();
        starts.sort();
        for (_, start) in starts {
            let mut covered = vec![false; c.len()];
            let mut cur = start;
            while let Some(label) = scs.node(cur).label() {
                mark(&ris_keys, label, &mut covered);
                cur = scs.node(cur).parent().expect("labelled nodes have parents");
            }
            if let Some(leaf) = complete_below(scs, start, &ris_keys, covered) {
                return scs.node(leaf).solution().cloned();
            }
        }
    }
    None
}

fn mark(ris_keys: &[HashSet<&str>], label: &Atom, covered: &mut [bool]) {
    for (slot, set) in covered.iter_mut().zip(ris_keys) {
        *slot |= set.contains(label.key());
    }
}

/// Depth-first search below `node` for a leaf whose path covers the rest.
fn complete_below(
    scs: &Store,
    node: NodeId,
    ris_keys: &[HashSet<&str>],
    covered: Vec<bool>,
) -> Option<NodeId> {
    if covered.iter().all(|&c| c) {
        return Some(scs.leftmost_leaf(node));
    }
    for child in scs.node(node).children() {
        let mut cov = covered.clone();
        mark(ris_keys, scs.node(child).label().expect("child"), &mut cov);
        if let Some(leaf) = complete_below(scs, child, ris_keys, cov) {
            return Some(leaf);
        }
    }
    None
}

/// Whether some stored unsatisfiable constraint has every atom implied by
/// an atom of `c`.
pub fn check_subset(c: &Conjunction, ucs: &Store) -> bool {
    let allowed: HashSet<&str> = c
        .iter()
        .flat_map(|a| ucs.ipog().implied_by(a))
        .map(|m| m.atom().key())
        .collect();
    if allowed.is_empty() {
        return false;
    }
    let mut stack = vec![ucs.root()];
    while let Some(id) = stack.pop() {
        if ucs.is_leaf(id) {
            return true;
        }
        stack.extend(
            ucs.node(id)
                .children()
                .filter(|&child| allowed.contains(ucs.node(child).label().expect("child").key())),
        );
    }
    false
}

/// Reference implementation of [`check_superset`]: scans every stored
/// constraint and checks pairwise implication directly.
pub fn oracle_superset(c: &Conjunction, scs: &Store) -> Option<Solution> {
    if c.is_empty() {
        return None;
    }
    scs.constraints()
        .into_iter()
        .find(|stored| c.iter().all(|q| stored.atoms.iter().any(|s| implies(s, q))))
        .and_then(|stored| stored.solution)
}

/// Reference implementation of [`check_subset`].
pub fn oracle_subset(c: &Conjunction, ucs: &Store) -> bool {
    ucs.constraints()
        .iter()
        .any(|stored| stored.atoms.iter().all(|s| c.iter().any(|q| implies(q, s))))
}
