//! Query preprocessing: slicing, normalization of comparisons into
//! `P + k op 0` form, sorting and variable renaming.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::expr::{
    Atom, CmpOp, Conjunction, LinearExpr, RawComparison, RawRel, Solution, Term, VarName,
};

/// Up to this many variables, renaming searches every bijection and keeps
/// the lexicographically smallest rendering.
pub const EXACT_RENAMING_MAX_VARS: usize = 6;

const HEURISTIC_RENAMING_ROUNDS: usize = 8;

/// Result of normalizing one comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Atom(Atom),
    /// Variable-free and true; dropped by [`canonize`].
    True,
    /// Variable-free and false; the whole conjunction is unsatisfiable.
    False,
}

/// Rewrites `lhs rel rhs` as a canonical atom.
pub fn normalize_atomic(raw: &RawComparison) -> Normalized {
    let lhs = raw.lhs.to_linear();
    let rhs = raw.rhs.to_linear();
    let (lt, lk) = lhs.into_parts();
    let (rt, rk) = rhs.into_parts();
    let terms = lt
        .into_iter()
        .chain(rt.into_iter().map(|t| Term::new(-t.coeff, t.var)));
    let mut k = lk - rk;
    let op = match raw.rel {
        RawRel::Lt => {
            k += 1;
            CmpOp::Le
        }
        RawRel::Gt => {
            k -= 1;
            CmpOp::Ge
        }
        RawRel::Le => CmpOp::Le,
        RawRel::Ge => CmpOp::Ge,
        RawRel::Eq => CmpOp::Eq,
        RawRel::Ne => CmpOp::Ne,
    };
    normalize_linear(LinearExpr::new(terms, k), op)
}

/// Normalizes `expr op 0`: divides by the coefficient GCD (tightening the
/// constant for inequalities) and makes the leading coefficient positive.
pub fn normalize_linear(expr: LinearExpr, op: CmpOp) -> Normalized {
    if expr.is_constant() {
        return if op.holds(expr.constant()) {
            Normalized::True
        } else {
            Normalized::False
        };
    }
    let (mut terms, mut k) = expr.into_parts();
    let g = terms.iter().fold(BigInt::zero(), |g, t| g.gcd(&t.coeff));
    let mut op = op;
    if !g.is_one() {
        for t in &mut terms {
            t.coeff /= &g;
        }
        let (q, r) = k.div_mod_floor(&g);
        k = match op {
            // P/g <= -k/g  <=>  P/g + ceil(k/g) <= 0
            CmpOp::Le if !r.is_zero() => q + 1,
            CmpOp::Le | CmpOp::Ge => q,
            CmpOp::Eq if !r.is_zero() => return Normalized::False,
            CmpOp::Ne if !r.is_zero() => return Normalized::True,
            CmpOp::Eq | CmpOp::Ne => q,
        };
    }
    if terms[0].coeff.is_negative() {
        for t in &mut terms {
            t.coeff = -std::mem::take(&mut t.coeff);
        }
        k = -k;
        op = op.negated_sides();
    }
    Normalized::Atom(Atom::new(terms, k, op).expect("terms sorted, merged and nonzero"))
}

/// Bijection between the caller's variable names and canonical `vN` names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Renaming {
    forward: BTreeMap<VarName, VarName>,
    backward: BTreeMap<VarName, VarName>,
}

impl Renaming {
    fn from_pairs(pairs: impl IntoIterator<Item = (VarName, VarName)>) -> Self {
        let forward: BTreeMap<_, _> = pairs.into_iter().collect();
        let backward = forward
            .iter()
            .map(|(a, b)| (b.clone(), a.clone()))
            .collect();
        Renaming { forward, backward }
    }

    pub fn canonical_of(&self, original: &VarName) -> Option<&VarName> {
        self.forward.get(original)
    }

    pub fn original_of(&self, canonical: &VarName) -> Option<&VarName> {
        self.backward.get(canonical)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Maps a canonical-space solution back to original names, dropping
    /// bindings for variables the query does not mention.
    pub fn to_original(&self, sol: &Solution) -> Solution {
        sol.iter()
            .filter_map(|(v, val)| Some((self.backward.get(v)?.clone(), val.clone())))
            .collect()
    }

    pub fn to_canonical(&self, sol: &Solution) -> Solution {
        sol.iter()
            .filter_map(|(v, val)| Some((self.forward.get(v)?.clone(), val.clone())))
            .collect()
    }
}

/// A canonized query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    pub conj: Conjunction,
    pub renaming: Renaming,
    /// Some comparison was variable-free and false.
    pub contradiction: bool,
}

/// Normalizes, sorts and renames a raw conjunction.
///
/// Equal inputs up to variable naming and conjunct order produce identical
/// output.
pub fn canonize(raw: &[RawComparison]) -> Canonical {
    let mut atoms = Vec::with_capacity(raw.len());
    let mut contradiction = false;
    for r in raw {
        match normalize_atomic(r) {
            Normalized::Atom(a) => atoms.push(a),
            Normalized::True => {}
            Normalized::False => contradiction = true,
        }
    }
    let (conj, renaming) = rename(atoms);
    Canonical {
        conj,
        renaming,
        contradiction,
    }
}

/// Re-canonizes atoms that are already in normal form.
pub fn canonize_atoms(atoms: impl IntoIterator<Item = Atom>) -> Canonical {
    let (conj, renaming) = rename(atoms.into_iter().collect());
    Canonical {
        conj,
        renaming,
        contradiction: false,
    }
}

fn rename(mut atoms: Vec<Atom>) -> (Conjunction, Renaming) {
    atoms.sort();
    atoms.dedup();
    let vars: Vec<VarName> = atoms
        .iter()
        .flat_map(Atom::vars)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if vars.len() <= EXACT_RENAMING_MAX_VARS {
        rename_exhaustive(&atoms, &vars)
    } else {
        rename_by_first_occurrence(atoms)
    }
}

fn rename_atom(atom: &Atom, map: &HashMap<&VarName, VarName>) -> Atom {
    let terms = atom
        .terms()
        .iter()
        .map(|t| Term::new(t.coeff.clone(), map[&t.var].clone()));
    match normalize_linear(LinearExpr::new(terms, atom.constant().clone()), atom.op()) {
        Normalized::Atom(a) => a,
        _ => unreachable!("renaming keeps an atom non-constant"),
    }
}

fn rename_exhaustive(atoms: &[Atom], vars: &[VarName]) -> (Conjunction, Renaming) {
    let targets: Vec<VarName> = (0..vars.len()).map(VarName::canonical).collect();
    let mut perm: Vec<usize> = (0..vars.len()).collect();
    let mut best: Option<(Vec<Atom>, Vec<usize>)> = None;
    loop {
        let map: HashMap<&VarName, VarName> = vars
            .iter()
            .zip(&perm)
            .map(|(v, &i)| (v, targets[i].clone()))
            .collect();
        let mut renamed: Vec<Atom> = atoms.iter().map(|a| rename_atom(a, &map)).collect();
        renamed.sort();
        if best.as_ref().is_none_or(|(b, _)| renamed < *b) {
            best = Some((renamed, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let (atoms, perm) = best.expect("at least the identity permutation");
    let renaming = Renaming::from_pairs(
        vars.iter()
            .zip(&perm)
            .map(|(v, &i)| (v.clone(), targets[i].clone())),
    );
    (Conjunction::new(atoms), renaming)
}

fn rename_by_first_occurrence(atoms: Vec<Atom>) -> (Conjunction, Renaming) {
    // original -> current name
    let mut total: BTreeMap<VarName, VarName> = atoms
        .iter()
        .flat_map(Atom::vars)
        .map(|v| (v.clone(), v.clone()))
        .collect();
    let mut current = atoms;
    for _ in 0..HEURISTIC_RENAMING_ROUNDS {
        let mut order: Vec<&VarName> = Vec::new();
        for v in current.iter().flat_map(Atom::vars) {
            if !order.contains(&v) {
                order.push(v);
            }
        }
        let map: HashMap<&VarName, VarName> = order
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, VarName::canonical(i)))
            .collect();
        let mut next: Vec<Atom> = current.iter().map(|a| rename_atom(a, &map)).collect();
        next.sort();
        for to in total.values_mut() {
            *to = map[to].clone();
        }
        let stable = next == current;
        current = next;
        if stable {
            break;
        }
    }
    (Conjunction::new(current), Renaming::from_pairs(total))
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("p[i] qualifies");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Anything that mentions variables.
pub trait HasVars {
    fn var_names(&self) -> Vec<&VarName>;
}

impl HasVars for Atom {
    fn var_names(&self) -> Vec<&VarName> {
        self.vars().collect()
    }
}

impl HasVars for RawComparison {
    fn var_names(&self) -> Vec<&VarName> {
        self.vars().collect()
    }
}

/// Keeps the items connected, through shared variables, to one of the last
/// `fresh_count` items. Order is preserved; `fresh_count == 0` keeps all.
pub fn slice<T: HasVars + Clone>(items: &[T], fresh_count: usize) -> Vec<T> {
    if fresh_count == 0 {
        return items.to_vec();
    }
    let fresh_from = items.len().saturating_sub(fresh_count);
    let mut by_var: HashMap<&VarName, Vec<usize>> = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        for v in item.var_names() {
            by_var.entry(v).or_default().push(i);
        }
    }
    let mut keep = vec![false; items.len()];
    let mut queue: VecDeque<usize> = (fresh_from..items.len()).collect();
    for &i in &queue {
        keep[i] = true;
    }
    let mut seen_vars: BTreeSet<&VarName> = BTreeSet::new();
    while let Some(i) = queue.pop_front() {
        for v in items[i].var_names() {
            if !seen_vars.insert(v) {
                continue;
            }
            for &j in &by_var[v] {
                if !keep[j] {
                    keep[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    items
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(item, _)| item.clone())
        .collect()
}

/// Atoms in arrival order; the trailing `fresh_count` are the new ones.
#[derive(Debug, Clone)]
pub struct SlicedQuery {
    pub atoms: Vec<Atom>,
    pub fresh_count: usize,
}

impl SlicedQuery {
    pub fn slice(&self) -> Conjunction {
        Conjunction::new(slice(&self.atoms, self.fresh_count))
    }
}
