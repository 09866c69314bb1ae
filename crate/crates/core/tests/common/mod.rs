//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::HashSet;

use implcache::canon::{normalize_linear, Normalized};
use implcache::expr::{Atom, CmpOp, Conjunction, LinearExpr, Solution, Term, VarName};
use implcache::ltrie::{NodeId, Store, StoreKind};
use num_bigint::BigInt;
use rand::Rng;

pub const OPS: [CmpOp; 4] = [CmpOp::Eq, CmpOp::Ne, CmpOp::Le, CmpOp::Ge];

pub fn var(i: usize) -> VarName {
    VarName::canonical(i)
}

/// `Σ coeff*v_i + k op 0`, normalized; `None` if it folds to a constant.
pub fn atom_from(coeffs: &[(usize, i64)], k: i64, op: CmpOp) -> Option<Atom> {
    let terms = coeffs.iter().map(|&(v, c)| Term::new(c, var(v)));
    match normalize_linear(LinearExpr::new(terms, BigInt::from(k)), op) {
        Normalized::Atom(a) => Some(a),
        _ => None,
    }
}

/// Random atom over `nvars` variables, coefficients in `[-3,3]` and
/// constant in `[-8,8]`.
pub fn random_atom(rng: &mut impl Rng, nvars: usize) -> Atom {
    loop {
        let n = rng.gen_range(1..=nvars.min(3));
        let mut vars: Vec<usize> = (0..nvars).collect();
        for i in 0..n {
            let j = rng.gen_range(i..nvars);
            vars.swap(i, j);
        }
        let coeffs: Vec<(usize, i64)> = vars[..n]
            .iter()
            .map(|&v| (v, [-3, -2, -1, 1, 2, 3][rng.gen_range(0..6)]))
            .collect();
        let op = OPS[rng.gen_range(0..4)];
        if let Some(a) = atom_from(&coeffs, rng.gen_range(-8..=8), op) {
            return a;
        }
    }
}

pub fn random_conj(rng: &mut impl Rng, nvars: usize, len: usize) -> Conjunction {
    Conjunction::new((0..len).map(|_| random_atom(rng, nvars)))
}

pub fn random_point(rng: &mut impl Rng, nvars: usize, d: i64) -> Solution {
    (0..nvars)
        .map(|i| (var(i), BigInt::from(rng.gen_range(-d..=d))))
        .collect()
}

/// A conjunction of `len` atoms all true at `point`.
pub fn conj_true_at(rng: &mut impl Rng, nvars: usize, len: usize, point: &Solution) -> Conjunction {
    let mut atoms = Vec::with_capacity(len);
    while atoms.len() < len {
        let a = random_atom(rng, nvars);
        if a.holds(point).unwrap() {
            atoms.push(a);
        }
    }
    Conjunction::new(atoms)
}

/// An atom implied by `a` (possibly `a` itself).
pub fn weaken(rng: &mut impl Rng, a: &Atom) -> Atom {
    let k = a.constant().clone();
    let d = BigInt::from(rng.gen_range(0..=3));
    match (a.op(), rng.gen_range(0..3)) {
        (CmpOp::Le, 0) => a.with_bound(&k - &d - 1, CmpOp::Ne),
        (CmpOp::Le, _) => a.with_bound(&k - &d, CmpOp::Le),
        (CmpOp::Ge, 0) => a.with_bound(&k + &d + 1, CmpOp::Ne),
        (CmpOp::Ge, _) => a.with_bound(&k + &d, CmpOp::Ge),
        (CmpOp::Eq, 0) => a.with_bound(&k - &d, CmpOp::Le),
        (CmpOp::Eq, 1) => a.with_bound(&k + &d, CmpOp::Ge),
        (CmpOp::Eq, _) => a.with_bound(&k + &d + 1, CmpOp::Ne),
        (CmpOp::Ne, _) => a.clone(),
    }
}

/// An atom implying `a` (possibly `a` itself).
pub fn strengthen(rng: &mut impl Rng, a: &Atom) -> Atom {
    let k = a.constant().clone();
    let d = BigInt::from(rng.gen_range(0..=3));
    match (a.op(), rng.gen_range(0..2)) {
        (CmpOp::Le, 0) => a.with_bound(&k + &d, CmpOp::Le),
        (CmpOp::Le, _) => a.with_bound(&k + &d, CmpOp::Eq),
        (CmpOp::Ge, 0) => a.with_bound(&k - &d, CmpOp::Ge),
        (CmpOp::Ge, _) => a.with_bound(&k - &d, CmpOp::Eq),
        (CmpOp::Eq, _) => a.clone(),
        (CmpOp::Ne, 0) => a.with_bound(&k + &d + 1, CmpOp::Le),
        (CmpOp::Ne, _) => a.with_bound(&k - &d - 1, CmpOp::Ge),
    }
}

/// One random (SCS, UCS, query) workload in the oracle-equivalence
/// envelope: at most 4 variables and 50 stored constraints per store.
pub struct Workload {
    pub scs: Store,
    pub ucs: Store,
    pub query: Conjunction,
}

pub fn workload(rng: &mut impl Rng) -> Workload {
    let nvars = rng.gen_range(1..=4);
    let mut scs = Store::new(StoreKind::Sat);
    let mut ucs = Store::new(StoreKind::Unsat);
    let mut sat_entries = Vec::new();
    let mut unsat_entries = Vec::new();
    for _ in 0..rng.gen_range(0..=50) {
        let point = random_point(rng, nvars, 8);
        let len = rng.gen_range(1..=5);
        let c = conj_true_at(rng, nvars, len, &point);
        scs.insert(&c, Some(point.restrict(c.vars()))).unwrap();
        sat_entries.push(c);
    }
    for _ in 0..rng.gen_range(0..=50) {
        let len = rng.gen_range(1..=5);
        let c = random_conj(rng, nvars, len);
        ucs.insert(&c, None).unwrap();
        unsat_entries.push(c);
    }
    let query = match rng.gen_range(0..3) {
        0 if !sat_entries.is_empty() => {
            let base = &sat_entries[rng.gen_range(0..sat_entries.len())];
            let mut atoms = Vec::new();
            for a in base.iter() {
                if rng.gen_bool(0.6) {
                    atoms.push(weaken(rng, a));
                }
            }
            if atoms.is_empty() {
                atoms.push(weaken(rng, &base.atoms()[0]));
            }
            if rng.gen_bool(0.2) {
                atoms.push(random_atom(rng, nvars));
            }
            Conjunction::new(atoms)
        }
        1 if !unsat_entries.is_empty() => {
            let base = &unsat_entries[rng.gen_range(0..unsat_entries.len())];
            let mut atoms: Vec<Atom> = base.iter().map(|a| strengthen(rng, a)).collect();
            if rng.gen_bool(0.2) {
                let i = rng.gen_range(0..atoms.len());
                atoms.remove(i);
            }
            for _ in 0..rng.gen_range(0..=2) {
                atoms.push(random_atom(rng, nvars));
            }
            if atoms.is_empty() {
                atoms.push(random_atom(rng, nvars));
            }
            Conjunction::new(atoms)
        }
        _ => {
            let len = rng.gen_range(1..=4);
            random_conj(rng, nvars, len)
        }
    };
    Workload { scs, ucs, query }
}

/// Algorithm 1 as printed: start nodes from the rightmost atom's RIS,
/// then a strictly right-to-left upward scan.
pub fn literal_check_superset(c: &Conjunction, scs: &Store) -> bool {
    let Some(last) = c.atoms().last() else {
        return false;
    };
    let mut l: Vec<HashSet<String>> = Vec::new();
    for a in c {
        let s: HashSet<String> = scs
            .ipog()
            .implying(a)
            .iter()
            .map(|m| m.atom().key().to_string())
            .collect();
        if s.is_empty() {
            return false;
        }
        l.push(s);
    }
    for member in scs.ipog().implying(last) {
        for &n in member.refs() {
            if literal_is_superset(scs, n, &l) {
                return true;
            }
        }
    }
    false
}

fn literal_is_superset(scs: &Store, n: NodeId, l: &[HashSet<String>]) -> bool {
    let mut cur = n;
    let mut pos = l.len() - 1;
    while cur != scs.root() {
        let label = scs.node(cur).label().unwrap().key();
        while l[pos].contains(label) {
            if pos == 0 {
                return true;
            }
            pos -= 1;
        }
        cur = scs.node(cur).parent().unwrap();
    }
    false
}

/// Every assignment of `vars` over `[-d, d]`.
pub fn box_points(vars: &[VarName], d: i64) -> Vec<Solution> {
    let mut out = vec![Solution::new()];
    for v in vars {
        let mut next = Vec::with_capacity(out.len() * (2 * d as usize + 1));
        for p in &out {
            for x in -d..=d {
                let mut q = p.clone();
                q.bind(v.clone(), x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}
