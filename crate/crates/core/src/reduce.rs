//! Interval reduction of same-prefix atoms.
//!
//! Every atom constrains the value of its prefix `P` to an interval, or
//! excludes a single point from it (`!=`). Atoms sharing a prefix are merged
//! into one interval plus a set of excluded points, then emitted again as at
//! most one lower bound, one upper bound (or a single equality) and the
//! exclusions that still fall strictly inside.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;

use crate::canon::Canonical;
use crate::expr::{Atom, CmpOp, Conjunction};

/// The atoms on one prefix cannot be satisfied together.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conflict {
    /// The offending prefix, or `None` for a variable-free false comparison.
    pub prefix: Option<String>,
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.prefix {
            Some(p) => write!(f, "conflicting bounds on `{p}`"),
            None => f.write_str("false comparison"),
        }
    }
}

/// Allowed values of a prefix: `[lo, hi]` minus `exceptions`; `None` bounds
/// are infinite.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefixInterval {
    pub lo: Option<BigInt>,
    pub hi: Option<BigInt>,
    pub exceptions: BTreeSet<BigInt>,
}

impl PrefixInterval {
    fn contains(&self, v: &BigInt) -> bool {
        self.lo.as_ref().is_none_or(|lo| lo <= v) && self.hi.as_ref().is_none_or(|hi| v <= hi)
    }

    fn is_empty(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(lo), Some(hi)) if lo > hi)
    }

    fn intersect(&mut self, other: PrefixInterval) {
        if let Some(lo) = other.lo {
            if self.lo.as_ref().is_none_or(|cur| &lo > cur) {
                self.lo = Some(lo);
            }
        }
        if let Some(hi) = other.hi {
            if self.hi.as_ref().is_none_or(|cur| &hi < cur) {
                self.hi = Some(hi);
            }
        }
        self.exceptions.extend(other.exceptions);
    }

    /// Drops exceptions outside the interval and moves endpoints off
    /// excluded points.
    fn tighten(&mut self) {
        let outside: Vec<BigInt> = self
            .exceptions
            .iter()
            .filter(|e| !self.contains(e))
            .cloned()
            .collect();
        for e in outside {
            self.exceptions.remove(&e);
        }
        while let Some(lo) = self.lo.take() {
            if !self.exceptions.remove(&lo) {
                self.lo = Some(lo);
                break;
            }
            self.lo = Some(lo + BigInt::one());
        }
        while let Some(hi) = self.hi.take() {
            if !self.exceptions.remove(&hi) {
                self.hi = Some(hi);
                break;
            }
            self.hi = Some(hi - BigInt::one());
        }
    }
}

/// The value interval a single atom allows for its prefix.
pub fn interval_of(a: &Atom) -> PrefixInterval {
    let v = -a.constant().clone();
    match a.op() {
        CmpOp::Le => PrefixInterval {
            hi: Some(v),
            ..Default::default()
        },
        CmpOp::Ge => PrefixInterval {
            lo: Some(v),
            ..Default::default()
        },
        CmpOp::Eq => PrefixInterval {
            lo: Some(v.clone()),
            hi: Some(v),
            ..Default::default()
        },
        CmpOp::Ne => PrefixInterval {
            exceptions: BTreeSet::from([v]),
            ..Default::default()
        },
    }
}

/// Merges atoms that all share one prefix.
pub fn merge_group(atoms: &[Atom]) -> Result<Vec<Atom>, Conflict> {
    let Some(first) = atoms.first() else {
        return Ok(Vec::new());
    };
    debug_assert!(atoms.iter().all(|a| a.prefix() == first.prefix()));
    let mut iv = PrefixInterval::default();
    for a in atoms {
        iv.intersect(interval_of(a));
    }
    iv.tighten();
    if iv.is_empty() {
        return Err(Conflict {
            prefix: Some(first.prefix().to_string()),
        });
    }
    let mut out = Vec::new();
    match (&iv.lo, &iv.hi) {
        (Some(lo), Some(hi)) if lo == hi => {
            out.push(first.with_bound(-lo.clone(), CmpOp::Eq));
        }
        (lo, hi) => {
            if let Some(lo) = lo {
                out.push(first.with_bound(-lo.clone(), CmpOp::Ge));
            }
            if let Some(hi) = hi {
                out.push(first.with_bound(-hi.clone(), CmpOp::Le));
            }
        }
    }
    out.extend(
        iv.exceptions
            .into_iter()
            .map(|e| first.with_bound(-e, CmpOp::Ne)),
    );
    Ok(out)
}

/// Merges every prefix group of `c`; atoms on other prefixes are untouched.
pub fn reduce(c: &Conjunction) -> Result<Conjunction, Conflict> {
    let mut groups: BTreeMap<&str, Vec<Atom>> = BTreeMap::new();
    for a in c {
        groups.entry(a.prefix()).or_default().push(a.clone());
    }
    let mut out = Vec::with_capacity(c.len());
    for atoms in groups.values() {
        out.extend(merge_group(atoms)?);
    }
    Ok(Conjunction::new(out))
}

/// Like [`reduce`], but also reports a variable-free false comparison
/// found during canonization.
pub fn reduce_canonical(c: &Canonical) -> Result<Conjunction, Conflict> {
    if c.contradiction {
        return Err(Conflict { prefix: None });
    }
    reduce(&c.conj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{normalize_atomic, Normalized};
    use crate::expr::parse;

    fn atoms(text: &str) -> Vec<Atom> {
        parse(text)
            .unwrap()
            .iter()
            .map(|r| match normalize_atomic(r) {
                Normalized::Atom(a) => a,
                other => panic!("{other:?}"),
            })
            .collect()
    }

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn intervals_of_single_atoms() {
        let a = &atoms("x+y+3<=0")[0];
        assert_eq!(interval_of(a).hi, Some(b(-3)));
        assert_eq!(interval_of(a).lo, None);
        let a = &atoms("x+y>=0")[0];
        assert_eq!(interval_of(a).lo, Some(b(0)));
        let a = &atoms("x+y+6!=0")[0];
        assert_eq!(interval_of(a).exceptions, BTreeSet::from([b(-6)]));
        let a = &atoms("x+y+4==0")[0];
        assert_eq!(interval_of(a).lo, Some(b(-4)));
        assert_eq!(interval_of(a).hi, Some(b(-4)));
    }

    #[test]
    fn worked_example() {
        let group = atoms("x+y+3>=0 && x+y+5>=0 && x+y-4<=0 && x+y!=0 && x+y+6!=0 && x+y-4!=0");
        let merged = merge_group(&group).unwrap();
        let out: Vec<&str> = merged.iter().map(Atom::key).collect();
        assert_eq!(out.join(" && "), "x+y+3>=0 && x+y-3<=0 && x+y!=0");
    }

    #[test]
    fn equality_against_lower_bound_conflicts() {
        assert!(merge_group(&atoms("x==0 && x-3>=0")).is_err());
    }

    #[test]
    fn outside_exception_is_redundant() {
        let out = merge_group(&atoms("x>=0 && x!=-2")).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].key(), "x>=0");
    }

    #[test]
    fn shrinking_endpoints_can_empty_the_interval() {
        assert!(merge_group(&atoms("x!=0 && x>=0 && x<=0")).is_err());
        let out = merge_group(&atoms("x>=0 && x<=2 && x!=0 && x!=1")).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].key(), "x-2=0");
    }

    #[test]
    fn other_prefixes_untouched() {
        let mut all = atoms("x+y+3>=0 && x+y+5>=0 && x+y-4<=0 && x+y!=0 && x+y+6!=0 && x+y-4!=0");
        all.extend(atoms("z-1>=0 && x-y+2<=0"));
        let out = reduce(&Conjunction::new(all)).unwrap();
        assert_eq!(
            out.to_string(),
            "x+y!=0 && x+y+3>=0 && x+y-3<=0 && x-y+2<=0 && z-1>=0"
        );
    }

    #[test]
    fn empty_conjunction() {
        assert_eq!(
            reduce(&Conjunction::default()).unwrap(),
            Conjunction::default()
        );
    }

    #[test]
    fn lone_exceptions_survive() {
        let out = reduce(&Conjunction::new(atoms("x!=1 && x!=-3"))).unwrap();
        assert_eq!(out.to_string(), "x+3!=0 && x-1!=0");
    }
}
