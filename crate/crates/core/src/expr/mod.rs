//! Linear integer constraints: variables, atoms in normal form, conjunctions
//! and valuations.
//!
//! An [`Atom`] is always canonical: its terms are sorted by variable name,
//! carry nonzero coefficients, and the first coefficient is positive. The
//! canonical rendering is computed once at construction and doubles as the
//! sort and hash key, so comparing atoms is a string comparison.

mod parse;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub use parse::{parse, RawComparison, RawRel, RawSum, RawTerm};

/// A variable identifier: a letter followed by letters, digits or `_`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarName(String);

impl VarName {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        let mut chars = name.chars();
        let valid = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        if valid {
            Ok(VarName(name))
        } else {
            Err(Error::InvalidArgument(format!(
                "bad variable name `{name}`"
            )))
        }
    }

    /// The `index`-th canonical name (`v0`, `v1`, ...).
    pub fn canonical(index: usize) -> Self {
        VarName(format!("v{index}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for VarName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        VarName::new(s)
    }
}

/// Comparison against zero in normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Le,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    /// The operator obtained when both sides are multiplied by -1.
    pub fn negated_sides(self) -> CmpOp {
        match self {
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
            op => op,
        }
    }

    pub fn holds(self, value: &BigInt) -> bool {
        match self {
            CmpOp::Eq => value.is_zero(),
            CmpOp::Ne => !value.is_zero(),
            CmpOp::Le => !value.is_positive(),
            CmpOp::Ge => !value.is_negative(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    pub coeff: BigInt,
    pub var: VarName,
}

impl Term {
    pub fn new(coeff: impl Into<BigInt>, var: VarName) -> Self {
        Term {
            coeff: coeff.into(),
            var,
        }
    }
}

/// A linear combination of variables plus a constant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearExpr {
    terms: Vec<Term>,
    constant: BigInt,
}

impl LinearExpr {
    /// Builds an expression from arbitrary terms, merging duplicates and
    /// dropping zero coefficients.
    pub fn new(terms: impl IntoIterator<Item = Term>, constant: BigInt) -> Self {
        let mut merged: BTreeMap<VarName, BigInt> = BTreeMap::new();
        for t in terms {
            *merged.entry(t.var).or_default() += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(var, coeff)| Term { coeff, var })
            .collect();
        LinearExpr { terms, constant }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn constant(&self) -> &BigInt {
        &self.constant
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn into_parts(self) -> (Vec<Term>, BigInt) {
        (self.terms, self.constant)
    }

    pub fn eval(&self, sol: &Solution) -> Result<BigInt> {
        let mut acc = self.constant.clone();
        for t in &self.terms {
            acc += &t.coeff * sol.require(&t.var)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "{}", self.constant);
        }
        write_terms(f, &self.terms)?;
        write_constant(f, &self.constant)
    }
}

fn write_terms(f: &mut impl fmt::Write, terms: &[Term]) -> fmt::Result {
    for (i, t) in terms.iter().enumerate() {
        let neg = t.coeff.is_negative();
        if neg {
            f.write_char('-')?;
        } else if i > 0 {
            f.write_char('+')?;
        }
        let mag = t.coeff.abs();
        if mag.is_one() {
            write!(f, "{}", t.var)?;
        } else {
            write!(f, "{}*{}", mag, t.var)?;
        }
    }
    Ok(())
}

fn write_constant(f: &mut impl fmt::Write, k: &BigInt) -> fmt::Result {
    if k.is_positive() {
        write!(f, "+{k}")
    } else if k.is_negative() {
        write!(f, "{k}")
    } else {
        Ok(())
    }
}

/// One linear constraint `P + k op 0` in normal form.
#[derive(Clone)]
pub struct Atom {
    terms: Vec<Term>,
    k: BigInt,
    op: CmpOp,
    key: String,
    prefix_len: usize,
}

impl Atom {
    /// Creates an atom from a non-constant prefix that is already canonical.
    ///
    /// Returns `None` if the prefix is empty, unsorted, has duplicate or zero
    /// coefficients, or starts with a negative coefficient.
    pub fn new(terms: Vec<Term>, k: BigInt, op: CmpOp) -> Option<Self> {
        let first = terms.first()?;
        if !first.coeff.is_positive() {
            return None;
        }
        if terms.iter().any(|t| t.coeff.is_zero()) {
            return None;
        }
        if terms.windows(2).any(|w| w[0].var >= w[1].var) {
            return None;
        }
        let mut key = String::new();
        write_terms(&mut key, &terms).expect("writing to a String");
        let prefix_len = key.len();
        write_constant(&mut key, &k).expect("writing to a String");
        key.push_str(op.symbol());
        key.push('0');
        Some(Atom {
            terms,
            k,
            op,
            key,
            prefix_len,
        })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn constant(&self) -> &BigInt {
        &self.k
    }

    pub fn op(&self) -> CmpOp {
        self.op
    }

    /// Canonical rendering, e.g. `v0+v1+1<=0`.
    pub fn key(&self) -> &str {
        &self.key
    }

    /// Rendering of the non-constant prefix alone, e.g. `v0+v1`.
    pub fn prefix(&self) -> &str {
        &self.key[..self.prefix_len]
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarName> {
        self.terms.iter().map(|t| &t.var)
    }

    /// Same prefix, different constant and operator.
    pub fn with_bound(&self, k: BigInt, op: CmpOp) -> Atom {
        Atom::new(self.terms.clone(), k, op).expect("prefix already canonical")
    }

    pub fn holds(&self, sol: &Solution) -> Result<bool> {
        let mut acc = self.k.clone();
        for t in &self.terms {
            acc += &t.coeff * sol.require(&t.var)?;
        }
        Ok(self.op.holds(&acc))
    }
}

impl PartialEq for Atom {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl Eq for Atom {}

impl PartialOrd for Atom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Atom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

impl Hash for Atom {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key.hash(state)
    }
}

impl fmt::Debug for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Atom({})", self.key)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key)
    }
}

/// A duplicate-free conjunction of atoms kept in canonical-string order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Conjunction {
    atoms: Vec<Atom>,
}

impl Conjunction {
    pub fn new(atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut atoms: Vec<Atom> = atoms.into_iter().collect();
        atoms.sort();
        atoms.dedup();
        Conjunction { atoms }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Atom> {
        self.atoms.iter()
    }

    pub fn vars(&self) -> BTreeSet<&VarName> {
        self.atoms.iter().flat_map(Atom::vars).collect()
    }

    pub fn holds(&self, sol: &Solution) -> Result<bool> {
        for a in &self.atoms {
            if !a.holds(sol)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl<'a> IntoIterator for &'a Conjunction {
    type Item = &'a Atom;
    type IntoIter = std::slice::Iter<'a, Atom>;

    fn into_iter(self) -> Self::IntoIter {
        self.atoms.iter()
    }
}

impl fmt::Display for Conjunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            f.write_str(a.key())?;
        }
        Ok(())
    }
}

/// An integer valuation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Solution {
    bindings: BTreeMap<VarName, BigInt>,
}

impl Solution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: VarName, value: impl Into<BigInt>) {
        self.bindings.insert(var, value.into());
    }

    pub fn get(&self, var: &VarName) -> Option<&BigInt> {
        self.bindings.get(var)
    }

    pub fn require(&self, var: &VarName) -> Result<&BigInt> {
        self.bindings
            .get(var)
            .ok_or_else(|| Error::UnboundVariable(var.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarName, &BigInt)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Keeps only the bindings for `vars`.
    pub fn restrict<'a>(&self, vars: impl IntoIterator<Item = &'a VarName>) -> Solution {
        let mut out = Solution::new();
        for v in vars {
            if let Some(val) = self.bindings.get(v) {
                out.bind(v.clone(), val.clone());
            }
        }
        out
    }

    /// Parses `x=1 y=-3`; the empty string is the empty valuation.
    pub fn parse_bindings(text: &str) -> Result<Solution> {
        let mut sol = Solution::new();
        for item in text.split_whitespace() {
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("bad binding `{item}`")))?;
            let value: BigInt = value
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad integer in `{item}`")))?;
            sol.bind(VarName::new(name)?, value);
        }
        Ok(sol)
    }
}

impl FromIterator<(VarName, BigInt)> for Solution {
    fn from_iter<I: IntoIterator<Item = (VarName, BigInt)>>(iter: I) -> Self {
        Solution {
            bindings: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (var, val)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{var}={val}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(name: &str) -> VarName {
        VarName::new(name).unwrap()
    }

    fn atom(terms: &[(i64, &str)], k: i64, op: CmpOp) -> Atom {
        let terms = terms.iter().map(|&(c, n)| Term::new(c, v(n))).collect();
        Atom::new(terms, k.into(), op).unwrap()
    }

    #[test]
    fn renders_canonical_forms() {
        assert_eq!(
            atom(&[(1, "v0"), (1, "v1")], 1, CmpOp::Le).key(),
            "v0+v1+1<=0"
        );
        assert_eq!(atom(&[(1, "v0")], -5, CmpOp::Ne).key(), "v0-5!=0");
        assert_eq!(
            atom(&[(1, "v0"), (-1, "v2")], 0, CmpOp::Eq).key(),
            "v0-v2=0"
        );
        assert_eq!(
            atom(&[(3, "a"), (-2, "b")], 0, CmpOp::Ge).key(),
            "3*a-2*b>=0"
        );
    }

    #[test]
    fn prefix_excludes_constant() {
        let a = atom(&[(1, "x"), (1, "y")], 6, CmpOp::Ne);
        assert_eq!(a.prefix(), "x+y");
        assert_eq!(atom(&[(1, "x"), (1, "y")], 0, CmpOp::Ge).prefix(), "x+y");
    }

    #[test]
    fn rejects_non_canonical_prefixes() {
        let neg = vec![Term::new(-1, v("x"))];
        assert!(Atom::new(neg, BigInt::zero(), CmpOp::Le).is_none());
        let unsorted = vec![Term::new(1, v("y")), Term::new(1, v("x"))];
        assert!(Atom::new(unsorted, BigInt::zero(), CmpOp::Le).is_none());
        assert!(Atom::new(vec![], BigInt::zero(), CmpOp::Le).is_none());
    }

    #[test]
    fn evaluates_under_valuations() {
        // v0+5>=0 && v0+v1<=0 with {v0:0, v1:-1}
        let c = Conjunction::new([
            atom(&[(1, "v0")], 5, CmpOp::Ge),
            atom(&[(1, "v0"), (1, "v1")], 0, CmpOp::Le),
        ]);
        let sol = Solution::parse_bindings("v0=0 v1=-1").unwrap();
        assert!(c.holds(&sol).unwrap());

        let x1 = atom(&[(1, "x")], 1, CmpOp::Le);
        assert!(!x1.holds(&Solution::parse_bindings("x=0").unwrap()).unwrap());
    }

    #[test]
    fn unbound_variable_is_an_error() {
        let a = atom(&[(1, "x")], 0, CmpOp::Le);
        assert!(matches!(a.holds(&Solution::new()), Err(Error::UnboundVariable(n)) if n == "x"));
    }

    #[test]
    fn conjunction_sorts_and_dedups() {
        let a = atom(&[(1, "x")], 1, CmpOp::Le);
        let b = atom(&[(1, "x")], -1, CmpOp::Ge);
        let c = Conjunction::new([b.clone(), a.clone(), a.clone()]);
        assert_eq!(c.atoms(), &[a, b]);
        assert_eq!(c.to_string(), "x+1<=0 && x-1>=0");
    }

    #[test]
    fn var_names_are_validated() {
        assert!(VarName::new("x_1").is_ok());
        assert!(VarName::new("1x").is_err());
        assert!(VarName::new("").is_err());
        assert!(VarName::new("a-b").is_err());
    }
}
