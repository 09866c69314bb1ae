//! Implication between two atoms sharing a non-constant prefix.
//!
//! With `P` the shared prefix, `n` the constant of the premise and `n'` the
//! constant of the conclusion:
//!
//! | premise    | conclusion  | holds when |
//! |------------|-------------|------------|
//! | `P+n=0`    | `P+n'!=0`   | `n != n'`  |
//! | `P+n=0`    | `P+n'<=0`   | `n >= n'`  |
//! | `P+n=0`    | `P+n'>=0`   | `n <= n'`  |
//! | `P+n<=0`   | `P+n'!=0`   | `n > n'`   |
//! | `P+n<=0`   | `P+n'<=0`   | `n > n'`   |
//! | `P+n>=0`   | `P+n'!=0`   | `n < n'`   |
//! | `P+n>=0`   | `P+n'>=0`   | `n < n'`   |
//!
//! plus reflexivity. Atoms with different prefixes are never related, so the
//! check is sound but incomplete.

use num_bigint::BigInt;

use crate::expr::{Atom, CmpOp};

/// The rule table for same-prefix atoms, excluding reflexivity.
pub fn rule_table(premise: CmpOp, conclusion: CmpOp, n: &BigInt, n2: &BigInt) -> bool {
    use CmpOp::*;
    match (premise, conclusion) {
        (Eq, Ne) => n != n2,
        (Eq, Le) => n >= n2,
        (Eq, Ge) => n <= n2,
        (Le, Ne) => n > n2,
        (Le, Le) => n > n2,
        (Ge, Ne) => n < n2,
        (Ge, Ge) => n < n2,
        _ => false,
    }
}

/// Whether `a` implies `b` by one of the rules.
pub fn implies(a: &Atom, b: &Atom) -> bool {
    a == b || (a.prefix() == b.prefix() && rule_table(a.op(), b.op(), a.constant(), b.constant()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::canon::{normalize_atomic, Normalized};
    use crate::expr::parse;

    fn atom(text: &str) -> Atom {
        match normalize_atomic(&parse(text).unwrap()[0]) {
            Normalized::Atom(a) => a,
            other => panic!("{text}: {other:?}"),
        }
    }

    fn b(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn same_prefix_examples() {
        assert!(implies(&atom("x+2==0"), &atom("x+1<=0")));
        assert!(implies(&atom("x+2<=0"), &atom("x+1!=0")));
        assert!(!implies(&atom("x+1<=0"), &atom("x+5<=0")));
        assert!(!implies(&atom("x+1<=0"), &atom("y+1<=0")));
    }

    #[test]
    fn table_entries() {
        assert!(rule_table(CmpOp::Ge, CmpOp::Ge, &b(-3), &b(-2)));
        assert!(!rule_table(CmpOp::Eq, CmpOp::Ne, &b(4), &b(4)));
        assert!(!rule_table(CmpOp::Le, CmpOp::Ge, &b(5), &b(1)));
        // equal constants only through reflexivity
        assert!(!rule_table(CmpOp::Le, CmpOp::Le, &b(1), &b(1)));
        assert!(implies(&atom("x+1<=0"), &atom("x+1<=0")));
    }

    #[test]
    fn exhaustive_soundness_on_small_range() {
        let ops = [CmpOp::Eq, CmpOp::Ne, CmpOp::Le, CmpOp::Ge];
        for &pa in &ops {
            for &pb in &ops {
                for n in -10..=10 {
                    for n2 in -10..=10 {
                        if !rule_table(pa, pb, &b(n), &b(n2)) {
                            continue;
                        }
                        for t in -30..=30 {
                            if pa.holds(&b(t + n)) {
                                assert!(pb.holds(&b(t + n2)), "{pa:?} {n} -> {pb:?} {n2} at {t}");
                            }
                        }
                    }
                }
            }
        }
    }
}
