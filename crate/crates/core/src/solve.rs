//! Solver backends: a bounded exhaustive search and an adapter for external
//! solvers speaking a one-line text protocol.

use std::io::{self, Write};
use std::process::{Command, Stdio};

use log::warn;
use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::expr::{CmpOp, Conjunction, Solution, VarName};

/// Default ceiling on assignments tried by [`brute_force_solve`].
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Solution),
    /// No solution in the searched box. Exact only under a corpus envelope
    /// that guarantees solutions lie inside the box.
    UnsatWithinBound,
    /// Proven unsatisfiable by an external solver.
    Unsat,
    Unknown,
}

impl Verdict {
    pub fn is_unsat(&self) -> bool {
        matches!(self, Verdict::Unsat | Verdict::UnsatWithinBound)
    }
}

pub trait Solver {
    fn solve(&mut self, c: &Conjunction) -> Verdict;
}

/// Exhaustive search over `[-bound, bound]` per variable.
#[derive(Debug, Clone, Copy)]
pub struct BoundedSolver {
    pub bound: u64,
    pub budget: u64,
}

impl BoundedSolver {
    pub fn new(bound: u64) -> Self {
        BoundedSolver {
            bound,
            budget: DEFAULT_BUDGET,
        }
    }
}

impl Solver for BoundedSolver {
    fn solve(&mut self, c: &Conjunction) -> Verdict {
        search(c, self.bound, self.budget)
    }
}

/// Returns the lexicographically first solution in `[-bound, bound]^vars`
/// (variables in name order), scanning at most [`DEFAULT_BUDGET`]
/// candidate values.
pub fn brute_force_solve(c: &Conjunction, bound: u64) -> Verdict {
    search(c, bound, DEFAULT_BUDGET)
}

struct Row {
    coeffs: Vec<i128>,
    k: i128,
    op: CmpOp,
    /// Highest variable index with a nonzero coefficient.
    last: usize,
}

struct Search<'a> {
    rows: &'a [Row],
    /// `tail[r][j]`: sum of `|coeff| * bound` over variables after `j`.
    tail: Vec<Vec<i128>>,
    bound: i128,
    values: Vec<i128>,
    partial: Vec<i128>,
    visited: u64,
    budget: u64,
}

enum Step {
    Found,
    Exhausted,
    OutOfBudget,
}

fn search(c: &Conjunction, bound: u64, budget: u64) -> Verdict {
    let vars: Vec<&VarName> = c.vars().into_iter().collect();
    if vars.is_empty() {
        return Verdict::Sat(Solution::new());
    }
    let Some(bound) = i128::from(bound)
        .checked_mul(1)
        .filter(|b| *b <= i64::MAX as i128)
    else {
        return Verdict::Unknown;
    };
    let mut rows = Vec::with_capacity(c.len());
    for a in c {
        let mut coeffs = vec![0i128; vars.len()];
        let mut last = 0;
        for t in a.terms() {
            let Some(v) = t.coeff.to_i64() else {
                return Verdict::Unknown;
            };
            let idx = vars.binary_search(&&t.var).expect("var collected above");
            coeffs[idx] = v as i128;
            last = last.max(idx);
        }
        let Some(k) = a.constant().to_i64() else {
            return Verdict::Unknown;
        };
        rows.push(Row {
            coeffs,
            k: k as i128,
            op: a.op(),
            last,
        });
    }
    let tail = rows
        .iter()
        .map(|r| {
            let mut t = vec![0i128; vars.len()];
            for j in (0..vars.len().saturating_sub(1)).rev() {
                t[j] = t[j + 1] + r.coeffs[j + 1].abs() * bound;
            }
            t
        })
        .collect();
    let mut s = Search {
        partial: rows.iter().map(|r| r.k).collect(),
        rows: &rows,
        tail,
        bound,
        values: vec![0; vars.len()],
        visited: 0,
        budget,
    };
    match s.descend(0) {
        Step::Found => Verdict::Sat(
            vars.iter()
                .zip(&s.values)
                .map(|(v, &x)| ((*v).clone(), BigInt::from(x)))
                .collect(),
        ),
        Step::Exhausted => Verdict::UnsatWithinBound,
        Step::OutOfBudget => Verdict::Unknown,
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    -div_floor(-a, b)
}

impl Search<'_> {
    /// Feasible range for variable `j` given the assigned prefix, using the
    /// extreme values of the variables after it.
    fn range(&self, j: usize) -> Option<(i128, i128)> {
        let mut lo = -self.bound;
        let mut hi = self.bound;
        for (r, row) in self.rows.iter().enumerate() {
            let h = row.coeffs[j];
            if h == 0 {
                continue;
            }
            let s = self.partial[r];
            let rest = self.tail[r][j];
            // need s + h*x + [-rest, rest] to meet the operator
            let (need_le, need_ge) = match row.op {
                CmpOp::Le => (true, false),
                CmpOp::Ge => (false, true),
                CmpOp::Eq => (true, true),
                CmpOp::Ne => (false, false),
            };
            if need_le {
                // h*x <= -s + rest
                let rhs = -s + rest;
                if h > 0 {
                    hi = hi.min(div_floor(rhs, h));
                } else {
                    lo = lo.max(div_ceil(rhs, h));
                }
            }
            if need_ge {
                // h*x >= -s - rest
                let rhs = -s - rest;
                if h > 0 {
                    lo = lo.max(div_ceil(rhs, h));
                } else {
                    hi = hi.min(div_floor(rhs, h));
                }
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    fn descend(&mut self, j: usize) -> Step {
        if j == self.values.len() {
            return Step::Found;
        }
        let Some((lo, hi)) = self.range(j) else {
            return Step::Exhausted;
        };
        for x in lo..=hi {
            self.visited += 1;
            if self.visited > self.budget {
                return Step::OutOfBudget;
            }
            let mut ok = true;
            for (r, row) in self.rows.iter().enumerate() {
                let h = row.coeffs[j];
                if h == 0 {
                    continue;
                }
                self.partial[r] += h * x;
                if row.last == j && !op_holds(row.op, self.partial[r]) {
                    ok = false;
                }
            }
            if ok {
                self.values[j] = x;
                match self.descend(j + 1) {
                    Step::Exhausted => {}
                    done => return done,
                }
            }
            for (r, row) in self.rows.iter().enumerate() {
                self.partial[r] -= row.coeffs[j] * x;
            }
        }
        Step::Exhausted
    }
}

fn op_holds(op: CmpOp, v: i128) -> bool {
    match op {
        CmpOp::Eq => v == 0,
        CmpOp::Ne => v != 0,
        CmpOp::Le => v <= 0,
        CmpOp::Ge => v >= 0,
    }
}

/// Tries to prove that `c` has no integer solution at all.
///
/// Fourier-Motzkin elimination over `<=` rows, dividing every derived row
/// by its coefficient GCD and rounding the constant up (a valid cut over
/// the integers); each `!=` is split into its two strict sides. `true` is a
/// proof; `false` means no proof was found.
pub fn refute(c: &Conjunction) -> bool {
    const MAX_SPLITS: usize = 10;
    let vars: Vec<&VarName> = c.vars().into_iter().collect();
    let mut rows = Vec::new();
    let mut splits = Vec::new();
    for a in c {
        let mut coeffs = vec![0i128; vars.len()];
        for t in a.terms() {
            let Some(v) = t.coeff.to_i64() else {
                return false;
            };
            coeffs[vars.binary_search(&&t.var).expect("collected")] = v as i128;
        }
        let Some(k) = a.constant().to_i64() else {
            return false;
        };
        let row = LeRow {
            coeffs,
            k: k as i128,
        };
        match a.op() {
            CmpOp::Le => rows.push(row),
            CmpOp::Ge => rows.push(row.negated()),
            CmpOp::Eq => {
                rows.push(row.negated());
                rows.push(row);
            }
            CmpOp::Ne => splits.push(row),
        }
    }
    if splits.len() > MAX_SPLITS {
        return false;
    }
    refute_split(rows, &splits)
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct LeRow {
    coeffs: Vec<i128>,
    k: i128,
}

impl LeRow {
    fn negated(&self) -> LeRow {
        LeRow {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            k: -self.k,
        }
    }

    /// Divides by the coefficient GCD; `None` for a trivially true row,
    /// `Some(Err)` for a contradiction.
    fn tightened(mut self) -> Option<Result<LeRow, ()>> {
        let g = self.coeffs.iter().fold(0i128, |g, &c| gcd(g, c.abs()));
        if g == 0 {
            return if self.k > 0 { Some(Err(())) } else { None };
        }
        for c in &mut self.coeffs {
            *c /= g;
        }
        self.k = div_ceil(self.k, g);
        Some(Ok(self))
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn refute_split(rows: Vec<LeRow>, splits: &[LeRow]) -> bool {
    let Some((ne, rest)) = splits.split_first() else {
        return fm_infeasible(rows);
    };
    // e != 0 means e + 1 <= 0 or -e + 1 <= 0
    let mut below = ne.clone();
    below.k += 1;
    let mut above = ne.negated();
    above.k += 1;
    [below, above].into_iter().all(|side| {
        let mut r = rows.clone();
        r.push(side);
        refute_split(r, rest)
    })
}

fn fm_infeasible(rows: Vec<LeRow>) -> bool {
    const MAX_ROWS: usize = 4096;
    let mut rows: Vec<LeRow> = match rows.into_iter().filter_map(LeRow::tightened).collect() {
        Ok(r) => r,
        Err(()) => return true,
    };
    let Some(n) = rows.first().map(|r| r.coeffs.len()) else {
        return false;
    };
    for j in 0..n {
        let (pos, rest): (Vec<LeRow>, Vec<LeRow>) = rows.into_iter().partition(|r| r.coeffs[j] > 0);
        let (neg, mut next): (Vec<LeRow>, Vec<LeRow>) =
            rest.into_iter().partition(|r| r.coeffs[j] < 0);
        if pos.len() * neg.len() + next.len() > MAX_ROWS {
            return false;
        }
        for p in &pos {
            for q in &neg {
                let (a, b) = (p.coeffs[j], -q.coeffs[j]);
                let combined = (|| {
                    let coeffs = p
                        .coeffs
                        .iter()
                        .zip(&q.coeffs)
                        .map(|(x, y)| x.checked_mul(b)?.checked_add(y.checked_mul(a)?))
                        .collect::<Option<Vec<_>>>()?;
                    let k = p.k.checked_mul(b)?.checked_add(q.k.checked_mul(a)?)?;
                    Some(LeRow { coeffs, k })
                })();
                let Some(row) = combined else {
                    return false;
                };
                match row.tightened() {
                    Some(Ok(r)) => next.push(r),
                    Some(Err(())) => return true,
                    None => {}
                }
            }
        }
        next.sort_by(|x, y| (&x.coeffs, x.k).cmp(&(&y.coeffs, y.k)));
        next.dedup();
        rows = next;
    }
    false
}

/// Transport to an external solver: one request line in, one response
/// line out.
pub trait SolverAdapter {
    fn exchange(&mut self, request: &str) -> io::Result<String>;
}

/// Runs `program args...` once per request, writing the request to stdin
/// and reading the response from stdout.
#[derive(Debug, Clone)]
pub struct CommandAdapter {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverAdapter for CommandAdapter {
    fn exchange(&mut self, request: &str) -> io::Result<String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            writeln!(stdin, "{request}")?;
        }
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(io::Error::other(format!(
                "solver exited with {}",
                out.status
            )));
        }
        String::from_utf8(out.stdout).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

/// Wraps an optional adapter; every failure or unverifiable answer becomes
/// [`Verdict::Unknown`].
pub struct ExternalSolver<A> {
    adapter: Option<A>,
}

impl<A: SolverAdapter> ExternalSolver<A> {
    pub fn new(adapter: Option<A>) -> Self {
        ExternalSolver { adapter }
    }
}

impl<A: SolverAdapter> Solver for ExternalSolver<A> {
    fn solve(&mut self, c: &Conjunction) -> Verdict {
        let Some(adapter) = self.adapter.as_mut() else {
            return Verdict::Unknown;
        };
        let response = match adapter.exchange(&c.to_string()) {
            Ok(r) => r,
            Err(e) => {
                warn!("external solver failed: {e}");
                return Verdict::Unknown;
            }
        };
        let line = response.lines().next().unwrap_or("").trim();
        match parse_response(line) {
            Some(Verdict::Sat(sol)) => match c.holds(&sol) {
                Ok(true) => Verdict::Sat(sol),
                Ok(false) => {
                    warn!("external solver model {sol} does not satisfy {c}");
                    Verdict::Unknown
                }
                Err(e) => {
                    warn!("external solver model rejected: {e}");
                    Verdict::Unknown
                }
            },
            Some(v) => v,
            None => {
                warn!("unrecognized solver response `{line}`");
                Verdict::Unknown
            }
        }
    }
}

fn parse_response(line: &str) -> Option<Verdict> {
    match line {
        "unsat" => Some(Verdict::Unsat),
        "unknown" => Some(Verdict::Unknown),
        "sat" => Some(Verdict::Sat(Solution::new())),
        _ => {
            let rest = line.strip_prefix("sat ")?;
            Solution::parse_bindings(rest).ok().map(Verdict::Sat)
        }
    }
}
