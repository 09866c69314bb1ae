//! Per-query flow: slice, canonize, reduce, look up, solve, store.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::canon::{canonize, canonize_atoms, slice, Canonical};
use crate::error::{Error, Result};
use crate::expr::{parse, Conjunction, RawComparison, Solution};
use crate::ltrie::{Store, StoreKind};
use crate::query::{check_subset, check_superset};
use crate::reduce::reduce;
use crate::solve::{BoundedSolver, Solver, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    NoReuse,
    ExactMatch,
    Logic,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::NoReuse => "none",
            Strategy::ExactMatch => "exact",
            Strategy::Logic => "logic",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Strategy::NoReuse),
            "exact" => Ok(Strategy::ExactMatch),
            "logic" => Ok(Strategy::Logic),
            _ => Err(Error::InvalidArgument(format!("unknown strategy `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Answer {
    Sat,
    Unsat,
    Unknown,
}

impl Answer {
    pub fn name(self) -> &'static str {
        match self {
            Answer::Sat => "sat",
            Answer::Unsat => "unsat",
            Answer::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Solved,
    ExactHit,
    ReusedSat,
    ReusedUnsat,
    ReducedConflict,
}

impl Provenance {
    pub const ALL: [Provenance; 5] = [
        Provenance::Solved,
        Provenance::ExactHit,
        Provenance::ReusedSat,
        Provenance::ReusedUnsat,
        Provenance::ReducedConflict,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Provenance::Solved => "solved",
            Provenance::ExactHit => "exact_hit",
            Provenance::ReusedSat => "reused_sat",
            Provenance::ReusedUnsat => "reused_unsat",
            Provenance::ReducedConflict => "reduced_conflict",
        }
    }

    pub fn is_hit(self) -> bool {
        self != Provenance::Solved
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryOutcome {
    pub answer: Answer,
    /// Bindings for the variables of the sliced query, original names.
    pub solution: Option<Solution>,
    pub provenance: Provenance,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub queries: u64,
    /// Solver invocations, including those answering Unknown.
    pub solver_calls: u64,
    pub exact_hits: u64,
    pub reused_sat: u64,
    pub reused_unsat: u64,
    pub reduced_conflicts: u64,
    pub unknown: u64,
    pub elapsed: Duration,
}

impl Stats {
    pub fn hits(&self) -> u64 {
        self.exact_hits + self.reused_sat + self.reused_unsat + self.reduced_conflicts
    }

    pub fn count(&self, p: Provenance) -> u64 {
        match p {
            Provenance::Solved => self.solver_calls,
            Provenance::ExactHit => self.exact_hits,
            Provenance::ReusedSat => self.reused_sat,
            Provenance::ReusedUnsat => self.reused_unsat,
            Provenance::ReducedConflict => self.reduced_conflicts,
        }
    }

    fn record(&mut self, o: &QueryOutcome) {
        self.queries += 1;
        self.elapsed += o.elapsed;
        if o.answer == Answer::Unknown {
            self.unknown += 1;
        }
        match o.provenance {
            Provenance::Solved => self.solver_calls += 1,
            Provenance::ExactHit => self.exact_hits += 1,
            Provenance::ReusedSat => self.reused_sat += 1,
            Provenance::ReusedUnsat => self.reused_unsat += 1,
            Provenance::ReducedConflict => self.reduced_conflicts += 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    /// `(n_base - n_other) / n_base`; `None` when `n_base` is 0.
    pub reuse_ratio: Option<f64>,
    /// `(t_base - t_other) / t_base`; `None` when `t_base` is 0.
    pub time_ratio: Option<f64>,
}

/// Ratios of `other` against `base`. Against a no-reuse run these are R and
/// T; against an exact-match run, R' and T'.
pub fn compute_metrics(base: &Stats, other: &Stats) -> Result<MetricsReport> {
    if base.queries != other.queries {
        return Err(Error::MismatchedRuns {
            base: base.queries,
            other: other.queries,
        });
    }
    let ratio = |b: f64, o: f64| (b != 0.0).then(|| (b - o) / b);
    Ok(MetricsReport {
        reuse_ratio: ratio(base.solver_calls as f64, other.solver_calls as f64),
        time_ratio: ratio(base.elapsed.as_secs_f64(), other.elapsed.as_secs_f64()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub strategy: Strategy,
    pub bound: u64,
    /// Also record conflicts found by reduction in the UCS.
    pub store_reduced_conflicts: bool,
    /// Queries lie inside the generator envelope, so a bounded search
    /// failure is a proof of unsatisfiability and may be stored.
    pub envelope: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            strategy: Strategy::Logic,
            bound: 50,
            store_reduced_conflicts: false,
            envelope: false,
        }
    }
}

/// Whole-constraint cache keyed by canonical rendering.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactMap {
    entries: BTreeMap<String, Option<Solution>>,
}

const EXACT_MAGIC: &str = "LEXACT v1";
/// Exact-map key shared by all constraints with a false constant comparison.
pub const CONTRADICTION_KEY: &str = "false";

impl ExactMap {
    pub fn get(&self, key: &str) -> Option<&Option<Solution>> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, c: &Conjunction, sol: Option<Solution>) {
        self.entries.insert(c.to_string(), sol);
    }

    /// Records that constraints normalizing to a false constant were seen.
    pub fn insert_contradiction(&mut self) {
        self.entries.insert(CONTRADICTION_KEY.to_string(), None);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Option<&Solution>)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_ref()))
    }

    pub fn save(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{EXACT_MAGIC}")?;
        for (k, v) in &self.entries {
            match v {
                Some(s) if s.is_empty() => writeln!(w, "{k}\tsat")?,
                Some(s) => writeln!(w, "{k}\tsat {s}")?,
                None => writeln!(w, "{k}\tunsat")?,
            }
        }
        Ok(())
    }

    pub fn load(r: impl BufRead) -> Result<ExactMap> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header != EXACT_MAGIC {
            return match header.strip_prefix("LEXACT ") {
                Some(v) => Err(Error::VersionMismatch {
                    found: v.to_string(),
                    expected: 1,
                }),
                None => Err(malformed(1, "expected `LEXACT v1`")),
            };
        }
        let mut map = ExactMap::default();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let lineno = i + 2;
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| malformed(lineno, "expected `<constraint>\\t<verdict>`"))?;
            if key == CONTRADICTION_KEY {
                if value != "unsat" {
                    return Err(malformed(lineno, "`false` must be unsat"));
                }
                map.entries.insert(key.to_string(), None);
                continue;
            }
            // the empty key is the trivially true conjunction
            let raw = match key {
                "" => Vec::new(),
                k => parse(k).map_err(|e| malformed(lineno, e.to_string()))?,
            };
            let canon = canonize(&raw);
            if canon.contradiction || canon.conj.to_string() != key {
                return Err(malformed(lineno, format!("`{key}` is not canonical")));
            }
            let sol = match value {
                "unsat" => None,
                "sat" => Some(Solution::new()),
                v => {
                    let b = v
                        .strip_prefix("sat ")
                        .ok_or_else(|| malformed(lineno, format!("bad verdict `{v}`")))?;
                    Some(
                        Solution::parse_bindings(b)
                            .map_err(|e| malformed(lineno, e.to_string()))?,
                    )
                }
            };
            if let Some(s) = &sol {
                if !canon.conj.holds(s).unwrap_or(false) {
                    return Err(malformed(lineno, format!("{s} does not satisfy `{key}`")));
                }
            }
            if map.entries.insert(key.to_string(), sol).is_some() {
                return Err(malformed(lineno, format!("duplicate key `{key}`")));
            }
        }
        Ok(map)
    }
}

fn malformed(line: usize, msg: impl Into<String>) -> Error {
    Error::Malformed {
        line,
        msg: msg.into(),
    }
}

/// The SCS, UCS and exact map of one cache.
#[derive(Debug, Clone)]
pub struct Stores {
    pub scs: Store,
    pub ucs: Store,
    pub exact: ExactMap,
}

impl Default for Stores {
    fn default() -> Self {
        Stores {
            scs: Store::new(StoreKind::Sat),
            ucs: Store::new(StoreKind::Unsat),
            exact: ExactMap::default(),
        }
    }
}

impl Stores {
    pub const SCS_FILE: &'static str = "scs.ltrie";
    pub const UCS_FILE: &'static str = "ucs.ltrie";
    pub const EXACT_FILE: &'static str = "exact.map";

    /// Writes `scs.ltrie`, `ucs.ltrie` and `exact.map` into `dir`,
    /// creating it if needed.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        self.scs.save_to_path(dir.join(Self::SCS_FILE))?;
        self.ucs.save_to_path(dir.join(Self::UCS_FILE))?;
        let mut w = BufWriter::new(File::create(dir.join(Self::EXACT_FILE))?);
        self.exact.save(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Stores> {
        let dir = dir.as_ref();
        let scs = Store::load_from_path(dir.join(Self::SCS_FILE))?;
        let ucs = Store::load_from_path(dir.join(Self::UCS_FILE))?;
        if scs.kind() != StoreKind::Sat || ucs.kind() != StoreKind::Unsat {
            return Err(malformed(1, "store files hold the wrong store kind"));
        }
        let exact = ExactMap::load(BufReader::new(File::open(dir.join(Self::EXACT_FILE))?))?;
        Ok(Stores { scs, ucs, exact })
    }
}

/// A cache in front of a solver.
pub struct Engine {
    pub config: Config,
    pub stores: Stores,
    pub stats: Stats,
    solver: Box<dyn Solver>,
}

impl Engine {
    /// Engine backed by the bounded solver at `config.bound`.
    pub fn new(config: Config, stores: Stores) -> Self {
        let solver = Box::new(BoundedSolver::new(config.bound));
        Engine::with_solver(config, stores, solver)
    }

    pub fn with_solver(config: Config, stores: Stores, solver: Box<dyn Solver>) -> Self {
        Engine {
            config,
            stores,
            stats: Stats::default(),
            solver,
        }
    }

    /// Parses `text` and runs it as one query.
    pub fn query_text(&mut self, text: &str, fresh_count: usize) -> Result<QueryOutcome> {
        self.query(&parse(text)?, fresh_count)
    }

    /// Runs one query. With `fresh_count > 0`, only the connected
    /// components of the last `fresh_count` comparisons are considered.
    pub fn query(&mut self, raw: &[RawComparison], fresh_count: usize) -> Result<QueryOutcome> {
        if fresh_count > raw.len() {
            return Err(Error::InvalidArgument(format!(
                "fresh count {fresh_count} exceeds {} conjuncts",
                raw.len()
            )));
        }
        let start = Instant::now();
        let sliced;
        let raw = if fresh_count > 0 {
            sliced = slice(raw, fresh_count);
            &sliced[..]
        } else {
            raw
        };
        let (answer, solution, provenance) = self.answer(canonize(raw));
        let outcome = QueryOutcome {
            answer,
            solution,
            provenance,
            elapsed: start.elapsed(),
        };
        self.stats.record(&outcome);
        Ok(outcome)
    }

    fn answer(&mut self, canon: Canonical) -> (Answer, Option<Solution>, Provenance) {
        let strategy = self.config.strategy;
        if canon.contradiction {
            let p = match strategy {
                Strategy::Logic => Provenance::ReducedConflict,
                Strategy::ExactMatch if self.stores.exact.get(CONTRADICTION_KEY).is_some() => {
                    Provenance::ExactHit
                }
                Strategy::ExactMatch => {
                    self.stores.exact.insert_contradiction();
                    Provenance::Solved
                }
                Strategy::NoReuse => Provenance::Solved,
            };
            return (Answer::Unsat, None, p);
        }

        // key: what is looked up and stored; back: maps key variables to
        // canonical ones, `canon.renaming` maps those to the original names
        let (key, back) = if strategy == Strategy::Logic {
            match reduce(&canon.conj) {
                Ok(r) => {
                    let c2 = canonize_atoms(r.atoms().to_vec());
                    (c2.conj, Some(c2.renaming))
                }
                Err(_) => {
                    if self.config.store_reduced_conflicts && !canon.conj.is_empty() {
                        // already covered entries are fine to skip
                        let _ = self.stores.ucs.insert(&canon.conj, None);
                    }
                    return (Answer::Unsat, None, Provenance::ReducedConflict);
                }
            }
        } else {
            (canon.conj.clone(), None)
        };
        let to_original = |s: &Solution| -> Solution {
            let mid = match &back {
                Some(r) => r.to_original(s),
                None => s.clone(),
            };
            canon.renaming.to_original(&mid)
        };

        if strategy != Strategy::NoReuse {
            if let Some(hit) = self.stores.exact.get(&key.to_string()) {
                return match hit {
                    Some(s) => (Answer::Sat, Some(to_original(s)), Provenance::ExactHit),
                    None => (Answer::Unsat, None, Provenance::ExactHit),
                };
            }
        }
        if strategy == Strategy::Logic && !key.is_empty() {
            if let Some(s) = check_superset(&key, &self.stores.scs) {
                let s = s.restrict(key.vars());
                return (Answer::Sat, Some(to_original(&s)), Provenance::ReusedSat);
            }
            if check_subset(&key, &self.stores.ucs) {
                return (Answer::Unsat, None, Provenance::ReusedUnsat);
            }
        }

        let verdict = self.solver.solve(&key);
        let store = strategy != Strategy::NoReuse;
        match verdict {
            Verdict::Sat(s) => {
                if store {
                    self.stores.exact.insert(&key, Some(s.clone()));
                    if strategy == Strategy::Logic && !key.is_empty() {
                        store_or_warn(&mut self.stores.scs, &key, Some(s.clone()));
                    }
                }
                (Answer::Sat, Some(to_original(&s)), Provenance::Solved)
            }
            Verdict::Unsat | Verdict::UnsatWithinBound => {
                let exact = matches!(verdict, Verdict::Unsat) || self.config.envelope;
                if store && exact {
                    self.stores.exact.insert(&key, None);
                    if strategy == Strategy::Logic && !key.is_empty() {
                        store_or_warn(&mut self.stores.ucs, &key, None);
                    }
                }
                (Answer::Unsat, None, Provenance::Solved)
            }
            Verdict::Unknown => (Answer::Unknown, None, Provenance::Solved),
        }
    }
}

fn store_or_warn(store: &mut Store, c: &Conjunction, sol: Option<Solution>) {
    if let Err(e) = store.insert(c, sol) {
        log::warn!("not storing `{c}`: {e}");
    }
}
