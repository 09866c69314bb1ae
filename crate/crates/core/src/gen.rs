//! Seeded corpus generator imitating path enumeration in a symbolic
//! executor, plus regression-style edits of a generated corpus.
//!
//! Every emitted line is decided by the bounded solver at
//! [`Envelope::SOLVER_BOUND`]: it either has a solution inside the box, or
//! [`refute`] proves it has none at all. Lines that are neither are
//! resampled, which is what makes the envelope directive truthful.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canon::{canonize, slice};
use crate::corpus::{Corpus, CorpusLine, Envelope};
use crate::error::{Error, Result};
use crate::expr::{parse, RawRel};
use crate::solve::{brute_force_solve, refute, Verdict};

const VAR_NAMES: [&str; 4] = ["x", "y", "z", "w"];
const RELS: [RawRel; 6] = [
    RawRel::Lt,
    RawRel::Le,
    RawRel::Gt,
    RawRel::Ge,
    RawRel::Eq,
    RawRel::Ne,
];
const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    Add,
    Del,
    Mod,
}

impl Mutation {
    pub fn name(self) -> &'static str {
        match self {
            Mutation::None => "none",
            Mutation::Add => "add",
            Mutation::Del => "del",
            Mutation::Mod => "mod",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Mutation::None),
            "add" => Ok(Mutation::Add),
            "del" => Ok(Mutation::Del),
            "mod" => Ok(Mutation::Mod),
            _ => Err(Error::InvalidArgument(format!("unknown mutation `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub seed: u64,
    pub paths: usize,
    pub max_depth: usize,
    pub var_count: usize,
    pub coeff_range: i64,
    pub const_range: i64,
    pub mutation: Mutation,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 1,
            paths: 100,
            max_depth: 6,
            var_count: 3,
            coeff_range: 3,
            const_range: 8,
            mutation: Mutation::None,
        }
    }
}

impl GenSpec {
    pub fn envelope(&self) -> Envelope {
        Envelope {
            coeff: self.coeff_range as u32,
            constant: self.const_range as u32,
            vars: self.var_count as u32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.max_depth == 0 {
            return bad("max depth must be at least 1".into());
        }
        if !(1..=Envelope::MAX.vars as usize).contains(&self.var_count) {
            return bad(format!("var count must be in 1..={}", Envelope::MAX.vars));
        }
        if !(1..=Envelope::MAX.coeff as i64).contains(&self.coeff_range) {
            return bad(format!(
                "coefficient range must be in 1..={}",
                Envelope::MAX.coeff
            ));
        }
        if !(0..=Envelope::MAX.constant as i64).contains(&self.const_range) {
            return bad(format!(
                "constant range must be in 0..={}",
                Envelope::MAX.constant
            ));
        }
        Ok(())
    }

    fn header(&self) -> String {
        format!(
            "generated seed={} paths={} depth={} vars={} coeff={} const={}",
            self.seed,
            self.paths,
            self.max_depth,
            self.var_count,
            self.coeff_range,
            self.const_range
        )
    }
}

/// `Σ coeff*var rel k`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct GenAtom {
    terms: Vec<(usize, i64)>,
    rel: RawRel,
    k: i64,
}

impl fmt::Display for GenAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(v, c)) in self.terms.iter().enumerate() {
            let name = VAR_NAMES[v];
            match (i, c) {
                (0, 1) => write!(f, "{name}")?,
                (0, -1) => write!(f, "-{name}")?,
                (0, c) => write!(f, "{c}*{name}")?,
                (_, 1) => write!(f, " + {name}")?,
                (_, -1) => write!(f, " - {name}")?,
                (_, c) if c < 0 => write!(f, " - {}*{name}", -c)?,
                (_, c) => write!(f, " + {c}*{name}")?,
            }
        }
        write!(f, " {} {}", self.rel.symbol(), self.k)
    }
}

type Path = Vec<GenAtom>;

fn render(path: &Path) -> String {
    path.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" && ")
}

struct Generator {
    spec: GenSpec,
    rng: ChaCha8Rng,
}

impl Generator {
    fn atom(&mut self) -> GenAtom {
        let max_terms = self.spec.var_count.min(3);
        let n = self.rng.gen_range(1..=max_terms);
        let mut vars: Vec<usize> = (0..self.spec.var_count).collect();
        vars.shuffle(&mut self.rng);
        vars.truncate(n);
        vars.sort_unstable();
        let r = self.spec.coeff_range;
        let terms = vars
            .into_iter()
            .map(|v| {
                let mut c = self.rng.gen_range(-r..=r - 1);
                if c >= 0 {
                    c += 1;
                }
                (v, c)
            })
            .collect();
        let rel = RELS[self.rng.gen_range(0..RELS.len())];
        let k = self
            .rng
            .gen_range(-self.spec.const_range..=self.spec.const_range);
        GenAtom { terms, rel, k }
    }

    /// A fresh conjunct for `prefix`, distinct from its atoms.
    fn extend(&mut self, prefix: &[GenAtom]) -> Path {
        loop {
            let a = self.atom();
            if !prefix.contains(&a) {
                let mut p = prefix.to_vec();
                p.push(a);
                return p;
            }
        }
    }

    fn base(&mut self) -> Result<Vec<(Path, bool)>> {
        let mut lines: Vec<(Path, bool)> = Vec::with_capacity(self.spec.paths);
        let mut sat: Vec<usize> = Vec::new();
        for _ in 0..self.spec.paths {
            let mut placed = false;
            for _ in 0..MAX_ATTEMPTS {
                let prefix: Path = if sat.is_empty() || self.rng.gen_bool(0.1) {
                    Vec::new()
                } else {
                    let parent = &lines[sat[self.rng.gen_range(0..sat.len())]].0;
                    let longest = parent.len().min(self.spec.max_depth - 1);
                    parent[..self.rng.gen_range(0..=longest)].to_vec()
                };
                let path = self.extend(&prefix);
                if let Some(is_sat) = decide(&path) {
                    if is_sat {
                        sat.push(lines.len());
                    }
                    lines.push((path, is_sat));
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::InvalidArgument(
                    "could not generate a decidable path; widen the parameters".into(),
                ));
            }
        }
        Ok(lines)
    }

    fn mutate(&mut self, base: &[(Path, bool)]) -> Option<(Vec<Path>, String)> {
        if base.is_empty() {
            return None;
        }
        let paths = || base.iter().map(|(p, _)| p.clone()).collect::<Vec<_>>();
        match self.spec.mutation {
            Mutation::None => None,
            Mutation::Del => {
                let site = self.rng.gen_range(0..base.len());
                let cut = &base[site].0;
                let kept = base
                    .iter()
                    .enumerate()
                    .filter(|(j, (p, _))| *j < site || !p.starts_with(cut))
                    .map(|(_, (p, _))| p.clone())
                    .collect();
                Some((kept, format!("mutation=del site={site}")))
            }
            Mutation::Add => {
                let sat: Vec<usize> = (0..base.len()).filter(|&i| base[i].1).collect();
                for _ in 0..MAX_ATTEMPTS {
                    let site = match sat.as_slice() {
                        [] => self.rng.gen_range(0..base.len()),
                        s => s[self.rng.gen_range(0..s.len())],
                    };
                    let mut added = Vec::new();
                    let mut cur = base[site].0.clone();
                    let depth = self.rng.gen_range(1..=3);
                    for _ in 0..depth {
                        let next = self.extend(&cur);
                        match decide(&next) {
                            Some(is_sat) => {
                                added.push(next.clone());
                                if !is_sat {
                                    break;
                                }
                                cur = next;
                            }
                            None => break,
                        }
                    }
                    if added.is_empty() {
                        continue;
                    }
                    let n = added.len();
                    let mut out = paths();
                    out.splice(site + 1..site + 1, added);
                    return Some((out, format!("mutation=add site={site} lines={n}")));
                }
                Some((paths(), "mutation=add site=none".into()))
            }
            Mutation::Mod => {
                for _ in 0..MAX_ATTEMPTS {
                    let site = self.rng.gen_range(0..base.len());
                    let branch = base[site].0.clone();
                    let pos = branch.len() - 1;
                    let mut edited = branch[pos].clone();
                    if self.rng.gen_bool(0.5) {
                        let others: Vec<RawRel> =
                            RELS.iter().copied().filter(|&r| r != edited.rel).collect();
                        edited.rel = others[self.rng.gen_range(0..others.len())];
                    } else {
                        let r = self.spec.const_range;
                        if r == 0 {
                            continue;
                        }
                        let mut k = self.rng.gen_range(-r..=r - 1);
                        if k >= edited.k {
                            k += 1;
                        }
                        edited.k = k;
                    }
                    let mut out = paths();
                    let mut ok = true;
                    for p in out.iter_mut().skip(site) {
                        if p.starts_with(&branch) {
                            p[pos] = edited.clone();
                            if p[..pos].contains(&edited) || decide(p).is_none() {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        return Some((out, format!("mutation=mod site={site}")));
                    }
                }
                Some((paths(), "mutation=mod site=none".into()))
            }
        }
    }
}

/// `Some(satisfiable)` when the sliced query is decided exactly.
fn decide(path: &Path) -> Option<bool> {
    let raw = parse(&render(path)).expect("generated text parses");
    let canon = canonize(&slice(&raw, 1));
    if canon.contradiction || refute(&canon.conj) {
        return Some(false);
    }
    match brute_force_solve(&canon.conj, Envelope::SOLVER_BOUND) {
        Verdict::Sat(_) => Some(true),
        _ => None,
    }
}

fn to_corpus(spec: &GenSpec, paths: impl IntoIterator<Item = Path>, note: &str) -> Corpus {
    let mut comments = vec![spec.header()];
    if !note.is_empty() {
        comments.push(note.to_string());
    }
    Corpus {
        comments,
        envelope: Some(spec.envelope()),
        lines: paths
            .into_iter()
            .map(|p| CorpusLine::new(render(&p), 1).expect("generated text parses"))
            .collect(),
    }
}

/// Generates the base corpus and, unless `spec.mutation` is
/// [`Mutation::None`], its edited variant.
pub fn generate(spec: &GenSpec) -> Result<(Corpus, Option<Corpus>)> {
    spec.validate()?;
    let mut g = Generator {
        spec: *spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    let base = g.base()?;
    let mutated = g
        .mutate(&base)
        .map(|(paths, note)| to_corpus(spec, paths, &note));
    Ok((
        to_corpus(spec, base.into_iter().map(|(p, _)| p), ""),
        mutated,
    ))
}
