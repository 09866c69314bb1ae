//! Query corpora: one constraint per line with the number of fresh
//! conjuncts, separated by a tab.
//!
//! ```text
//! # envelope coeff=3 const=8 vars=4
//! x < y && y - x > 1
//! ```
//!
//! A line without `<TAB><fresh>` has one fresh conjunct.

use std::fmt;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::expr::{parse, RawComparison, VarName};

/// Bounds on raw comparisons (all terms moved to one side) within which a
/// bounded search at [`Envelope::SOLVER_BOUND`] decides satisfiability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Envelope {
    pub coeff: u32,
    pub constant: u32,
    pub vars: u32,
}

impl Envelope {
    pub const SOLVER_BOUND: u64 = 50;
    pub const MAX: Envelope = Envelope {
        coeff: 3,
        constant: 8,
        vars: 4,
    };

    pub fn fits_within(&self, outer: &Envelope) -> bool {
        self.coeff <= outer.coeff && self.constant <= outer.constant && self.vars <= outer.vars
    }

    /// Whether every comparison of `raw` stays inside the envelope.
    pub fn admits(&self, raw: &[RawComparison]) -> bool {
        let mut vars: Vec<&VarName> = raw.iter().flat_map(RawComparison::vars).collect();
        vars.sort();
        vars.dedup();
        if vars.len() > self.vars as usize {
            return false;
        }
        let coeff = BigInt::from(self.coeff);
        let constant = BigInt::from(self.constant);
        raw.iter().all(|r| {
            let lhs = r.lhs.to_linear();
            let rhs = r.rhs.to_linear();
            let mut diff: Vec<(VarName, BigInt)> = Vec::new();
            for (t, sign) in lhs
                .terms()
                .iter()
                .map(|t| (t, 1))
                .chain(rhs.terms().iter().map(|t| (t, -1)))
            {
                match diff.iter_mut().find(|(v, _)| *v == t.var) {
                    Some((_, c)) => *c += &t.coeff * sign,
                    None => diff.push((t.var.clone(), &t.coeff * sign)),
                }
            }
            let k = lhs.constant() - rhs.constant();
            diff.iter().all(|(_, c)| c.magnitude() <= coeff.magnitude())
                && k.magnitude() <= constant.magnitude()
        })
    }

    fn parse_directive(body: &str, line: usize) -> Result<Envelope> {
        let mut env = Envelope {
            coeff: 0,
            constant: 0,
            vars: 0,
        };
        let mut seen = [false; 3];
        for field in body.split_whitespace() {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| corpus_err(line, format!("bad envelope field `{field}`")))?;
            let v: u32 = v
                .parse()
                .map_err(|_| corpus_err(line, format!("bad envelope value `{field}`")))?;
            let slot = match k {
                "coeff" => 0,
                "const" => 1,
                "vars" => 2,
                _ => return Err(corpus_err(line, format!("unknown envelope field `{k}`"))),
            };
            seen[slot] = true;
            match slot {
                0 => env.coeff = v,
                1 => env.constant = v,
                _ => env.vars = v,
            }
        }
        if seen.contains(&false) {
            return Err(corpus_err(line, "envelope needs coeff, const and vars"));
        }
        if !env.fits_within(&Envelope::MAX) {
            return Err(corpus_err(
                line,
                format!("envelope {env} exceeds the supported {}", Envelope::MAX),
            ));
        }
        Ok(env)
    }
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "coeff={} const={} vars={}",
            self.coeff, self.constant, self.vars
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusLine {
    pub text: String,
    pub raw: Vec<RawComparison>,
    pub fresh_count: usize,
}

impl CorpusLine {
    pub fn new(text: impl Into<String>, fresh_count: usize) -> Result<CorpusLine> {
        let text = text.into();
        let raw = parse(&text)?;
        if fresh_count > raw.len() {
            return Err(Error::InvalidArgument(format!(
                "fresh count {fresh_count} exceeds {} conjuncts",
                raw.len()
            )));
        }
        Ok(CorpusLine {
            text,
            raw,
            fresh_count,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    /// Leading comment lines, written back without the `# `.
    pub comments: Vec<String>,
    pub envelope: Option<Envelope>,
    pub lines: Vec<CorpusLine>,
}

fn corpus_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Corpus {
        line,
        msg: msg.into(),
    }
}

impl Corpus {
    pub fn parse(text: &str) -> Result<Corpus> {
        let mut corpus = Corpus::default();
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(body) = comment.strip_prefix("envelope") {
                    if corpus.envelope.is_some() {
                        return Err(corpus_err(lineno, "duplicate envelope directive"));
                    }
                    corpus.envelope = Some(Envelope::parse_directive(body, lineno)?);
                } else if corpus.lines.is_empty() {
                    corpus.comments.push(comment.to_string());
                }
                continue;
            }
            let (constraint, fresh) = match line.rsplit_once('\t') {
                Some((c, f)) => {
                    let f = f
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| corpus_err(lineno, format!("bad fresh count `{f}`")))?;
                    (c.trim(), f)
                }
                None => (trimmed, 1),
            };
            let entry = CorpusLine::new(constraint, fresh)
                .map_err(|e| corpus_err(lineno, e.to_string()))?;
            if entry.raw.is_empty() {
                return Err(corpus_err(lineno, "empty constraint"));
            }
            if let Some(env) = &corpus.envelope {
                if !env.admits(&entry.raw) {
                    return Err(corpus_err(
                        lineno,
                        format!("constraint leaves envelope {env}"),
                    ));
                }
            }
            corpus.lines.push(entry);
        }
        Ok(corpus)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Corpus> {
        Corpus::parse(&fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

impl fmt::Display for Corpus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.comments {
            writeln!(f, "# {c}")?;
        }
        if let Some(env) = &self.envelope {
            writeln!(f, "# envelope {env}")?;
        }
        for line in &self.lines {
            writeln!(f, "{}\t{}", line.text, line.fresh_count)?;
        }
        Ok(())
    }
}
