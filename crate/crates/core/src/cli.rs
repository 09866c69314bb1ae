//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::{Corpus, Envelope};
use crate::error::{Error, Result};
use crate::gen::{generate, GenSpec, Mutation};
use crate::ltrie::Store;
use crate::pipeline::{
    compute_metrics, Answer, Config, Engine, MetricsReport, Provenance, QueryOutcome, Stats,
    Stores, Strategy,
};

#[derive(Debug, Parser)]
#[command(
    name = "implcache",
    version,
    about = "Constraint solution cache with implication-based reuse"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a query corpus, optionally with an edited variant.
    Gen(GenArgs),
    /// Replay a corpus through the cache and print a report.
    Run(RunArgs),
    /// Print a store file (or every store in a store directory).
    Dump { path: PathBuf },
    /// Solve one constraint with empty stores.
    Check {
        constraint: String,
        #[arg(long, default_value_t = 50)]
        bound: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MutationArg {
    None,
    Add,
    Del,
    Mod,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::None => Mutation::None,
            MutationArg::Add => Mutation::Add,
            MutationArg::Del => Mutation::Del,
            MutationArg::Mod => Mutation::Mod,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    None,
    Exact,
    Logic,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::None => Strategy::NoReuse,
            StrategyArg::Exact => Strategy::ExactMatch,
            StrategyArg::Logic => Strategy::Logic,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub paths: usize,
    #[arg(long, default_value_t = 6)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 3)]
    pub vars: usize,
    #[arg(long, default_value_t = 3)]
    pub coeff: i64,
    #[arg(long = "const", default_value_t = 8)]
    pub constant: i64,
    #[arg(long, value_enum, default_value_t = MutationArg::None)]
    pub mutation: MutationArg,
    /// Base corpus file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Edited corpus file, required with --mutation.
    #[arg(long)]
    pub mutated_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = StrategyArg::Logic)]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = Envelope::SOLVER_BOUND)]
    pub bound: u64,
    /// Store directory to start from.
    #[arg(long)]
    pub store_in: Option<PathBuf>,
    /// Store directory to write after the run.
    #[arg(long)]
    pub store_out: Option<PathBuf>,
    /// Report of an earlier run over the same corpus, for reuse ratios.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Also record conflicts found by reduction in the UCS.
    #[arg(long)]
    pub store_reduced_conflicts: bool,
    /// Print one line per query.
    #[arg(long)]
    pub per_query: bool,
}

/// Result of replaying a corpus.
#[derive(Debug, Clone)]
pub struct Report {
    pub strategy: Strategy,
    pub bound: u64,
    pub stats: Stats,
    pub outcomes: Vec<QueryOutcome>,
    pub baseline: Option<(Strategy, MetricsReport)>,
}

fn percent(r: Option<f64>) -> String {
    match r {
        Some(r) => format!("{:.2}%", r * 100.0),
        None => "undefined".into(),
    }
}

impl Report {
    /// Renders the report. Without `with_time`, wall-time fields are left
    /// out and the text depends only on the inputs.
    pub fn render(&self, per_query: bool, with_time: bool) -> String {
        let s = &self.stats;
        let mut out = String::new();
        let _ = writeln!(out, "strategy={}", self.strategy);
        let _ = writeln!(out, "bound={}", self.bound);
        let _ = writeln!(out, "queries={}", s.queries);
        let _ = writeln!(out, "solver_calls={}", s.solver_calls);
        let _ = writeln!(out, "hits={}", s.hits());
        for p in Provenance::ALL.into_iter().filter(|p| p.is_hit()) {
            let _ = writeln!(out, "{}={}", p.name(), s.count(p));
        }
        let _ = writeln!(out, "unknown={}", s.unknown);
        if with_time {
            let _ = writeln!(out, "time_ms={:.3}", s.elapsed.as_secs_f64() * 1e3);
        }
        let (r_key, t_key) = match self.baseline {
            Some((Strategy::ExactMatch, _)) => ("R'", "T'"),
            _ => ("R", "T"),
        };
        if let Some((base, m)) = &self.baseline {
            let _ = writeln!(out, "baseline={base}");
            let _ = writeln!(out, "{r_key}={}", percent(m.reuse_ratio));
            if with_time {
                let _ = writeln!(out, "{t_key}={}", percent(m.time_ratio));
            }
        }
        if per_query {
            for (i, o) in self.outcomes.iter().enumerate() {
                let _ = write!(out, "q{}={} {}", i + 1, o.answer, o.provenance);
                if let Some(sol) = o.solution.as_ref().filter(|s| !s.is_empty()) {
                    let _ = write!(out, " {sol}");
                }
                out.push('\n');
            }
        }
        let _ = writeln!(out, "strategy\tqueries\tn\thits\ttime_ms\t{r_key}\t{t_key}");
        let time = if with_time {
            format!("{:.3}", s.elapsed.as_secs_f64() * 1e3)
        } else {
            "-".into()
        };
        let (r, t) = match &self.baseline {
            Some((_, m)) => (
                percent(m.reuse_ratio),
                if with_time {
                    percent(m.time_ratio)
                } else {
                    "-".into()
                },
            ),
            None => ("-".into(), "-".into()),
        };
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{time}\t{r}\t{t}",
            self.strategy,
            s.queries,
            s.solver_calls,
            s.hits()
        );
        out
    }

    /// Reads back the strategy and counters of a rendered report.
    pub fn parse_baseline(text: &str) -> Result<(Strategy, Stats)> {
        let mut strategy = None;
        let mut stats = Stats::default();
        let bad = |msg: String| Error::InvalidArgument(format!("baseline report: {msg}"));
        for line in text.lines() {
            let Some((k, v)) = line.split_once('=') else {
                continue;
            };
            let num = || {
                v.parse::<u64>()
                    .map_err(|_| bad(format!("bad value for {k}")))
            };
            match k {
                "strategy" => strategy = Some(v.parse::<Strategy>()?),
                "queries" => stats.queries = num()?,
                "solver_calls" => stats.solver_calls = num()?,
                "time_ms" => {
                    let ms: f64 = v.parse().map_err(|_| bad("bad time_ms".into()))?;
                    stats.elapsed = Duration::from_secs_f64(ms.max(0.0) / 1e3);
                }
                _ => {}
            }
        }
        Ok((
            strategy.ok_or_else(|| bad("missing strategy".into()))?,
            stats,
        ))
    }
}

/// Replays `corpus` through `engine`, returning per-query outcomes.
pub fn replay(engine: &mut Engine, corpus: &Corpus) -> Result<Vec<QueryOutcome>> {
    corpus
        .lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            engine
                .query(&l.raw, l.fresh_count)
                .map_err(|e| Error::Corpus {
                    line: i + 1,
                    msg: e.to_string(),
                })
        })
        .collect()
}

/// Engine configuration for replaying `corpus`.
pub fn config_for(corpus: &Corpus, strategy: Strategy, bound: u64) -> Config {
    Config {
        strategy,
        bound,
        store_reduced_conflicts: false,
        envelope: corpus.envelope.is_some() && bound >= Envelope::SOLVER_BOUND,
    }
}

pub fn run(args: &RunArgs) -> Result<Report> {
    let corpus = Corpus::load(&args.corpus)?;
    let stores = match &args.store_in {
        Some(dir) => Stores::load_dir(dir)?,
        None => Stores::default(),
    };
    let strategy = args.strategy.into();
    let mut config = config_for(&corpus, strategy, args.bound);
    config.store_reduced_conflicts = args.store_reduced_conflicts;
    let mut engine = Engine::new(config, stores);
    let outcomes = replay(&mut engine, &corpus)?;
    if let Some(dir) = &args.store_out {
        engine.stores.save_dir(dir)?;
    }
    let baseline = match &args.baseline {
        Some(path) => {
            let (base_strategy, base) = Report::parse_baseline(&fs::read_to_string(path)?)?;
            Some((base_strategy, compute_metrics(&base, &engine.stats)?))
        }
        None => None,
    };
    Ok(Report {
        strategy,
        bound: args.bound,
        stats: engine.stats.clone(),
        outcomes,
        baseline,
    })
}

pub fn gen(args: &GenArgs, stdout: &mut impl Write) -> Result<()> {
    let spec = GenSpec {
        seed: args.seed,
        paths: args.paths,
        max_depth: args.max_depth,
        var_count: args.vars,
        coeff_range: args.coeff,
        const_range: args.constant,
        mutation: args.mutation.into(),
    };
    if spec.mutation != Mutation::None && args.mutated_out.is_none() {
        return Err(Error::InvalidArgument(
            "--mutation needs --mutated-out".into(),
        ));
    }
    let (base, mutated) = generate(&spec)?;
    match &args.out {
        Some(path) => fs::write(path, base.to_string())?,
        None => write!(stdout, "{base}")?,
    }
    if let (Some(m), Some(path)) = (mutated, &args.mutated_out) {
        fs::write(path, m.to_string())?;
    }
    Ok(())
}

/// Human-readable listing of one store.
pub fn dump_store(store: &Store) -> String {
    let mut out = format!("{} store: {} edges\n", store.kind(), store.edge_count());
    let mut stack: Vec<(crate::ltrie::NodeId, usize)> = store
        .node(store.root())
        .children()
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .map(|id| (id, 1))
        .collect();
    while let Some((id, depth)) = stack.pop() {
        let node = store.node(id);
        let indent = "  ".repeat(depth - 1);
        let _ = writeln!(out, "{indent}[{depth}] {}", node.label().expect("non-root"));
        if store.is_leaf(id) {
            match node.solution() {
                Some(sol) => {
                    let _ = writeln!(out, "{indent}    solution: {sol}");
                }
                None => {
                    let _ = writeln!(out, "{indent}    unsat");
                }
            }
        }
        let children: Vec<_> = node.children().collect();
        stack.extend(children.into_iter().rev().map(|c| (c, depth + 1)));
    }
    out
}

pub fn dump(path: &Path) -> Result<String> {
    if !path.is_dir() {
        return Ok(dump_store(&Store::load_from_path(path)?));
    }
    let stores = Stores::load_dir(path)?;
    let mut out = dump_store(&stores.scs);
    out.push_str(&dump_store(&stores.ucs));
    let _ = writeln!(out, "exact map: {} entries", stores.exact.len());
    for (k, v) in stores.exact.iter() {
        let k = if k.is_empty() { "true" } else { k };
        match v {
            Some(sol) if sol.is_empty() => {
                let _ = writeln!(out, "  {k} => sat");
            }
            Some(sol) => {
                let _ = writeln!(out, "  {k} => sat {sol}");
            }
            None => {
                let _ = writeln!(out, "  {k} => unsat");
            }
        }
    }
    Ok(out)
}

/// Answers one constraint: `sat <bindings>`, `unsat` or `unknown`.
pub fn check(constraint: &str, bound: u64) -> Result<String> {
    if constraint.trim().is_empty() {
        return Err(Error::InvalidArgument("empty constraint".into()));
    }
    let config = Config {
        bound,
        ..Config::default()
    };
    let mut engine = Engine::new(config, Stores::default());
    let o = engine.query_text(constraint, 0)?;
    Ok(match (o.answer, o.solution) {
        (Answer::Sat, Some(sol)) if !sol.is_empty() => format!("sat {sol}"),
        (a, _) => a.to_string(),
    })
}

/// Runs the parsed command, writing results to stdout.
pub fn execute(cli: Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Gen(args) => gen(&args, &mut out)?,
        Command::Run(args) => {
            let report = run(&args)?;
            write!(out, "{}", report.render(args.per_query, true))?;
        }
        Command::Dump { path } => write!(out, "{}", dump(&path)?)?,
        Command::Check { constraint, bound } => writeln!(out, "{}", check(&constraint, bound)?)?,
    }
    Ok(())
}
