//! The `majsim` command line.
//!
//! JSON outputs are line delimited: the first line is a `{"meta": ...}`
//! record carrying the crate version, the seed and a hash of the resolved
//! configuration. CSV outputs start with a `# majsim ...` comment line
//! carrying the same fields. `gen` writes a bare edge list and reports its
//! metadata on stderr instead.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{self, RunOptions};
use crate::error::{DynamicsError, Error, Result};
use crate::exact;
use crate::graph::{Family, Graph};
use crate::montecarlo::{self, default_threads, with_threads, ExperimentConfig, GraphSpec, SweepPoint};
use crate::opinion::OpinionState;
use crate::stream::trial_rng;
use crate::theory::{BoundReport, Method};
use crate::verify::{self, NRange, Suite, VerifyParams};

#[derive(Debug, Parser)]
#[command(name = "majsim", version, about = "Majority-based imitation dynamics on graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a graph of a named family as an edge list
    Gen(GenArgs),
    /// Run one trajectory to absorption
    Simulate(SimulateArgs),
    /// Exact consensus probability by enumerating all states
    Exact(ExactArgs),
    /// Monte Carlo estimate of the consensus probability
    Mc(McArgs),
    /// Monte Carlo estimates over a grid of p, compared with the bound
    Sweep(SweepArgs),
    /// Run an invariant battery
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct GraphArgs {
    /// Edge-list file
    #[arg(long, conflicts_with_all = ["family", "n"])]
    pub graph: Option<PathBuf>,
    /// Graph family: complete, cycle, path, star or random
    #[arg(long, requires = "n")]
    pub family: Option<Family>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Extra edges on top of the spanning tree (random family)
    #[arg(long, default_value_t = 0)]
    pub extra: usize,
}

impl GraphArgs {
    fn spec(&self, seed: u64) -> Result<GraphSpec> {
        match (&self.graph, self.family, self.n) {
            (Some(path), _, _) => Ok(GraphSpec::EdgeList { path: path.clone() }),
            (None, Some(family), Some(n)) => Ok(GraphSpec::Family {
                family,
                n,
                extra: self.extra,
                seed,
            }),
            _ => Err(Error::Config("give either --graph PATH or --family NAME --n INT".into())),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenArgs {
    pub family: Family,
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub extra: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Probability of an initial +1
    #[arg(long, conflicts_with = "init")]
    pub p: Option<f64>,
    /// Explicit initial state, e.g. "++--"
    #[arg(long)]
    pub init: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Record Z after every step and check it never increases
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ExactArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_steps: Option<u64>,
    /// Two-sided level of the Wilson interval
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// START:STOP:STEP (inclusive) or a comma list
    #[arg(long, default_value = "0.05:0.95:0.05")]
    pub p_grid: String,
    #[arg(long, default_value_t = 2_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// potential, absorption, blocked, bound or reachability
    pub suite: String,
    /// Restrict to one family (default depends on the suite)
    #[arg(long)]
    pub family: Option<Family>,
    /// Vertex counts, N or A..B
    #[arg(long)]
    pub n: Option<String>,
    /// Largest graph for the bound suite
    #[arg(long, default_value_t = 8)]
    pub max_n: usize,
    #[arg(long)]
    pub p_grid: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Per-trajectory step budget
    #[arg(long)]
    pub max_steps: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Meta<'a, C: Serialize> {
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_hash: String,
    config: &'a C,
}

fn config_hash<C: Serialize>(command: &str, config: &C) -> String {
    let body = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(format!("{command}\n{body}").as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn meta<'a, C: Serialize>(command: &'a str, seed: u64, config: &'a C) -> Meta<'a, C> {
    Meta {
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed,
        config_hash: config_hash(command, config),
        config,
    }
}

fn write_json_meta<W: Write, C: Serialize>(out: &mut W, m: &Meta<'_, C>) -> Result<()> {
    #[derive(Serialize)]
    struct Wrapper<'a, 'b, C: Serialize> {
        meta: &'a Meta<'b, C>,
    }
    json_line(out, &Wrapper { meta: m })
}

fn write_csv_meta<W: Write, C: Serialize>(out: &mut W, m: &Meta<'_, C>) -> Result<()> {
    writeln!(
        out,
        "# majsim version={} command={} seed={} config_hash={}",
        m.version, m.command, m.seed, m.config_hash
    )?;
    Ok(())
}

fn json_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

/// Result of a command: whether every check passed. Errors are reported
/// separately through `Err`.
pub type Success = bool;

/// Runs a parsed command, writing its payload to `--out` or to `stdout`.
///
/// The payload is buffered and written once the command finishes, including
/// any partial output of a failing command.
pub fn run<W: Write>(cli: &Cli, stdout: &mut W) -> Result<Success> {
    let out_path = match &cli.command {
        Command::Gen(a) => &a.out,
        Command::Simulate(a) => &a.out,
        Command::Exact(a) => &a.out,
        Command::Mc(a) => &a.out,
        Command::Sweep(a) => &a.out,
        Command::Verify(a) => &a.out,
    };
    let (result, buf) = with_threads(default_threads(), || {
        let mut buf = Vec::new();
        let r = dispatch(&cli.command, &mut buf);
        (r, buf)
    })?;
    match out_path {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            file.write_all(&buf)?;
            file.flush()?;
        }
        None => stdout.write_all(&buf)?,
    }
    result
}

fn dispatch<W: Write>(command: &Command, out: &mut W) -> Result<Success> {
    match command {
        Command::Gen(a) => cmd_gen(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Exact(a) => cmd_exact(a, out),
        Command::Mc(a) => cmd_mc(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

pub fn cmd_gen<W: Write>(a: &GenArgs, out: &mut W) -> Result<Success> {
    let g = a.family.build(a.n, a.extra, a.seed)?;
    out.write_all(g.to_edge_list().as_bytes())?;
    let m = meta("gen", a.seed, a);
    eprintln!(
        "# majsim version={} command=gen seed={} config_hash={}",
        m.version, m.seed, m.config_hash
    );
    Ok(true)
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    graph_id: String,
    n: usize,
    m: usize,
    timeout: bool,
    #[serde(flatten)]
    record: &'a dynamics::RunRecord,
}

pub fn cmd_simulate<W: Write>(a: &SimulateArgs, out: &mut W) -> Result<Success> {
    let spec = a.graph.spec(a.seed)?;
    let g = spec.build()?;
    let mut rng = trial_rng(a.seed, 0);
    let x0: OpinionState = match (&a.init, a.p) {
        (Some(s), _) => {
            let x: OpinionState = s.parse()?;
            x.check_len(g.n())?;
            x
        }
        (None, Some(p)) => dynamics::init_opinions(g.n(), p, &mut rng)?,
        (None, None) => return Err(Error::Config("give --p or --init".into())),
    };
    let mut opts = RunOptions::for_graph(&g);
    if let Some(m) = a.max_steps {
        opts = opts.with_max_steps(m);
    }
    if a.trace {
        opts = opts.traced();
    }
    write_json_meta(out, &meta("simulate", a.seed, a))?;
    let emit = |out: &mut W, record: &dynamics::RunRecord, timeout: bool| {
        json_line(
            out,
            &SimulateOutput {
                graph_id: spec.id(),
                n: g.n(),
                m: g.edge_count(),
                timeout,
                record,
            },
        )
    };
    match dynamics::run_to_absorption(&g, &x0, &mut rng, opts) {
        Ok(rec) => {
            emit(out, &rec, false)?;
            Ok(true)
        }
        Err(DynamicsError::Timeout { partial, .. }) => {
            emit(out, &partial, true)?;
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(DynamicsError::Probability(p).into())
    }
}

pub fn cmd_exact<W: Write>(a: &ExactArgs, out: &mut W) -> Result<Success> {
    check_p(a.p)?;
    let g = a.graph.spec(a.seed)?.build()?;
    let analysis = exact::exact_consensus_probability(&g, a.p)?;
    write_json_meta(out, &meta("exact", a.seed, a))?;
    json_line(out, &analysis.to_json())?;
    Ok(true)
}

fn mc_point(spec: &GraphSpec, g: &Graph, est: montecarlo::EstimateReport, p: f64) -> SweepPoint {
    let slack = est.wilson_high - est.consensus_frequency;
    SweepPoint {
        report: BoundReport::new(spec.id(), g, p, est.consensus_frequency, Method::Mc, slack),
        estimate: est,
    }
}

pub fn cmd_mc<W: Write>(a: &McArgs, out: &mut W) -> Result<Success> {
    let spec = a.graph.spec(a.seed)?;
    let g = spec.build()?;
    let mut cfg = ExperimentConfig::new(spec.clone(), a.p, a.trials, a.seed).with_confidence(a.confidence);
    cfg.max_steps = a.max_steps;
    let est = montecarlo::estimate_on(&g, &cfg)?;
    let ok = est.timeouts == 0;
    let point = mc_point(&spec, &g, est, a.p);
    let m = meta("mc", a.seed, a);
    match a.format {
        Format::Json => {
            write_json_meta(out, &m)?;
            json_line(out, &point)?;
        }
        Format::Csv => {
            write_csv_meta(out, &m)?;
            montecarlo::write_sweep_csv(&mut *out, &[point]).map_err(csv_err)?;
        }
    }
    Ok(ok)
}

pub fn cmd_sweep<W: Write>(a: &SweepArgs, out: &mut W) -> Result<Success> {
    let spec = a.graph.spec(a.seed)?;
    let grid = verify::parse_p_grid(&a.p_grid)?;
    let points = montecarlo::sweep(&spec, &grid, a.trials, a.seed, rayon::current_num_threads())?;
    let ok = points
        .iter()
        .all(|pt| pt.report.satisfied && pt.estimate.timeouts == 0);
    let m = meta("sweep", a.seed, a);
    match a.format {
        Format::Json => {
            write_json_meta(out, &m)?;
            for pt in &points {
                json_line(out, pt)?;
            }
        }
        Format::Csv => {
            write_csv_meta(out, &m)?;
            montecarlo::write_sweep_csv(&mut *out, &points).map_err(csv_err)?;
        }
    }
    Ok(ok)
}

pub fn cmd_verify<W: Write>(a: &VerifyArgs, out: &mut W) -> Result<Success> {
    let suite: Suite = a.suite.parse()?;
    let mut params = VerifyParams::defaults(suite);
    params.seed = a.seed;
    if let Some(f) = a.family {
        params.families = vec![f];
    }
    if let Some(n) = &a.n {
        params.n = n.parse::<NRange>()?;
    }
    if let Some(grid) = &a.p_grid {
        params.p_grid = verify::parse_p_grid(grid)?;
    }
    if let Some(t) = a.trials {
        params.trials = t;
    }
    if let Some(m) = a.max_steps {
        params.max_steps = m;
    }
    let reports = verify::run_suite(suite, &params, a.max_n)?;
    let summary = verify::summarize(suite, &reports);

    #[derive(Serialize)]
    struct Resolved<'a> {
        suite: Suite,
        max_n: usize,
        params: &'a VerifyParams,
    }
    let resolved = Resolved {
        suite,
        max_n: a.max_n,
        params: &params,
    };
    write_json_meta(out, &meta("verify", a.seed, &resolved))?;
    for r in &reports {
        json_line(out, r)?;
    }
    #[derive(Serialize)]
    struct SummaryLine<'a> {
        summary: &'a verify::SuiteSummary,
    }
    json_line(out, &SummaryLine { summary: &summary })?;
    Ok(summary.passed)
}
