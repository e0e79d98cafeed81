//! Invariant batteries behind `majsim verify`.
//!
//! Each suite checks a family of graphs and returns one [`InstanceReport`]
//! per graph or trial, listing every violation with enough context (graph,
//! state, step) to replay it.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{self, consensus_floor, opinion_counts, potential_z, RunOptions, Simulation};
use crate::error::{Error, Result};
use crate::exact::{self, StateIndex, DENSE_CAP};
use crate::graph::{Family, Graph};
use crate::opinion::OpinionState;
use crate::stream::{derive_seed, trial_rng};
use crate::theory::{self, consensus_bound, corollary_holds};

/// Instance reports keep at most this many violations verbatim.
pub const MAX_LISTED_VIOLATIONS: usize = 20;
/// Slack allowed when comparing exact probabilities with the bound.
pub const EXACT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Potential,
    Absorption,
    Blocked,
    Bound,
    Reachability,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Potential,
        Suite::Absorption,
        Suite::Blocked,
        Suite::Bound,
        Suite::Reachability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Potential => "potential",
            Suite::Absorption => "absorption",
            Suite::Blocked => "blocked",
            Suite::Bound => "bound",
            Suite::Reachability => "reachability",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive vertex-count range, written `7` or `4..10`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NRange {
    pub lo: usize,
    pub hi: usize,
}

impl NRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        NRange { lo, hi }
    }

    pub fn iter(self) -> std::ops::RangeInclusive<usize> {
        self.lo..=self.hi
    }
}

impl FromStr for NRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad vertex range {s:?} (expected N or A..B)"));
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
        let r = match s.split_once("..") {
            Some((a, b)) => NRange::new(parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let n = parse(s)?;
                NRange::new(n, n)
            }
        };
        if r.lo > r.hi {
            return Err(bad());
        }
        Ok(r)
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "{}..{}", self.lo, self.hi)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Edge list of the graph, `n m; u v; ...`.
    pub graph: String,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub state: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<u64>,
    pub detail: String,
}

impl Violation {
    fn new(g: &Graph, x: &OpinionState, step: Option<u64>, detail: impl Into<String>) -> Self {
        Violation {
            graph: g.to_edge_list().trim_end().replace('\n', "; "),
            state: x.to_string(),
            step,
            detail: detail.into(),
        }
    }

    fn for_graph(g: &Graph, detail: impl Into<String>) -> Self {
        Violation {
            graph: g.to_edge_list().trim_end().replace('\n', "; "),
            state: String::new(),
            step: None,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstanceReport {
    pub suite: Suite,
    pub graph_id: String,
    pub n: usize,
    pub m: usize,
    /// Number of elementary checks performed (steps, states, grid points).
    pub checked: u64,
    pub violation_count: u64,
    pub violations: Vec<Violation>,
}

impl InstanceReport {
    fn new(suite: Suite, graph_id: impl Into<String>, g: &Graph) -> Self {
        InstanceReport {
            suite,
            graph_id: graph_id.into(),
            n: g.n(),
            m: g.edge_count(),
            checked: 0,
            violation_count: 0,
            violations: Vec::new(),
        }
    }

    fn violate(&mut self, v: Violation) {
        self.violation_count += 1;
        if self.violations.len() < MAX_LISTED_VIOLATIONS {
            self.violations.push(v);
        }
    }

    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub instances: usize,
    pub checked: u64,
    pub violations: u64,
    pub passed: bool,
}

pub fn summarize(suite: Suite, reports: &[InstanceReport]) -> SuiteSummary {
    let violations = reports.iter().map(|r| r.violation_count).sum();
    SuiteSummary {
        suite,
        instances: reports.len(),
        checked: reports.iter().map(|r| r.checked).sum(),
        violations,
        passed: violations == 0,
    }
}

/// Parameters shared by all suites; each suite reads the ones it needs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyParams {
    pub families: Vec<Family>,
    pub n: NRange,
    pub trials: u64,
    pub seed: u64,
    /// Per-trajectory step budget.
    pub max_steps: u64,
    /// Keep adding trials until at least this many steps were checked.
    pub min_total_steps: u64,
    pub p_grid: Vec<f64>,
}

impl VerifyParams {
    /// Defaults for `suite` as documented in the README.
    pub fn defaults(suite: Suite) -> Self {
        let grid: Vec<f64> = (1..=19).map(|k| k as f64 * 0.05).map(round_grid).collect();
        let (families, n) = match suite {
            Suite::Potential | Suite::Absorption => (vec![Family::Random], NRange::new(4, 12)),
            Suite::Blocked => (vec![Family::Cycle, Family::Path], NRange::new(4, 10)),
            Suite::Reachability => (vec![Family::Cycle, Family::Path], NRange::new(4, 12)),
            Suite::Bound => (
                vec![Family::Complete, Family::Cycle, Family::Path, Family::Star, Family::Random],
                NRange::new(2, 8),
            ),
        };
        VerifyParams {
            families,
            n,
            trials: 100,
            seed: 0,
            max_steps: match suite {
                Suite::Blocked => 10_000,
                _ => 0,
            },
            min_total_steps: 0,
            p_grid: grid,
        }
    }
}

/// Rounds grid values to 12 decimals so `0.05 * 3` prints as `0.15`.
pub fn round_grid(p: f64) -> f64 {
    (p * 1e12).round() / 1e12
}

/// Parses `START:STOP:STEP` (inclusive of STOP) or a comma list.
pub fn parse_p_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad p grid {s:?} (expected START:STOP:STEP or a,b,c)"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad());
        };
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step <= 0.0 || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| round_grid(start + k as f64 * step)).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if grid.is_empty() || grid.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(bad());
    }
    Ok(grid)
}

fn family_graph(family: Family, n: usize, seed: u64, label: u64) -> Result<(String, Graph)> {
    if family == Family::Random {
        let graph_seed = derive_seed(seed, label);
        let mut rng = trial_rng(graph_seed, 0);
        let max_extra = (n * (n - 1) / 2 - (n - 1)).min(n);
        let extra = rng.gen_range(0..=max_extra);
        let g = Graph::random_connected(n, extra, graph_seed)?;
        Ok((format!("random-{n}-{extra}-s{graph_seed}"), g))
    } else {
        Ok((format!("{family}-{n}"), family.build(n, 0, 0)?))
    }
}

/// Graphs for the trial-based suites: trial `k` uses family
/// `families[k % len]` on a vertex count drawn from the range.
fn trial_graph(params: &VerifyParams, k: u64) -> Result<(String, Graph)> {
    let family = params.families[(k as usize) % params.families.len()];
    let mut rng = trial_rng(derive_seed(params.seed, u64::MAX), k);
    let lo = params.n.lo.max(family.min_n()).max(2);
    let hi = params.n.hi.max(lo);
    let n = rng.gen_range(lo..=hi);
    family_graph(family, n, params.seed, k)
}

fn check_families(params: &VerifyParams) -> Result<()> {
    if params.families.is_empty() {
        return Err(Error::Config("no graph family selected".into()));
    }
    Ok(())
}

/// Steps trajectories and checks, on every step, that `Z` never increases
/// and that a flip lowers it by exactly `2 * (disagree - agree)` of the
/// flipping vertex, with `Z` recomputed from scratch each time.
pub fn potential(params: &VerifyParams) -> Result<Vec<InstanceReport>> {
    check_families(params)?;
    let mut reports = Vec::new();
    let mut total_steps = 0u64;
    let mut next = 0u64;
    const BATCH: u64 = 64;
    while next < params.trials || total_steps < params.min_total_steps {
        let end = if next < params.trials { params.trials } else { next + BATCH };
        let batch: Vec<InstanceReport> = (next..end)
            .into_par_iter()
            .map(|k| potential_trial(params, k))
            .collect::<Result<_>>()?;
        total_steps += batch.iter().map(|r| r.checked).sum::<u64>();
        reports.extend(batch);
        next = end;
    }
    Ok(reports)
}

fn potential_trial(params: &VerifyParams, k: u64) -> Result<InstanceReport> {
    let (id, g) = trial_graph(params, k)?;
    let mut rng = trial_rng(params.seed, k);
    let p = rng.gen_range(0.05..0.95);
    let x0 = dynamics::init_opinions(g.n(), p, &mut rng)?;
    let budget = if params.max_steps > 0 {
        params.max_steps
    } else {
        dynamics::default_max_steps(g.n())
    };
    let mut report = InstanceReport::new(Suite::Potential, format!("{id}#{k}"), &g);
    let mut sim = Simulation::new(&g, x0)?;
    let mut z_old = potential_z(&g, sim.state());
    let mut t = 0u64;
    while !sim.is_absorbing() && t < budget {
        let before = sim.state().clone();
        let out = sim.step(&mut rng);
        t += 1;
        let z_new = potential_z(&g, sim.state());
        if z_new > z_old {
            report.violate(Violation::new(&g, &before, Some(t), format!("Z increased {z_old} -> {z_new}")));
        }
        let expected = if out.flipped {
            let c = opinion_counts(&g, &before, out.agent);
            if c.disagree <= c.agree {
                report.violate(Violation::new(
                    &g,
                    &before,
                    Some(t),
                    format!("vertex {} flipped without a strict majority", out.agent),
                ));
            }
            2 * (c.disagree as i64 - c.agree as i64)
        } else {
            0
        };
        let measured = z_old as i64 - z_new as i64;
        if measured != expected || out.z_decrement as i64 != measured {
            report.violate(Violation::new(
                &g,
                &before,
                Some(t),
                format!(
                    "decrement {measured} (reported {}) but identity gives {expected}",
                    out.z_decrement
                ),
            ));
        }
        z_old = z_new;
    }
    report.checked = t;
    Ok(report)
}

/// Runs trajectories to absorption and checks the final state is locally
/// stable and that consensus coincides with `Z` at its floor. Graphs with
/// `n <= 10` also get an exhaustive scan of their absorbing states.
pub fn absorption(params: &VerifyParams) -> Result<Vec<InstanceReport>> {
    check_families(params)?;
    let mut reports: Vec<InstanceReport> = (0..params.trials)
        .into_par_iter()
        .map(|k| absorption_trial(params, k))
        .collect::<Result<_>>()?;

    for family in &params.families {
        for n in params.n.iter().filter(|&n| n >= family.min_n().max(2) && n <= DENSE_CAP) {
            let (id, g) = family_graph(*family, n, params.seed, n as u64)?;
            let mut report = InstanceReport::new(Suite::Absorption, format!("{id}/exhaustive"), &g);
            let floor = consensus_floor(&g);
            let absorbing = exact::enumerate_absorbing(&g)?;
            for s in &absorbing {
                let x = s.to_state(g.n());
                if !theory::validate_absorbed_state(&g, &x) {
                    report.violate(Violation::new(&g, &x, None, "enumerated state is not stable"));
                }
                if x.is_consensus() != (potential_z(&g, &x) == floor) {
                    report.violate(Violation::new(&g, &x, None, "consensus does not match Z floor"));
                }
            }
            report.checked = absorbing.len() as u64;
            reports.push(report);
        }
    }
    Ok(reports)
}

fn absorption_trial(params: &VerifyParams, k: u64) -> Result<InstanceReport> {
    let (id, g) = trial_graph(params, k)?;
    let mut rng = trial_rng(params.seed, k);
    let p = rng.gen_range(0.05..0.95);
    let x0 = dynamics::init_opinions(g.n(), p, &mut rng)?;
    let mut opts = RunOptions::for_graph(&g);
    if params.max_steps > 0 {
        opts = opts.with_max_steps(params.max_steps);
    }
    let mut report = InstanceReport::new(Suite::Absorption, format!("{id}#{k}"), &g);
    report.checked = 1;
    match dynamics::run_to_absorption(&g, &x0, &mut rng, opts) {
        Ok(rec) => {
            let floor = consensus_floor(&g);
            if !theory::validate_absorbed_state(&g, &rec.final_state) {
                report.violate(Violation::new(&g, &rec.final_state, Some(rec.steps_to_absorption), "final state not stable"));
            }
            if rec.consensus != (rec.z_final == floor) || rec.z_final > rec.z_initial {
                report.violate(Violation::new(
                    &g,
                    &rec.final_state,
                    Some(rec.steps_to_absorption),
                    format!("consensus {} with z_final {} (floor {floor})", rec.consensus, rec.z_final),
                ));
            }
            if rec.flips > (rec.z_initial - floor) / 2 {
                report.violate(Violation::new(&g, &x0, None, format!("{} flips exceed (Z0 - floor)/2", rec.flips)));
            }
        }
        Err(e) => report.violate(Violation::new(&g, &x0, None, e.to_string())),
    }
    Ok(report)
}

/// Every state carrying a blocked path is frozen under simulation and
/// cannot reach consensus in the exact chain.
pub fn blocked(params: &VerifyParams) -> Result<Vec<InstanceReport>> {
    check_families(params)?;
    let mut reports = Vec::new();
    for family in &params.families {
        for n in params.n.iter().filter(|&n| n >= family.min_n().max(4)) {
            let (id, g) = family_graph(*family, n, params.seed, n as u64)?;
            let reach = exact::consensus_reachable(&g)?;
            let steps = params.max_steps.max(1);
            let mut report = InstanceReport::new(Suite::Blocked, id, &g);
            let found: Vec<(u64, Vec<Violation>)> = (0..1u32 << n)
                .into_par_iter()
                .filter_map(|code| {
                    let x = OpinionState::from_code(code, n);
                    let bp = theory::find_blocked_path(&g, &x)?;
                    let mut v = Vec::new();
                    if reach[code as usize] {
                        v.push(Violation::new(&g, &x, None, format!("blocked at {:?} yet consensus reachable", bp.vertices)));
                    }
                    let mut rng = trial_rng(params.seed, u64::from(code));
                    if !theory::verify_frozen(&g, &x, &bp, &mut rng, steps) {
                        v.push(Violation::new(&g, &x, None, format!("blocked vertices {:?} changed", bp.vertices)));
                    }
                    Some((1, v))
                })
                .collect();
            for (c, vs) in found {
                report.checked += c;
                vs.into_iter().for_each(|v| report.violate(v));
            }
            reports.push(report);
        }
    }
    Ok(reports)
}

/// Exact consensus probabilities dominate the bound on every grid point;
/// complete graphs reach consensus with probability one.
pub fn bound(params: &VerifyParams, max_n: usize) -> Result<Vec<InstanceReport>> {
    check_families(params)?;
    let mut graphs = Vec::new();
    for family in &params.families {
        if *family == Family::Random {
            for k in 0..params.trials.min(10) {
                let mut rng = trial_rng(derive_seed(params.seed, 1 << 32), k);
                let n = rng.gen_range(4.max(params.n.lo)..=max_n.max(4));
                graphs.push(family_graph(Family::Random, n, params.seed, k)?);
            }
        } else {
            for n in params.n.lo.max(family.min_n())..=max_n {
                graphs.push(family_graph(*family, n, params.seed, 0)?);
            }
        }
    }
    graphs
        .par_iter()
        .map(|(id, g)| {
            let analysis = exact::exact_consensus_probability(g, 0.5)?;
            let mut report = InstanceReport::new(Suite::Bound, id.clone(), g);
            for &p in &params.p_grid {
                let value = analysis.with_p(p).p_consensus;
                let b = consensus_bound(p, g.edge_count());
                if value < b - EXACT_TOLERANCE {
                    report.violate(Violation::for_graph(g, format!("p={p}: exact {value} below bound {b}")));
                }
                if g.is_complete() && (value - 1.0).abs() > EXACT_TOLERANCE {
                    report.violate(Violation::for_graph(g, format!("p={p}: complete graph gives {value}")));
                }
                if !corollary_holds(p, g.edge_count()) {
                    report.violate(Violation::for_graph(g, format!("p={p}: corollary fails")));
                }
                report.checked += 1;
            }
            Ok(report)
        })
        .collect()
}

/// On cycles and paths, checks state by state that carrying a blocked
/// quadruple is equivalent to consensus being unreachable, and that
/// reachability agrees with a positive hit probability.
pub fn reachability(params: &VerifyParams) -> Result<Vec<InstanceReport>> {
    check_families(params)?;
    let mut reports = Vec::new();
    for family in &params.families {
        for n in params.n.iter().filter(|&n| n >= family.min_n().max(4)) {
            let (id, g) = family_graph(*family, n, params.seed, n as u64)?;
            let reach = exact::consensus_reachable(&g)?;
            let h = exact::consensus_hit_probabilities(&g)?;
            let mut report = InstanceReport::new(Suite::Reachability, id, &g);
            for code in 0..1u32 << n {
                let x = StateIndex(code).to_state(n);
                let blocked = theory::find_blocked_path(&g, &x).is_some();
                let reachable = reach[code as usize];
                if blocked == reachable {
                    report.violate(Violation::new(
                        &g,
                        &x,
                        None,
                        format!("blocked={blocked} but can_reach_consensus={reachable} (h={})", h[code as usize]),
                    ));
                }
                if (h[code as usize] > 0.0) != reachable {
                    report.violate(Violation::new(&g, &x, None, format!("h={} vs reachable={reachable}", h[code as usize])));
                }
                report.checked += 1;
            }
            reports.push(report);
        }
    }
    Ok(reports)
}

/// Dispatches to the named suite. `max_n` is only used by the bound suite.
pub fn run_suite(suite: Suite, params: &VerifyParams, max_n: usize) -> Result<Vec<InstanceReport>> {
    match suite {
        Suite::Potential => potential(params),
        Suite::Absorption => absorption(params),
        Suite::Blocked => blocked(params),
        Suite::Bound => bound(params, max_n),
        Suite::Reachability => reachability(params),
    }
}
