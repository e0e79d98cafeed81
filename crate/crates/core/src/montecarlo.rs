//! Monte Carlo estimation of the consensus probability.
//!
//! Trials run in parallel, each on its own counter-based stream, and are
//! aggregated with integer sums so the report does not depend on the
//! number of workers.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dynamics::{self, consensus_floor, potential_z, RunOptions};
use crate::error::{DynamicsError, Error, Result};
use crate::graph::{Family, Graph};
use crate::stream::{derive_seed, trial_rng};
use crate::theory::{consensus_bound, validate_absorbed_state, BoundReport, Method};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "MAJSIM_THREADS";

/// Where the graph of an experiment comes from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Family {
        family: Family,
        n: usize,
        #[serde(default)]
        extra: usize,
        #[serde(default)]
        seed: u64,
    },
    EdgeList {
        path: PathBuf,
    },
}

impl GraphSpec {
    pub fn family(family: Family, n: usize) -> Self {
        GraphSpec::Family {
            family,
            n,
            extra: 0,
            seed: 0,
        }
    }

    pub fn random(n: usize, extra: usize, seed: u64) -> Self {
        GraphSpec::Family {
            family: Family::Random,
            n,
            extra,
            seed,
        }
    }

    pub fn build(&self) -> Result<Graph> {
        match self {
            GraphSpec::Family {
                family,
                n,
                extra,
                seed,
            } => Ok(family.build(*n, *extra, *seed)?),
            GraphSpec::EdgeList { path } => {
                let text = std::fs::read_to_string(path)?;
                Ok(Graph::from_edge_list(&text)?)
            }
        }
    }

    /// Short label used in report rows.
    pub fn id(&self) -> String {
        match self {
            GraphSpec::Family {
                family: Family::Random,
                n,
                extra,
                seed,
            } => format!("random-{n}-{extra}-s{seed}"),
            GraphSpec::Family { family, n, .. } => format!("{family}-{n}"),
            GraphSpec::EdgeList { path } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph_spec: GraphSpec,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    /// Defaults to `10^6 * n` when absent.
    pub max_steps: Option<u64>,
    pub record_z_trace: bool,
    /// Two-sided level of the Wilson interval.
    pub confidence: f64,
}

impl ExperimentConfig {
    pub fn new(graph_spec: GraphSpec, p: f64, trials: u64, seed: u64) -> Self {
        ExperimentConfig {
            graph_spec,
            p,
            trials,
            seed,
            max_steps: None,
            record_z_trace: false,
            confidence: 0.95,
        }
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(DynamicsError::Probability(self.p).into());
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::Config(format!(
                "confidence {} must lie strictly between 0 and 1",
                self.confidence
            )));
        }
        if self.max_steps == Some(0) {
            return Err(Error::Config("max_steps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub consensus_frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub mean_absorption_steps: f64,
    pub mean_flips: f64,
    pub trials: u64,
    pub consensus_count: u64,
    /// Trials that hit `max_steps`; excluded from the frequency and means.
    pub timeouts: u64,
}

/// Wilson score interval for `successes` out of `trials` at the given
/// two-sided confidence level.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - (1.0 - confidence) / 2.0);
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z / denom * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt();
    (
        (center - half).max(0.0).min(phat),
        (center + half).min(1.0).max(phat),
    )
}

/// Worker count: `MAJSIM_THREADS` if set and positive, else all cores.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` on a dedicated pool with `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

enum TrialOutcome {
    Done { consensus: bool, steps: u64, flips: u64 },
    Timeout,
}

fn run_trial(g: &Graph, cfg: &ExperimentConfig, opts: RunOptions, k: u64) -> Result<TrialOutcome> {
    let mut rng = trial_rng(cfg.seed, k);
    let x0 = dynamics::init_opinions(g.n(), cfg.p, &mut rng)?;
    match dynamics::run_to_absorption(g, &x0, &mut rng, opts) {
        Ok(rec) => {
            let floor = consensus_floor(g);
            if !validate_absorbed_state(g, &rec.final_state)
                || rec.consensus != (rec.z_final == floor)
                || rec.z_final != potential_z(g, &rec.final_state)
            {
                return Err(Error::Invariant(format!(
                    "trial {k}: final state {} fails absorption checks (z_final {}, floor {floor})",
                    rec.final_state, rec.z_final
                )));
            }
            Ok(TrialOutcome::Done {
                consensus: rec.consensus,
                steps: rec.steps_to_absorption,
                flips: rec.flips,
            })
        }
        Err(DynamicsError::Timeout { .. }) => Ok(TrialOutcome::Timeout),
        Err(e) => Err(e.into()),
    }
}

/// Estimates on a prebuilt graph using the current rayon pool.
pub fn estimate_on(g: &Graph, cfg: &ExperimentConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let mut opts = RunOptions::for_graph(g);
    if let Some(m) = cfg.max_steps {
        opts = opts.with_max_steps(m);
    }
    opts.record_trace = cfg.record_z_trace;

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|k| run_trial(g, cfg, opts, k))
        .collect::<Result<_>>()?;

    let (mut consensus, mut steps, mut flips, mut timeouts) = (0u64, 0u64, 0u64, 0u64);
    for o in &outcomes {
        match *o {
            TrialOutcome::Done {
                consensus: c,
                steps: s,
                flips: f,
            } => {
                consensus += c as u64;
                steps += s;
                flips += f;
            }
            TrialOutcome::Timeout => timeouts += 1,
        }
    }
    let completed = cfg.trials - timeouts;
    let per = |total: u64| if completed == 0 { 0.0 } else { total as f64 / completed as f64 };
    let (wilson_low, wilson_high) = wilson_interval(consensus, completed, cfg.confidence);
    Ok(EstimateReport {
        consensus_frequency: per(consensus),
        wilson_low,
        wilson_high,
        mean_absorption_steps: per(steps),
        mean_flips: per(flips),
        trials: cfg.trials,
        consensus_count: consensus,
        timeouts,
    })
}

pub fn estimate(cfg: &ExperimentConfig) -> Result<EstimateReport> {
    estimate_with_threads(cfg, default_threads())
}

pub fn estimate_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<EstimateReport> {
    let g = cfg.graph_spec.build()?;
    with_threads(threads, || estimate_on(&g, cfg))?
}

/// One grid point of a sweep: the estimate and its comparison with the
/// bound. `satisfied` holds when the upper Wilson limit reaches the bound,
/// i.e. the estimate is not significantly below it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub report: BoundReport,
    pub estimate: EstimateReport,
}

#[derive(Serialize)]
struct SweepCsvRow<'a> {
    graph_id: &'a str,
    n: usize,
    m: usize,
    p: f64,
    bound: f64,
    exact_or_estimate: f64,
    method: Method,
    satisfied: bool,
    wilson_low: f64,
    wilson_high: f64,
    mean_absorption_steps: f64,
    mean_flips: f64,
}

pub fn write_sweep_csv<W: std::io::Write>(out: W, points: &[SweepPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for pt in points {
        let r = &pt.report;
        w.serialize(SweepCsvRow {
            graph_id: &r.graph_id,
            n: r.n,
            m: r.m,
            p: r.p,
            bound: r.bound,
            exact_or_estimate: r.exact_or_estimate,
            method: r.method,
            satisfied: r.satisfied,
            wilson_low: pt.estimate.wilson_low,
            wilson_high: pt.estimate.wilson_high,
            mean_absorption_steps: pt.estimate.mean_absorption_steps,
            mean_flips: pt.estimate.mean_flips,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Estimates at every grid point (grid point `k` uses a seed derived from
/// `(seed, k)`) and sets each against the bound.
pub fn sweep(
    graph_spec: &GraphSpec,
    p_grid: &[f64],
    trials: u64,
    seed: u64,
    threads: usize,
) -> Result<Vec<SweepPoint>> {
    if p_grid.is_empty() {
        return Err(Error::Config("sweep needs at least one grid point".into()));
    }
    let g = graph_spec.build()?;
    let id = graph_spec.id();
    with_threads(threads, || {
        p_grid
            .iter()
            .enumerate()
            .map(|(k, &p)| {
                let cfg = ExperimentConfig::new(graph_spec.clone(), p, trials, derive_seed(seed, k as u64));
                let est = estimate_on(&g, &cfg)?;
                let slack = est.wilson_high - est.consensus_frequency;
                let report = BoundReport::new(id.clone(), &g, p, est.consensus_frequency, Method::Mc, slack);
                debug_assert_eq!(report.bound, consensus_bound(p, g.edge_count()));
                Ok(SweepPoint { report, estimate: est })
            })
            .collect()
    })?
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(50, 100, 0.95);
        assert!(lo < 0.5 && hi > 0.5);
        assert!((0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        // Textbook value: 50/100 at 95% gives [0.4038, 0.5962].
        assert!((lo - 0.403_831).abs() < 1e-5, "{lo}");
        let (lo, hi) = wilson_interval(100, 100, 0.99);
        assert_eq!(hi, 1.0);
        assert!(lo < 1.0 && lo > 0.9);
        let (lo, hi) = wilson_interval(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn complete_graph_always_agrees() {
        let cfg = ExperimentConfig::new(GraphSpec::family(Family::Complete, 6), 0.5, 500, 1);
        let r = estimate_with_threads(&cfg, 2).unwrap();
        assert_eq!(r.consensus_frequency, 1.0);
        assert_eq!(r.timeouts, 0);
    }

    #[test]
    fn p_one_needs_no_flips() {
        let cfg = ExperimentConfig::new(GraphSpec::random(9, 4, 3), 1.0, 200, 8);
        let r = estimate_with_threads(&cfg, 2).unwrap();
        assert_eq!(r.consensus_frequency, 1.0);
        assert_eq!(r.mean_flips, 0.0);
        assert_eq!(r.mean_absorption_steps, 0.0);
    }

    #[test]
    fn config_errors() {
        let spec = GraphSpec::family(Family::Cycle, 5);
        assert!(estimate(&ExperimentConfig::new(spec.clone(), 0.5, 0, 1)).is_err());
        assert!(estimate(&ExperimentConfig::new(spec.clone(), 1.5, 10, 1)).is_err());
        assert!(estimate(&ExperimentConfig::new(GraphSpec::family(Family::Cycle, 2), 0.5, 10, 1)).is_err());
        assert!(sweep(&spec, &[], 10, 1, 1).is_err());
    }

    #[test]
    fn timeouts_are_counted() {
        let mut cfg = ExperimentConfig::new(GraphSpec::family(Family::Cycle, 12), 0.5, 50, 4);
        cfg.max_steps = Some(1);
        let r = estimate_with_threads(&cfg, 1).unwrap();
        assert!(r.timeouts > 0);
    }

    #[test]
    fn sweep_bounds_on_p5() {
        let pts = sweep(&GraphSpec::family(Family::Path, 5), &[0.1, 0.5, 0.9], 300, 5, 2).unwrap();
        let bounds: Vec<f64> = pts.iter().map(|pt| pt.report.bound).collect();
        for (b, want) in bounds.iter().zip([0.28, -1.0, 0.28]) {
            assert!((b - want).abs() < 1e-12, "{b}");
        }
        assert!(pts.iter().all(|pt| pt.report.satisfied));
        assert!(pts.iter().all(|pt| pt.report.method == Method::Mc));
    }

    #[test]
    fn sweep_zero_point() {
        let pts = sweep(&GraphSpec::family(Family::Complete, 4), &[0.0, 0.3, 0.7], 200, 5, 2).unwrap();
        assert!(pts.iter().all(|pt| pt.report.satisfied && pt.estimate.consensus_frequency == 1.0));
        assert_eq!(pts[0].report.bound, 1.0);
    }

    #[test]
    fn ids() {
        assert_eq!(GraphSpec::family(Family::Cycle, 4).id(), "cycle-4");
        assert_eq!(GraphSpec::random(8, 2, 7).id(), "random-8-2-s7");
        let spec = GraphSpec::EdgeList {
            path: "graphs/k5.edges".into(),
        };
        assert_eq!(spec.id(), "k5");
    }
}
