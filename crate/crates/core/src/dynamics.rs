//! The majority-based imitation rule.
//!
//! At each step an agent `i` is drawn uniformly from the vertices and a
//! neighbor `j` uniformly from `N_i`. Agent `i` adopts `x_j` iff strictly
//! more of its neighbors hold `x_j` than hold `x_i`. Ties never flip.
//!
//! The potential `Z` counts ordered pairs `i != j` that disagree or are not
//! adjacent. Every flip lowers it by `2 * (disagree - agree)` of the flipping
//! vertex, so it never increases, and it reaches its floor
//! `n(n-1) - 2|E|` exactly at consensus.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::graph::Graph;
use crate::opinion::{Opinion, OpinionState};

/// Budget per vertex used when no explicit `max_steps` is given.
pub const DEFAULT_STEPS_PER_VERTEX: u64 = 1_000_000;

pub fn default_max_steps(n: usize) -> u64 {
    DEFAULT_STEPS_PER_VERTEX * n as u64
}

/// Draws each opinion independently: `+1` with probability `p`.
pub fn init_opinions<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    rng: &mut R,
) -> Result<OpinionState, DynamicsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(DynamicsError::Probability(p));
    }
    let opinions = (0..n)
        .map(|_| if rng.gen_bool(p) { Opinion::Plus } else { Opinion::Minus })
        .collect();
    OpinionState::new(opinions)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize)]
pub struct NeighborCounts {
    pub agree: usize,
    pub disagree: usize,
}

impl NeighborCounts {
    /// The vertex would flip if offered a disagreeing neighbor.
    #[inline]
    pub fn is_unstable(self) -> bool {
        self.disagree > self.agree
    }
}

pub fn opinion_counts(g: &Graph, x: &OpinionState, i: usize) -> NeighborCounts {
    let agree = g.neighbors(i).iter().filter(|&&j| x[j] == x[i]).count();
    NeighborCounts {
        agree,
        disagree: g.degree(i) - agree,
    }
}

/// Whether agent `i` imitates its neighbor `j` in state `x`.
pub fn would_flip(g: &Graph, x: &OpinionState, i: usize, j: usize) -> Result<bool, DynamicsError> {
    if i >= g.n() || j >= g.n() || !g.is_adjacent(i, j) {
        return Err(DynamicsError::NotAdjacent { i, j });
    }
    Ok(x[j] != x[i] && opinion_counts(g, x, i).is_unstable())
}

/// `n(n-1) - 2|E|`: the potential of any consensus state.
pub fn consensus_floor(g: &Graph) -> u64 {
    let n = g.n() as u64;
    n * (n - 1) - 2 * g.edge_count() as u64
}

/// Number of ordered adjacent pairs holding different opinions.
pub fn disagreeing_ordered_pairs(g: &Graph, x: &OpinionState) -> u64 {
    2 * g.edges().filter(|&(u, v)| x[u] != x[v]).count() as u64
}

/// `Z = #{(i, j) : i != j, x_i != x_j or (i, j) not an edge}`.
pub fn potential_z(g: &Graph, x: &OpinionState) -> u64 {
    disagreeing_ordered_pairs(g, x) + consensus_floor(g)
}

/// No selection can cause a flip: every vertex has `disagree <= agree`.
pub fn is_absorbing(g: &Graph, x: &OpinionState) -> bool {
    (0..g.n()).all(|i| !opinion_counts(g, x, i).is_unstable())
}

pub fn is_consensus(x: &OpinionState) -> bool {
    x.is_consensus()
}

/// One update event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepOutcome {
    pub agent: usize,
    pub neighbor: usize,
    pub flipped: bool,
    pub z_decrement: u64,
}

#[inline]
fn select<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> (usize, usize) {
    let agent = rng.gen_range(0..g.n());
    let nbrs = g.neighbors(agent);
    (agent, nbrs[rng.gen_range(0..nbrs.len())])
}

/// Applies one step to a copy of `x`.
///
/// For repeated stepping use [`Simulation`], which keeps neighbor counts up
/// to date instead of recounting them.
pub fn step<R: Rng + ?Sized>(g: &Graph, x: &OpinionState, rng: &mut R) -> (OpinionState, StepOutcome) {
    let (agent, neighbor) = select(g, rng);
    let counts = opinion_counts(g, x, agent);
    let flipped = x[neighbor] != x[agent] && counts.is_unstable();
    let mut next = x.clone();
    let z_decrement = if flipped {
        next.set(agent, x[neighbor]);
        2 * (counts.disagree - counts.agree) as u64
    } else {
        0
    };
    (
        next,
        StepOutcome {
            agent,
            neighbor,
            flipped,
            z_decrement,
        },
    )
}

/// A trajectory in progress with per-vertex neighbor counts maintained
/// incrementally, so absorption is an O(1) test and a flip costs O(deg).
#[derive(Clone, Debug)]
pub struct Simulation<'g> {
    graph: &'g Graph,
    state: OpinionState,
    agree: Vec<u32>,
    disagree: Vec<u32>,
    unstable: usize,
    z: u64,
}

impl<'g> Simulation<'g> {
    pub fn new(graph: &'g Graph, state: OpinionState) -> Result<Self, DynamicsError> {
        state.check_len(graph.n())?;
        let mut agree = Vec::with_capacity(graph.n());
        let mut disagree = Vec::with_capacity(graph.n());
        let mut unstable = 0;
        for i in 0..graph.n() {
            let c = opinion_counts(graph, &state, i);
            agree.push(c.agree as u32);
            disagree.push(c.disagree as u32);
            unstable += c.is_unstable() as usize;
        }
        let z = potential_z(graph, &state);
        Ok(Simulation {
            graph,
            state,
            agree,
            disagree,
            unstable,
            z,
        })
    }

    pub fn state(&self) -> &OpinionState {
        &self.state
    }

    pub fn into_state(self) -> OpinionState {
        self.state
    }

    /// Current potential, tracked through the decrement identity.
    pub fn z(&self) -> u64 {
        self.z
    }

    pub fn is_absorbing(&self) -> bool {
        self.unstable == 0
    }

    pub fn counts(&self, i: usize) -> NeighborCounts {
        NeighborCounts {
            agree: self.agree[i] as usize,
            disagree: self.disagree[i] as usize,
        }
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let (agent, neighbor) = select(self.graph, rng);
        let flipped =
            self.state[neighbor] != self.state[agent] && self.disagree[agent] > self.agree[agent];
        let z_decrement = if flipped {
            let dec = 2 * u64::from(self.disagree[agent] - self.agree[agent]);
            self.flip(agent);
            self.z -= dec;
            dec
        } else {
            0
        };
        StepOutcome {
            agent,
            neighbor,
            flipped,
            z_decrement,
        }
    }

    fn flip(&mut self, i: usize) {
        let was_unstable = |a: u32, d: u32| (d > a) as usize;
        self.unstable -= was_unstable(self.agree[i], self.disagree[i]);
        std::mem::swap(&mut self.agree[i], &mut self.disagree[i]);
        self.unstable += was_unstable(self.agree[i], self.disagree[i]);

        let new = -self.state[i];
        self.state.set(i, new);
        for &j in self.graph.neighbors(i) {
            self.unstable -= was_unstable(self.agree[j], self.disagree[j]);
            if self.state[j] == new {
                self.agree[j] += 1;
                self.disagree[j] -= 1;
            } else {
                self.agree[j] -= 1;
                self.disagree[j] += 1;
            }
            self.unstable += was_unstable(self.agree[j], self.disagree[j]);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Safety valve; exceeding it is reported as a timeout.
    pub max_steps: u64,
    /// Keep the potential after every step (entry 0 is the initial value).
    pub record_trace: bool,
    /// Recompute `Z` from scratch after every step and fail on any increase
    /// or disagreement with the tracked value.
    pub check_potential: bool,
}

impl RunOptions {
    pub fn for_graph(g: &Graph) -> Self {
        RunOptions {
            max_steps: default_max_steps(g.n()),
            record_trace: false,
            check_potential: false,
        }
    }

    pub fn with_max_steps(mut self, max_steps: u64) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn traced(mut self) -> Self {
        self.record_trace = true;
        self.check_potential = true;
        self
    }

    pub fn checked(mut self) -> Self {
        self.check_potential = true;
        self
    }
}

/// One trajectory from its initial state to absorption.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub initial: OpinionState,
    #[serde(rename = "final")]
    pub final_state: OpinionState,
    /// Selection events until the absorbing state was first entered,
    /// null events included.
    pub steps_to_absorption: u64,
    pub flips: u64,
    pub consensus: bool,
    pub z_initial: u64,
    pub z_final: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_trace: Option<Vec<u64>>,
}

/// Steps until no selection can change the state.
///
/// Absorption is tested before every step, so an initially frozen state
/// returns after 0 steps.
pub fn run_to_absorption<R: Rng + ?Sized>(
    g: &Graph,
    x0: &OpinionState,
    rng: &mut R,
    opts: RunOptions,
) -> Result<RunRecord, DynamicsError> {
    let mut sim = Simulation::new(g, x0.clone())?;
    let z_initial = sim.z();
    let mut trace = opts.record_trace.then(|| vec![z_initial]);
    let mut steps = 0u64;
    let mut flips = 0u64;

    let record = |sim: &Simulation, steps, flips, trace: Option<Vec<u64>>| RunRecord {
        initial: x0.clone(),
        final_state: sim.state().clone(),
        steps_to_absorption: steps,
        flips,
        consensus: sim.state().is_consensus(),
        z_initial,
        z_final: sim.z(),
        z_trace: trace,
    };

    while !sim.is_absorbing() {
        if steps >= opts.max_steps {
            return Err(DynamicsError::Timeout {
                max_steps: opts.max_steps,
                partial: Box::new(record(&sim, steps, flips, trace)),
            });
        }
        let before = sim.z();
        let outcome = sim.step(rng);
        steps += 1;
        flips += outcome.flipped as u64;
        if opts.check_potential {
            let actual = potential_z(g, sim.state());
            if actual > before {
                return Err(DynamicsError::PotentialIncrease {
                    step: steps,
                    before,
                    after: actual,
                });
            }
            if actual != sim.z() {
                return Err(DynamicsError::PotentialMismatch {
                    step: steps,
                    tracked: sim.z(),
                    actual,
                });
            }
        }
        if let Some(t) = trace.as_mut() {
            t.push(sim.z());
        }
    }
    Ok(record(&sim, steps, flips, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(s: &str) -> OpinionState {
        s.parse().unwrap()
    }

    /// Direct pairwise evaluation of the potential.
    fn brute_z(g: &Graph, x: &OpinionState) -> u64 {
        let n = g.n();
        let mut z = 0;
        for i in 0..n {
            for j in 0..n {
                if i != j && (x[i] != x[j] || !g.is_adjacent(i, j)) {
                    z += 1;
                }
            }
        }
        z
    }

    #[test]
    fn init_degenerate_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(init_opinions(5, 1.0, &mut rng).unwrap().to_string(), "+++++");
        assert_eq!(init_opinions(5, 0.0, &mut rng).unwrap().to_string(), "-----");
        assert!(matches!(
            init_opinions(5, 1.5, &mut rng),
            Err(DynamicsError::Probability(_))
        ));
        assert!(init_opinions(5, -0.1, &mut rng).is_err());
    }

    #[test]
    fn init_half_concentrates() {
        // sd of the fraction is 0.005 at n = 10^4, so [0.47, 0.53] is 6 sd.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x = init_opinions(10_000, 0.5, &mut rng).unwrap();
        let frac = x.count_plus() as f64 / 1e4;
        assert!((0.47..=0.53).contains(&frac), "{frac}");
    }

    #[test]
    fn counts() {
        let star = Graph::star(4).unwrap();
        let c = opinion_counts(&star, &st("+---"), 0);
        assert_eq!((c.agree, c.disagree), (0, 3));
        let c4 = Graph::cycle(4).unwrap();
        let c = opinion_counts(&c4, &st("++--"), 0);
        assert_eq!((c.agree, c.disagree), (1, 1));
        let k4 = Graph::complete(4).unwrap();
        let c = opinion_counts(&k4, &st("++++"), 2);
        assert_eq!((c.agree, c.disagree), (3, 0));
    }

    #[test]
    fn flip_rule() {
        let p2 = Graph::path(2).unwrap();
        assert!(would_flip(&p2, &st("+-"), 0, 1).unwrap());
        let c4 = Graph::cycle(4).unwrap();
        assert!(!would_flip(&c4, &st("++--"), 1, 2).unwrap());
        let k3 = Graph::complete(3).unwrap();
        assert!(would_flip(&k3, &st("++-"), 2, 0).unwrap());
        assert!(!would_flip(&k3, &st("++-"), 0, 2).unwrap());
        assert!(matches!(
            would_flip(&c4, &st("++--"), 0, 2),
            Err(DynamicsError::NotAdjacent { i: 0, j: 2 })
        ));
    }

    #[test]
    fn step_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let k2 = Graph::complete(2).unwrap();
        for _ in 0..20 {
            let (next, out) = step(&k2, &st("++"), &mut rng);
            assert_eq!(next, st("++"));
            assert!(!out.flipped);
            assert_eq!(out.z_decrement, 0);
        }

        // Star center against three leaves: decrement 2 * (3 - 0).
        let star = Graph::star(4).unwrap();
        let x = st("+---");
        let mut seen_center = false;
        for _ in 0..200 {
            let (next, out) = step(&star, &x, &mut rng);
            if out.agent == 0 {
                seen_center = true;
                assert!(out.flipped);
                assert_eq!(out.z_decrement, 6);
                assert_eq!(next, st("----"));
                assert_eq!(brute_z(&star, &x) - brute_z(&star, &next), 6);
            }
        }
        assert!(seen_center);

        let c4 = Graph::cycle(4).unwrap();
        for _ in 0..200 {
            let (next, out) = step(&c4, &st("++--"), &mut rng);
            assert_eq!(next, st("++--"));
            assert!(!out.flipped);
            assert!(c4.is_adjacent(out.agent, out.neighbor));
        }
    }

    #[test]
    fn potential_examples() {
        let p3 = Graph::path(3).unwrap();
        assert_eq!(potential_z(&p3, &st("+-+")), 6);
        assert_eq!(brute_z(&p3, &st("+-+")), 6);
        for n in 2..7 {
            let k = Graph::complete(n).unwrap();
            assert_eq!(potential_z(&k, &OpinionState::uniform(n, Opinion::Plus)), 0);
        }
        let c5 = Graph::cycle(5).unwrap();
        assert_eq!(potential_z(&c5, &st("-----")), consensus_floor(&c5));
        assert_eq!(consensus_floor(&c5), 20 - 10);
    }

    #[test]
    fn potential_matches_pairwise_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for seed in 0..30 {
            let g = Graph::random_connected(7, seed as usize % 10, seed).unwrap();
            let x = init_opinions(7, 0.5, &mut rng).unwrap();
            assert_eq!(potential_z(&g, &x), brute_z(&g, &x));
        }
    }

    #[test]
    fn absorbing_examples() {
        let c4 = Graph::cycle(4).unwrap();
        assert!(is_absorbing(&c4, &st("++++")));
        assert!(is_absorbing(&c4, &st("----")));
        assert!(is_absorbing(&c4, &st("++--")));
        assert!(!is_absorbing(&c4, &st("+-+-")));
        assert!(is_consensus(&st("++")));
        assert!(!is_consensus(&st("+-")));
    }

    #[test]
    fn run_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c4 = Graph::cycle(4).unwrap();
        let opts = RunOptions::for_graph(&c4).traced();
        let rec = run_to_absorption(&c4, &st("++--"), &mut rng, opts.with_max_steps(1)).unwrap();
        assert_eq!(rec.steps_to_absorption, 0);
        assert!(!rec.consensus);
        assert_eq!(rec.final_state, st("++--"));

        let k3 = Graph::complete(3).unwrap();
        for _ in 0..50 {
            let rec = run_to_absorption(&k3, &st("++-"), &mut rng, opts).unwrap();
            assert_eq!(rec.final_state, st("+++"));
            assert!(rec.consensus);
            assert_eq!(rec.flips, 1);
            assert_eq!(rec.z_final, 0);
            let trace = rec.z_trace.unwrap();
            assert_eq!(trace.len() as u64, rec.steps_to_absorption + 1);
            assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn timeout_keeps_partial_record() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c6 = Graph::cycle(6).unwrap();
        let x = st("+-+-+-");
        match run_to_absorption(&c6, &x, &mut rng, RunOptions::for_graph(&c6).with_max_steps(0)) {
            Err(DynamicsError::Timeout { max_steps, partial }) => {
                assert_eq!(max_steps, 0);
                assert_eq!(partial.final_state, x);
            }
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn simulation_counters_track_recount() {
        let g = Graph::random_connected(10, 8, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let x = init_opinions(10, 0.5, &mut rng).unwrap();
        let mut sim = Simulation::new(&g, x).unwrap();
        for _ in 0..2000 {
            sim.step(&mut rng);
            for i in 0..g.n() {
                assert_eq!(sim.counts(i), opinion_counts(&g, sim.state(), i));
            }
            assert_eq!(sim.is_absorbing(), is_absorbing(&g, sim.state()));
            assert_eq!(sim.z(), brute_z(&g, sim.state()));
        }
    }
}
