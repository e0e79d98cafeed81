//! Exact analysis by enumerating all `2^n` opinion vectors.
//!
//! A state is a bitmask ([`StateIndex`]) with bit `b` set iff vertex `b`
//! holds `+1`. The kernel uses the same selection law as the simulator:
//! each ordered adjacent pair `(i, j)` has probability `1 / (n * deg(i))`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::ExactError;
use crate::graph::Graph;
use crate::opinion::OpinionState;

/// Largest graph the enumerator accepts.
pub const ENUMERATION_CAP: usize = 16;
/// Largest graph for which the dense elimination cross-check is offered.
pub const DENSE_CAP: usize = 10;
/// `h` is included in JSON output only up to this size.
pub const JSON_H_CAP: usize = 12;
/// Value iteration stops once no entry moves by more than this.
pub const SWEEP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct StateIndex(pub u32);

impl StateIndex {
    pub fn from_state(x: &OpinionState) -> Self {
        StateIndex(x.to_code())
    }

    pub fn to_state(self, n: usize) -> OpinionState {
        OpinionState::from_code(self.0, n)
    }

    pub fn all_minus() -> Self {
        StateIndex(0)
    }

    pub fn all_plus(n: usize) -> Self {
        StateIndex(full_mask(n))
    }

    pub fn is_consensus(self, n: usize) -> bool {
        self.0 == 0 || self.0 == full_mask(n)
    }
}

fn full_mask(n: usize) -> u32 {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Bitmask view of a graph for fast per-state neighbor counts.
#[derive(Clone, Debug)]
struct MaskGraph {
    n: usize,
    masks: Vec<u32>,
    degree: Vec<u32>,
}

impl MaskGraph {
    fn new(g: &Graph) -> Result<Self, ExactError> {
        check_cap(g)?;
        let masks: Vec<u32> = (0..g.n())
            .map(|i| g.neighbors(i).iter().fold(0u32, |m, &j| m | 1 << j))
            .collect();
        let degree = masks.iter().map(|m| m.count_ones()).collect();
        Ok(MaskGraph {
            n: g.n(),
            masks,
            degree,
        })
    }

    fn states(&self) -> u32 {
        1u32 << self.n
    }

    /// Neighbors of `i` holding the other opinion in state `s`.
    #[inline]
    fn disagree(&self, s: u32, i: usize) -> u32 {
        let other = if s >> i & 1 == 1 { !s } else { s };
        (other & self.masks[i]).count_ones()
    }

    #[inline]
    fn is_unstable(&self, s: u32, i: usize) -> bool {
        2 * self.disagree(s, i) > self.degree[i]
    }

    fn is_absorbing(&self, s: u32) -> bool {
        (0..self.n).all(|i| !self.is_unstable(s, i))
    }

    /// Flip successors of `s` with their probabilities; the remaining mass
    /// is the self-loop. Each unstable vertex contributes a distinct target.
    fn flips(&self, s: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let n = self.n as f64;
        (0..self.n).filter(move |&i| self.is_unstable(s, i)).map(move |i| {
            let weight = f64::from(self.disagree(s, i)) / (n * f64::from(self.degree[i]));
            (s ^ 1 << i, weight)
        })
    }

    /// Self-loop mass: all selections of a stable agent plus selections of an
    /// unstable agent's agreeing neighbors.
    fn stay(&self, s: u32) -> f64 {
        let n = self.n as f64;
        (0..self.n)
            .map(|i| {
                let d = self.degree[i];
                let kept = if self.is_unstable(s, i) { d - self.disagree(s, i) } else { d };
                f64::from(kept) / (n * f64::from(d))
            })
            .sum()
    }
}

fn check_cap(g: &Graph) -> Result<(), ExactError> {
    if g.n() > ENUMERATION_CAP {
        Err(ExactError::Capacity {
            n: g.n(),
            cap: ENUMERATION_CAP,
        })
    } else {
        Ok(())
    }
}

fn check_state(g: &Graph, s: StateIndex) -> Result<(), ExactError> {
    if s.0 > full_mask(g.n()) {
        Err(ExactError::StateRange { code: s.0, n: g.n() })
    } else {
        Ok(())
    }
}

/// Outgoing transitions of `s`, duplicates merged, sorted by target code.
pub fn transitions(g: &Graph, s: StateIndex) -> Result<Vec<(StateIndex, f64)>, ExactError> {
    let mg = MaskGraph::new(g)?;
    check_state(g, s)?;
    let mut out: Vec<(StateIndex, f64)> = mg.flips(s.0).map(|(t, w)| (StateIndex(t), w)).collect();
    let stay = mg.stay(s.0);
    if stay > 0.0 {
        out.push((s, stay));
    }
    out.sort_by_key(|&(t, _)| t);
    Ok(out)
}

pub fn enumerate_absorbing(g: &Graph) -> Result<Vec<StateIndex>, ExactError> {
    let mg = MaskGraph::new(g)?;
    Ok((0..mg.states())
        .into_par_iter()
        .filter(|&s| mg.is_absorbing(s))
        .map(StateIndex)
        .collect())
}

/// Whether some positive-probability path leads from `s` to consensus.
pub fn can_reach_consensus(g: &Graph, s: StateIndex) -> Result<bool, ExactError> {
    let mg = MaskGraph::new(g)?;
    check_state(g, s)?;
    let mut seen = vec![false; mg.states() as usize];
    let mut stack = vec![s.0];
    seen[s.0 as usize] = true;
    while let Some(u) = stack.pop() {
        if StateIndex(u).is_consensus(mg.n) {
            return Ok(true);
        }
        for (t, _) in mg.flips(u) {
            if !std::mem::replace(&mut seen[t as usize], true) {
                stack.push(t);
            }
        }
    }
    Ok(false)
}

/// `can_reach_consensus` for every state at once, by searching backwards
/// from the two consensus states.
pub fn consensus_reachable(g: &Graph) -> Result<Vec<bool>, ExactError> {
    let mg = MaskGraph::new(g)?;
    let mut reach = vec![false; mg.states() as usize];
    let mut queue = VecDeque::new();
    for t in [0, full_mask(mg.n)] {
        reach[t as usize] = true;
        queue.push_back(t);
    }
    while let Some(t) = queue.pop_front() {
        for i in 0..mg.n {
            // `s -> t` flips vertex i iff i is unstable in s.
            let s = t ^ 1 << i;
            if !reach[s as usize] && mg.is_unstable(s, i) {
                reach[s as usize] = true;
                queue.push_back(s);
            }
        }
    }
    Ok(reach)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Solver {
    /// Parallel Jacobi sweeps on the kernel with self-loops divided out.
    #[default]
    ValueIteration,
    /// Back-substitution in increasing order of the potential; flips always
    /// lower it, so the transient system is triangular in that order.
    Ordered,
    /// Dense LU on the transient block, for `n <= DENSE_CAP`.
    Dense,
}

/// Compressed rows of the kernel with self-loops removed and renormalized.
struct NormalizedKernel {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

impl NormalizedKernel {
    fn build(mg: &MaskGraph) -> Self {
        let rows: Vec<Vec<(u32, f64)>> = (0..mg.states())
            .into_par_iter()
            .map(|s| {
                let flips: Vec<(u32, f64)> = mg.flips(s).collect();
                let out: f64 = flips.iter().map(|&(_, w)| w).sum();
                flips.into_iter().map(|(t, w)| (t, w / out)).collect()
            })
            .collect();
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for row in rows {
            for (t, w) in row {
                targets.push(t);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        NormalizedKernel {
            offsets,
            targets,
            weights,
        }
    }

    fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[s]..self.offsets[s + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&t, &w)| (t as usize, w))
    }

    fn is_absorbing(&self, s: usize) -> bool {
        self.offsets[s] == self.offsets[s + 1]
    }
}

fn boundary(n: usize, s: usize) -> f64 {
    if StateIndex(s as u32).is_consensus(n) {
        1.0
    } else {
        0.0
    }
}

/// Probability of eventually reaching consensus from every state, indexed
/// by state code.
pub fn consensus_hit_probabilities(g: &Graph) -> Result<Vec<f64>, ExactError> {
    consensus_hit_probabilities_with(g, Solver::default())
}

pub fn consensus_hit_probabilities_with(g: &Graph, solver: Solver) -> Result<Vec<f64>, ExactError> {
    let mg = MaskGraph::new(g)?;
    let kernel = NormalizedKernel::build(&mg);
    let mut h = match solver {
        Solver::ValueIteration => solve_sweeps(&mg, &kernel),
        Solver::Ordered => solve_ordered(&mg, &kernel),
        Solver::Dense => {
            if mg.n > DENSE_CAP {
                return Err(ExactError::Capacity {
                    n: mg.n,
                    cap: DENSE_CAP,
                });
            }
            solve_dense(&mg, &kernel)
        }
    };
    h.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(h)
}

fn solve_sweeps(mg: &MaskGraph, kernel: &NormalizedKernel) -> Vec<f64> {
    let states = mg.states() as usize;
    let mut h: Vec<f64> = (0..states).map(|s| boundary(mg.n, s)).collect();
    let mut next = h.clone();
    loop {
        next.par_iter_mut().enumerate().for_each(|(s, v)| {
            if !kernel.is_absorbing(s) {
                *v = kernel.row(s).map(|(t, w)| w * h[t]).sum();
            }
        });
        let change = h
            .par_iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .reduce(|| 0.0, f64::max);
        std::mem::swap(&mut h, &mut next);
        if change < SWEEP_TOLERANCE {
            return h;
        }
    }
}

fn solve_ordered(mg: &MaskGraph, kernel: &NormalizedKernel) -> Vec<f64> {
    let states = mg.states() as usize;
    let disagreements = |s: u32| -> u32 { (0..mg.n).map(|i| mg.disagree(s, i)).sum() };
    let mut order: Vec<u32> = (0..mg.states()).collect();
    order.sort_by_key(|&s| (disagreements(s), s));
    let mut h = vec![0.0; states];
    for s in order {
        let s = s as usize;
        h[s] = if kernel.is_absorbing(s) {
            boundary(mg.n, s)
        } else {
            kernel.row(s).map(|(t, w)| w * h[t]).sum()
        };
    }
    h
}

fn solve_dense(mg: &MaskGraph, kernel: &NormalizedKernel) -> Vec<f64> {
    let states = mg.states() as usize;
    let transient: Vec<usize> = (0..states).filter(|&s| !kernel.is_absorbing(s)).collect();
    let mut slot = vec![usize::MAX; states];
    for (k, &s) in transient.iter().enumerate() {
        slot[s] = k;
    }
    let m = transient.len();
    // Raw kernel with self-loops, independent of the normalized rows the
    // other solvers use: (I - P_TT) h_T = P_TA h_A.
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut b = DVector::<f64>::zeros(m);
    for (k, &s) in transient.iter().enumerate() {
        a[(k, k)] = 1.0 - mg.stay(s as u32);
        for (t, w) in mg.flips(s as u32) {
            let t = t as usize;
            if kernel.is_absorbing(t) {
                b[k] += w * boundary(mg.n, t);
            } else {
                a[(k, slot[t])] -= w;
            }
        }
    }
    let x = a.lu().solve(&b).expect("transient block of an absorbing chain is nonsingular");
    (0..states)
        .map(|s| {
            if kernel.is_absorbing(s) {
                boundary(mg.n, s)
            } else {
                x[slot[s]]
            }
        })
        .collect()
}

/// Probability of initial state `s` when each vertex is `+1` independently
/// with probability `p`.
pub fn initial_probability(s: StateIndex, n: usize, p: f64) -> f64 {
    let plus = s.0.count_ones() as i32;
    p.powi(plus) * (1.0 - p).powi(n as i32 - plus)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactAnalysis {
    pub n: usize,
    pub absorbing: Vec<StateIndex>,
    /// Consensus hit probability per state code.
    pub h: Vec<f64>,
    pub p_consensus: f64,
    pub p_initial: f64,
}

impl ExactAnalysis {
    pub fn n_absorbing(&self) -> usize {
        self.absorbing.len()
    }

    pub fn n_frozen_nonconsensus(&self) -> usize {
        self.absorbing.iter().filter(|s| !s.is_consensus(self.n)).count()
    }

    pub fn h_of(&self, s: StateIndex) -> f64 {
        self.h[s.0 as usize]
    }

    /// Re-aggregates the same `h` under another initial probability.
    pub fn with_p(&self, p: f64) -> ExactAnalysis {
        ExactAnalysis {
            p_consensus: aggregate(&self.h, self.n, p),
            p_initial: p,
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> ExactJson {
        ExactJson {
            n: self.n,
            p: self.p_initial,
            p_consensus: self.p_consensus,
            n_absorbing: self.n_absorbing(),
            n_frozen_nonconsensus: self.n_frozen_nonconsensus(),
            h: (self.n <= JSON_H_CAP).then(|| self.h.clone()),
        }
    }
}

/// Wire form of [`ExactAnalysis`].
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct ExactJson {
    pub n: usize,
    pub p: f64,
    pub p_consensus: f64,
    pub n_absorbing: usize,
    pub n_frozen_nonconsensus: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
}

// Summation roundoff can push a total of ones past 1 by an ulp.
fn aggregate(h: &[f64], n: usize, p: f64) -> f64 {
    h.iter()
        .enumerate()
        .map(|(s, &v)| initial_probability(StateIndex(s as u32), n, p) * v)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

pub fn exact_consensus_probability(g: &Graph, p: f64) -> Result<ExactAnalysis, crate::Error> {
    exact_consensus_probability_with(g, p, Solver::default())
}

pub fn exact_consensus_probability_with(
    g: &Graph,
    p: f64,
    solver: Solver,
) -> Result<ExactAnalysis, crate::Error> {
    if !(0.0..=1.0).contains(&p) {
        return Err(crate::error::DynamicsError::Probability(p).into());
    }
    let h = consensus_hit_probabilities_with(g, solver)?;
    let absorbing = enumerate_absorbing(g)?;
    Ok(ExactAnalysis {
        n: g.n(),
        p_consensus: aggregate(&h, g.n(), p),
        p_initial: p,
        absorbing,
        h,
    })
}
