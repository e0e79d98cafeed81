//! Closed-form consensus bound, frozen-configuration detection and
//! validators for absorbed states.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{opinion_counts, Simulation};
use crate::graph::Graph;
use crate::opinion::{Opinion, OpinionState};

/// Lower bound `1 - 2p(1-p)|E|` on the consensus probability, unclamped.
pub fn consensus_bound(p: f64, edge_count: usize) -> f64 {
    1.0 - 2.0 * p * (1.0 - p) * edge_count as f64
}

/// For `p <= 1/(2m)` the bound is at least `1/(2m)`; larger `p` carries no
/// claim and holds vacuously.
pub fn corollary_holds(p: f64, edge_count: usize) -> bool {
    let threshold = 1.0 / (2.0 * edge_count as f64);
    p > threshold || consensus_bound(p, edge_count) >= threshold - 1e-12
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Mc,
}

/// A consensus probability (exact or estimated) set against the bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub graph_id: String,
    pub n: usize,
    pub m: usize,
    pub p: f64,
    pub bound: f64,
    pub exact_or_estimate: f64,
    pub method: Method,
    pub satisfied: bool,
    /// The bound is `<= 0` and says nothing.
    pub vacuous: bool,
    /// Slack granted below the bound when deciding `satisfied`.
    pub tolerance: f64,
}

impl BoundReport {
    pub fn new(
        graph_id: impl Into<String>,
        g: &Graph,
        p: f64,
        value: f64,
        method: Method,
        tolerance: f64,
    ) -> Self {
        let bound = consensus_bound(p, g.edge_count());
        BoundReport {
            graph_id: graph_id.into(),
            n: g.n(),
            m: g.edge_count(),
            p,
            bound,
            exact_or_estimate: value,
            method,
            satisfied: value >= bound - tolerance,
            vacuous: bound <= 0.0,
            tolerance,
        }
    }
}

#[derive(Serialize)]
struct BoundCsvRow<'a> {
    graph_id: &'a str,
    n: usize,
    m: usize,
    p: f64,
    bound: f64,
    exact_or_estimate: f64,
    method: Method,
    satisfied: bool,
}

/// Writes reports as CSV with the columns
/// `graph_id,n,m,p,bound,exact_or_estimate,method,satisfied`.
pub fn write_bound_csv<W: std::io::Write>(out: W, reports: &[BoundReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(BoundCsvRow {
            graph_id: &r.graph_id,
            n: r.n,
            m: r.m,
            p: r.p,
            bound: r.bound,
            exact_or_estimate: r.exact_or_estimate,
            method: r.method,
            satisfied: r.satisfied,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// A path `a - b - c - d` with opinions `s, s, -s, -s` whose four vertices
/// all have degree at most 2. No vertex on it can ever flip.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BlockedPath {
    pub vertices: [usize; 4],
    pub polarity: i8,
}

impl BlockedPath {
    /// Checks every defining property against `(g, x)`.
    pub fn is_valid(&self, g: &Graph, x: &OpinionState) -> bool {
        let [a, b, c, d] = self.vertices;
        let distinct = a != b && a != c && a != d && b != c && b != d && c != d;
        let Some(s) = Opinion::from_sign(self.polarity) else {
            return false;
        };
        distinct
            && self.vertices.iter().all(|&v| v < g.n() && g.degree(v) <= 2)
            && g.is_adjacent(a, b)
            && g.is_adjacent(b, c)
            && g.is_adjacent(c, d)
            && x[a] == s
            && x[b] == s
            && x[c] == -s
            && x[d] == -s
    }
}

/// Every blocked path in `(g, x)`, both polarities, found by extending each
/// disagreeing edge `(b, c)` one step on either side.
pub fn find_blocked_paths(g: &Graph, x: &OpinionState) -> Vec<BlockedPath> {
    let low = |v: usize| g.degree(v) <= 2;
    let mut found = Vec::new();
    for b in (0..g.n()).filter(|&b| low(b)) {
        for &c in g.neighbors(b) {
            if x[c] == x[b] || !low(c) {
                continue;
            }
            for &a in g.neighbors(b) {
                if a == c || x[a] != x[b] || !low(a) {
                    continue;
                }
                for &d in g.neighbors(c) {
                    if d == b || x[d] != x[c] || !low(d) {
                        continue;
                    }
                    found.push(BlockedPath {
                        vertices: [a, b, c, d],
                        polarity: x[b].value(),
                    });
                }
            }
        }
    }
    found.sort_by_key(|bp| bp.vertices);
    found
}

/// The lexicographically smallest blocked path, if any.
pub fn find_blocked_path(g: &Graph, x: &OpinionState) -> Option<BlockedPath> {
    find_blocked_paths(g, x).into_iter().next()
}

/// Runs `steps` updates from `x` and reports whether the blocked vertices
/// kept their opinions throughout.
pub fn verify_frozen<R: Rng + ?Sized>(
    g: &Graph,
    x: &OpinionState,
    bp: &BlockedPath,
    rng: &mut R,
    steps: u64,
) -> bool {
    let Ok(mut sim) = Simulation::new(g, x.clone()) else {
        return false;
    };
    for _ in 0..steps {
        if sim.is_absorbing() {
            break;
        }
        let out = sim.step(rng);
        if out.flipped && bp.vertices.contains(&out.agent) {
            return false;
        }
    }
    bp.vertices.iter().all(|&v| sim.state()[v] == x[v])
}

/// Every vertex has at least as many agreeing as disagreeing neighbors.
pub fn validate_absorbed_state(g: &Graph, x: &OpinionState) -> bool {
    x.len() == g.n() && (0..g.n()).all(|i| !opinion_counts(g, x, i).is_unstable())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn st(s: &str) -> OpinionState {
        s.parse().unwrap()
    }

    #[test]
    fn bound_values() {
        assert_eq!(consensus_bound(0.0, 7), 1.0);
        assert_eq!(consensus_bound(0.5, 4), -1.0);
        for m in 1..20 {
            let p = 1.0 / (2.0 * m as f64);
            assert!((consensus_bound(p, m) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn corollary_examples() {
        assert!(corollary_holds(0.1, 5));
        assert!(corollary_holds(0.0, 9));
        assert!((consensus_bound(0.1, 3) - 0.46).abs() < 1e-12);
        assert!(corollary_holds(0.1, 3));
        assert!(corollary_holds(0.9, 3));
    }

    #[test]
    fn report_flags() {
        let c4 = Graph::cycle(4).unwrap();
        let r = BoundReport::new("cycle-4", &c4, 0.5, 0.75, Method::Exact, 1e-9);
        assert!(r.satisfied);
        assert!(r.vacuous);
        let r = BoundReport::new("cycle-4", &c4, 0.01, 0.5, Method::Exact, 1e-9);
        assert!(!r.satisfied);
        assert!(!r.vacuous);
    }

    #[test]
    fn csv_columns() {
        let c4 = Graph::cycle(4).unwrap();
        let mut buf = Vec::new();
        write_bound_csv(&mut buf, &[BoundReport::new("c4", &c4, 0.5, 0.75, Method::Exact, 0.0)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "graph_id,n,m,p,bound,exact_or_estimate,method,satisfied\nc4,4,4,0.5,-1.0,0.75,exact,true\n"
        );
    }

    #[test]
    fn blocked_path_examples() {
        let c4 = Graph::cycle(4).unwrap();
        let bp = find_blocked_path(&c4, &st("++--")).unwrap();
        assert_eq!(bp.vertices, [0, 1, 2, 3]);
        assert_eq!(bp.polarity, 1);
        assert!(bp.is_valid(&c4, &st("++--")));

        assert!(find_blocked_path(&Graph::cycle(6).unwrap(), &st("++++++")).is_none());

        let star = Graph::star(6).unwrap();
        for code in 0..64 {
            assert!(find_blocked_path(&star, &OpinionState::from_code(code, 6)).is_none());
        }

        let bp = find_blocked_path(&Graph::cycle(5).unwrap(), &st("--++-")).unwrap();
        assert_eq!(bp.polarity, -1);
    }

    #[test]
    fn frozen_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let c4 = Graph::cycle(4).unwrap();
        let x = st("++--");
        let bp = find_blocked_path(&c4, &x).unwrap();
        assert!(verify_frozen(&c4, &x, &bp, &mut rng, 100_000));

        let p6 = Graph::path(6).unwrap();
        let x = st("-++--+");
        let bp = BlockedPath {
            vertices: [1, 2, 3, 4],
            polarity: 1,
        };
        assert!(bp.is_valid(&p6, &x));
        assert!(verify_frozen(&p6, &x, &bp, &mut rng, 100_000));
    }

    #[test]
    fn absorbed_state_validation() {
        let c5 = Graph::cycle(5).unwrap();
        assert!(validate_absorbed_state(&c5, &st("+++++")));
        assert!(validate_absorbed_state(&c5, &st("++---")));
        assert!(!validate_absorbed_state(&Graph::cycle(4).unwrap(), &st("+-+-")));
    }
}
