//! Undirected simple connected graphs and the edge-list text format.
//!
//! Vertices are labeled `0..n`. Every constructor validates the invariants
//! the dynamics rely on: no self-loops, no duplicate edges, symmetric
//! adjacency and connectivity.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::GraphError;

/// An immutable undirected simple connected graph stored as sorted
/// adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from `n` and an edge list, rejecting anything that is
    /// not simple and connected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidSize("graph needs at least one vertex".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::Format(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(GraphError::Format(format!("self-loop at vertex {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (i, nbrs) in adjacency.iter_mut().enumerate() {
            nbrs.sort_unstable();
            if let Some(w) = nbrs.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (i.min(w[0]), i.max(w[0]));
                return Err(GraphError::Format(format!("duplicate edge ({a}, {b})")));
            }
        }
        let graph = Graph {
            adjacency,
            edge_count: edges.len(),
        };
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    /// The complete graph `K_n`.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize(format!("complete graph needs n >= 2, got {n}")));
        }
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Self::from_edges(n, &edges)
    }

    /// The cycle `C_n`; vertex `i` is adjacent to `i ± 1 mod n`.
    pub fn cycle(n: usize) -> Result<Self, GraphError> {
        if n < 3 {
            return Err(GraphError::InvalidSize(format!("cycle needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    /// The path `P_n` on vertices `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize(format!("path needs n >= 2, got {n}")));
        }
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        Self::from_edges(n, &edges)
    }

    /// The star `K_{1,n-1}` centered at vertex 0.
    pub fn star(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize(format!("star needs n >= 2, got {n}")));
        }
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Self::from_edges(n, &edges)
    }

    /// A random connected graph with `n - 1 + extra_edges` edges.
    ///
    /// A spanning tree is grown by attaching the vertices of a random
    /// permutation one at a time to a uniformly chosen earlier vertex, then
    /// `extra_edges` absent edges are added uniformly without replacement.
    /// The result depends only on `(n, extra_edges, seed)`.
    pub fn random_connected(n: usize, extra_edges: usize, seed: u64) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidSize("graph needs at least one vertex".into()));
        }
        let max_extra = n * (n - 1) / 2 - (n - 1);
        if extra_edges > max_extra {
            return Err(GraphError::InvalidSize(format!(
                "{extra_edges} extra edges requested but at most {max_extra} fit on {n} vertices"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);

        let mut present = vec![false; n * n];
        let mut edges = Vec::with_capacity(n - 1 + extra_edges);
        for k in 1..n {
            let parent = order[rng.gen_range(0..k)];
            let child = order[k];
            let (u, v) = (parent.min(child), parent.max(child));
            present[u * n + v] = true;
            edges.push((u, v));
        }
        let mut absent: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !present[u * n + v])
            .collect();
        let (chosen, _) = absent.partial_shuffle(&mut rng, extra_edges);
        edges.extend_from_slice(chosen);
        Self::from_edges(n, &edges)
    }

    /// Parses the edge-list format: a header line `n m` followed by `m`
    /// lines `u v`.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| GraphError::Format("empty edge list".into()))?;
        let [n, m] = parse_pair(header, 1)?;
        let mut edges = Vec::with_capacity(m);
        for (lineno, line) in lines {
            let [u, v] = parse_pair(line, lineno + 1)?;
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(GraphError::Format(format!(
                "header declares {m} edges but {} were listed",
                edges.len()
            )));
        }
        Self::from_edges(n, &edges)
    }

    /// Serializes to the edge-list format with edges `u < v` sorted
    /// lexicographically.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n(), self.edge_count);
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Sorted neighbors of `i`; never contains `i` itself.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.n();
        self.edge_count == n * (n - 1) / 2
    }

    /// Trees are the connected graphs with exactly `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.edge_count + 1 == self.n()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, nbrs)| {
            nbrs.iter().copied().filter(move |&v| v > u).map(move |v| (u, v))
        })
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n()
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<[usize; 2], GraphError> {
    let mut fields = line.split_whitespace().map(|tok| {
        tok.parse::<usize>()
            .map_err(|_| GraphError::Format(format!("line {lineno}: bad integer {tok:?}")))
    });
    let a = fields.next();
    let b = fields.next();
    match (a, b, fields.next()) {
        (Some(a), Some(b), None) => Ok([a?, b?]),
        _ => Err(GraphError::Format(format!(
            "line {lineno}: expected two integers, got {line:?}"
        ))),
    }
}

/// Named graph families, as used by the command line and experiment configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Complete,
    Cycle,
    Path,
    Star,
    Random,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Complete,
        Family::Cycle,
        Family::Path,
        Family::Star,
        Family::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Complete => "complete",
            Family::Cycle => "cycle",
            Family::Path => "path",
            Family::Star => "star",
            Family::Random => "random",
        }
    }

    /// Builds the member of this family on `n` vertices. `extra` and `seed`
    /// only matter for [`Family::Random`].
    pub fn build(self, n: usize, extra: usize, seed: u64) -> Result<Graph, GraphError> {
        match self {
            Family::Complete => Graph::complete(n),
            Family::Cycle => Graph::cycle(n),
            Family::Path => Graph::path(n),
            Family::Star => Graph::star(n),
            Family::Random => Graph::random_connected(n, extra, seed),
        }
    }

    /// Smallest `n` the family accepts.
    pub fn min_n(self) -> usize {
        match self {
            Family::Cycle => 3,
            Family::Random => 1,
            _ => 2,
        }
    }
}

impl std::str::FromStr for Family {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| GraphError::UnknownFamily(s.to_string()))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
