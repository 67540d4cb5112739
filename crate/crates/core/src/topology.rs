//! Undirected simple graphs with precomputed one- and two-hop neighborhoods.
//!
//! Processes are identified by indices `0..n`. Graphs are built from edge
//! lists (deduplicated, order-insensitive) and reject self-loops and
//! out-of-range endpoints. Deterministic generators cover the standard
//! families used by the verifier and the simulator sweeps; every randomized
//! generator is seeded and reproducible.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds;

/// Index of a process in a graph (`0..n`).
pub type ProcId = usize;

/// Errors from graph construction, parsing, and generation.
#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("graph must have at least one process")]
    Empty,
    #[error("edge ({0}, {1}) has an endpoint out of range for {2} processes")]
    EndpointOutOfRange(usize, usize, usize),
    #[error("self-loop at process {0}")]
    SelfLoop(usize),
    #[error("bad graph descriptor `{descriptor}`: {reason}")]
    BadDescriptor { descriptor: String, reason: String },
    #[error("gnp(n={n}, p={p}) found no connected sample in {attempts} attempts")]
    ConnectivityRetriesExhausted { n: usize, p: f64, attempts: usize },
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("graph JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// JSON wire form of a graph: `{"n": 3, "edges": [[0,1],[1,2]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct GraphJson {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// An undirected simple graph over processes `0..n`.
///
/// Adjacency lists are sorted ascending, so "lowest-id neighbor" choices
/// made elsewhere in the crate are deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<ProcId>>,
    two_hop: Vec<Vec<ProcId>>,
    edges: Vec<(ProcId, ProcId)>,
}

impl Graph {
    /// Builds a graph from an edge list. Duplicate edges (in either
    /// orientation) collapse to one; self-loops and out-of-range endpoints
    /// are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        let mut canonical: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(TopologyError::EndpointOutOfRange(a, b, n));
            }
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        canonical.dedup();

        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &canonical {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }

        // Exact distance-2 sets: reachable through a neighbor, not adjacent,
        // not the process itself.
        let mut two_hop = vec![Vec::new(); n];
        for i in 0..n {
            let mut seen = vec![false; n];
            seen[i] = true;
            for &j in &adj[i] {
                seen[j] = true;
            }
            let mut out = Vec::new();
            for &j in &adj[i] {
                for &k in &adj[j] {
                    if !seen[k] {
                        seen[k] = true;
                        out.push(k);
                    }
                }
            }
            out.sort_unstable();
            two_hop[i] = out;
        }

        Ok(Graph { n, adj, two_hop, edges: canonical })
    }

    /// Number of processes.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted open one-hop neighborhood of `i`.
    pub fn neighbors(&self, i: ProcId) -> &[ProcId] {
        &self.adj[i]
    }

    /// Degree of `i`.
    pub fn degree(&self, i: ProcId) -> usize {
        self.adj[i].len()
    }

    /// Sorted set of processes at distance exactly two from `i`.
    pub fn two_hop(&self, i: ProcId) -> &[ProcId] {
        &self.two_hop[i]
    }

    /// Sorted set of processes at distance one or two from `i`.
    pub fn within_two(&self, i: ProcId) -> Vec<ProcId> {
        let mut out: Vec<ProcId> = self.adj[i].iter().chain(self.two_hop[i].iter()).copied().collect();
        out.sort_unstable();
        out
    }

    /// Canonical `(low, high)` edge list, sorted.
    pub fn edges(&self) -> &[(ProcId, ProcId)] {
        &self.edges
    }

    /// Whether `{a, b}` is an edge.
    pub fn has_edge(&self, a: ProcId, b: ProcId) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// BFS distance between `a` and `b`; `None` if disconnected.
    pub fn distance(&self, a: ProcId, b: ProcId) -> Option<usize> {
        if a == b {
            return Some(0);
        }
        let mut dist = vec![usize::MAX; self.n];
        dist[a] = 0;
        let mut queue = std::collections::VecDeque::from([a]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    if w == b {
                        return Some(dist[w]);
                    }
                    queue.push_back(w);
                }
            }
        }
        None
    }

    /// Whether the graph is connected (single process counts as connected).
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        seen[0] = true;
        let mut queue = std::collections::VecDeque::from([0]);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }

    /// Serializes to the `{"n", "edges"}` JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&GraphJson { n: self.n, edges: self.edges.clone() })
            .expect("graph serialization cannot fail")
    }

    /// Parses the `{"n", "edges"}` JSON form.
    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        let raw: GraphJson = serde_json::from_str(text)?;
        Graph::from_edges(raw.n, &raw.edges)
    }
}

/// Path 0-1-…-(n-1).
pub fn path(n: usize) -> Result<Graph, TopologyError> {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n, &edges)
}

/// Cycle on `n >= 3` processes.
pub fn cycle(n: usize) -> Result<Graph, TopologyError> {
    if n < 3 {
        return Err(TopologyError::BadDescriptor {
            descriptor: format!("cycle:{n}"),
            reason: "cycle needs at least 3 processes".into(),
        });
    }
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    Graph::from_edges(n, &edges)
}

/// Star with center 0 and leaves `1..n`.
pub fn star(n: usize) -> Result<Graph, TopologyError> {
    if n < 2 {
        return Err(TopologyError::BadDescriptor {
            descriptor: format!("star:{n}"),
            reason: "star needs at least 2 processes".into(),
        });
    }
    let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
    Graph::from_edges(n, &edges)
}

/// Complete graph on `n` processes.
pub fn complete(n: usize) -> Result<Graph, TopologyError> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            edges.push((i, j));
        }
    }
    Graph::from_edges(n, &edges)
}

/// Uniform random attachment tree: process `i >= 1` links to a uniformly
/// chosen earlier process. Always connected; deterministic per seed.
pub fn random_tree(n: usize, seed: u64) -> Result<Graph, TopologyError> {
    let mut rng = seeds::rng_for(seed, 0x0072_6565); // "tree" stream
    let edges: Vec<_> = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
    Graph::from_edges(n, &edges)
}

/// Erdős–Rényi G(n, p): each pair is an edge independently with
/// probability `p`. Deterministic per seed; may be disconnected.
pub fn gnp(n: usize, p: f64, seed: u64) -> Result<Graph, TopologyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(TopologyError::BadProbability(p));
    }
    let mut rng = seeds::rng_for(seed, 0x0067_6e70); // "gnp" stream
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Like [`gnp`], retrying with derived seeds until the sample is connected.
pub fn gnp_connected(n: usize, p: f64, seed: u64) -> Result<Graph, TopologyError> {
    const MAX_ATTEMPTS: usize = 10_000;
    for attempt in 0..MAX_ATTEMPTS {
        let g = gnp(n, p, seeds::mix(seed, attempt as u64))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(TopologyError::ConnectivityRetriesExhausted { n, p, attempts: MAX_ATTEMPTS })
}

/// Every connected graph on at most four processes, up to isomorphism,
/// with short names. Used as the exhaustive-verification corpus.
pub fn small_connected_corpus() -> Vec<(&'static str, Graph)> {
    let mk = |n, edges: &[(usize, usize)]| Graph::from_edges(n, edges).expect("corpus graph");
    vec![
        ("K1", mk(1, &[])),
        ("K2", mk(2, &[(0, 1)])),
        ("P3", mk(3, &[(0, 1), (1, 2)])),
        ("K3", mk(3, &[(0, 1), (1, 2), (0, 2)])),
        ("P4", mk(4, &[(0, 1), (1, 2), (2, 3)])),
        ("star4", mk(4, &[(0, 1), (0, 2), (0, 3)])),
        ("C4", mk(4, &[(0, 1), (1, 2), (2, 3), (0, 3)])),
        ("paw", mk(4, &[(0, 1), (1, 2), (0, 2), (0, 3)])),
        ("diamond", mk(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])),
        ("K4", mk(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])),
    ]
}

/// A parsed generator descriptor such as `cycle:8` or `gnp:20:0.2:seed=7`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphDescriptor {
    Path(usize),
    Cycle(usize),
    Star(usize),
    Complete(usize),
    Tree { n: usize, seed: u64 },
    Gnp { n: usize, p: f64, seed: u64, connected: bool },
}

impl GraphDescriptor {
    /// Realizes the descriptor as a graph.
    pub fn generate(&self) -> Result<Graph, TopologyError> {
        match *self {
            GraphDescriptor::Path(n) => path(n),
            GraphDescriptor::Cycle(n) => cycle(n),
            GraphDescriptor::Star(n) => star(n),
            GraphDescriptor::Complete(n) => complete(n),
            GraphDescriptor::Tree { n, seed } => random_tree(n, seed),
            GraphDescriptor::Gnp { n, p, seed, connected } => {
                if connected {
                    gnp_connected(n, p, seed)
                } else {
                    gnp(n, p, seed)
                }
            }
        }
    }
}

impl fmt::Display for GraphDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphDescriptor::Path(n) => write!(f, "path:{n}"),
            GraphDescriptor::Cycle(n) => write!(f, "cycle:{n}"),
            GraphDescriptor::Star(n) => write!(f, "star:{n}"),
            GraphDescriptor::Complete(n) => write!(f, "complete:{n}"),
            GraphDescriptor::Tree { n, seed } => write!(f, "tree:{n}:seed={seed}"),
            GraphDescriptor::Gnp { n, p, seed, connected } => {
                write!(f, "gnp:{n}:{p}:seed={seed}")?;
                if connected {
                    write!(f, ":connected")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for GraphDescriptor {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| TopologyError::BadDescriptor {
            descriptor: s.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = s.split(':').collect();
        let size = |text: &str| text.parse::<usize>().map_err(|_| bad("size must be an integer"));
        let seed_of = |text: &str| -> Result<u64, TopologyError> {
            text.strip_prefix("seed=")
                .ok_or_else(|| bad("expected seed=<integer>"))?
                .parse::<u64>()
                .map_err(|_| bad("seed must be an integer"))
        };
        match parts.as_slice() {
            ["path", n] => Ok(GraphDescriptor::Path(size(n)?)),
            ["cycle", n] => Ok(GraphDescriptor::Cycle(size(n)?)),
            ["star", n] => Ok(GraphDescriptor::Star(size(n)?)),
            ["complete", n] => Ok(GraphDescriptor::Complete(size(n)?)),
            ["tree", n, seed] => Ok(GraphDescriptor::Tree { n: size(n)?, seed: seed_of(seed)? }),
            ["gnp", n, p, seed] | ["gnp", n, p, seed, "connected"] => {
                let p: f64 = p.parse().map_err(|_| bad("p must be a float"))?;
                Ok(GraphDescriptor::Gnp {
                    n: size(n)?,
                    p,
                    seed: seed_of(seed)?,
                    connected: parts.len() == 5,
                })
            }
            _ => Err(bad("unknown generator; expected path/cycle/star/complete/tree/gnp")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_and_dedups_edges() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.degree(1), 2);
    }

    #[test]
    fn rejects_self_loop_and_out_of_range() {
        assert!(matches!(Graph::from_edges(2, &[(0, 0)]), Err(TopologyError::SelfLoop(0))));
        assert!(matches!(
            Graph::from_edges(2, &[(0, 5)]),
            Err(TopologyError::EndpointOutOfRange(0, 5, 2))
        ));
        assert!(matches!(Graph::from_edges(0, &[]), Err(TopologyError::Empty)));
    }

    #[test]
    fn two_hop_on_small_graphs() {
        let p3 = path(3).unwrap();
        assert_eq!(p3.two_hop(0), &[2]);
        let k3 = complete(3).unwrap();
        assert!(k3.two_hop(0).is_empty());
        let c5 = cycle(5).unwrap();
        assert_eq!(c5.two_hop(0), &[2, 3]);
    }

    #[test]
    fn within_two_merges_both_rings() {
        let p3 = path(3).unwrap();
        assert_eq!(p3.within_two(1), vec![0, 2]);
        let c5 = cycle(5).unwrap();
        assert_eq!(c5.within_two(0), vec![1, 2, 3, 4]);
        let k1 = complete(1).unwrap();
        assert!(k1.within_two(0).is_empty());
    }

    #[test]
    fn generator_shapes() {
        assert_eq!(cycle(4).unwrap().edges().len(), 4);
        assert_eq!(complete(5).unwrap().edges().len(), 10);
        assert_eq!(star(4).unwrap().degree(0), 3);
        assert_eq!(path(1).unwrap().n(), 1);
        let t = random_tree(10, 3).unwrap();
        assert_eq!(t.edges().len(), 9);
        assert!(t.is_connected());
    }

    #[test]
    fn gnp_is_deterministic_per_seed() {
        let a = gnp(20, 0.2, 7).unwrap();
        let b = gnp(20, 0.2, 7).unwrap();
        assert_eq!(a, b);
        let c = gnp(20, 0.2, 8).unwrap();
        assert_ne!(a, c, "different seed should virtually always differ");
    }

    #[test]
    fn gnp_connected_retries_until_connected() {
        let g = gnp_connected(12, 0.15, 5).unwrap();
        assert!(g.is_connected());
    }

    #[test]
    fn distance_and_connectivity() {
        let p4 = path(4).unwrap();
        assert_eq!(p4.distance(0, 3), Some(3));
        assert_eq!(p4.distance(2, 2), Some(0));
        let two = Graph::from_edges(2, &[]).unwrap();
        assert_eq!(two.distance(0, 1), None);
        assert!(!two.is_connected());
    }

    #[test]
    fn json_round_trip() {
        let g = cycle(4).unwrap();
        let text = g.to_json();
        assert_eq!(text, r#"{"n":4,"edges":[[0,1],[0,3],[1,2],[2,3]]}"#);
        assert_eq!(Graph::from_json(&text).unwrap(), g);
    }

    #[test]
    fn descriptors_parse_and_display() {
        let d: GraphDescriptor = "gnp:20:0.2:seed=7".parse().unwrap();
        assert_eq!(d, GraphDescriptor::Gnp { n: 20, p: 0.2, seed: 7, connected: false });
        assert_eq!(d.to_string(), "gnp:20:0.2:seed=7");
        let d: GraphDescriptor = "cycle:8".parse().unwrap();
        assert_eq!(d.generate().unwrap().n(), 8);
        assert!("pentagon:5".parse::<GraphDescriptor>().is_err());
        assert!("gnp:20:two:seed=7".parse::<GraphDescriptor>().is_err());
    }

    #[test]
    fn corpus_lists_all_small_connected_graphs() {
        let corpus = small_connected_corpus();
        assert_eq!(corpus.len(), 10);
        assert!(corpus.iter().all(|(_, g)| g.is_connected() && g.n() <= 4));
        // 6 distinct connected graphs on exactly 4 processes.
        assert_eq!(corpus.iter().filter(|(_, g)| g.n() == 4).count(), 6);
    }
}
