//! Undirected graphs over a fixed node set, plus the connectivity and
//! composition queries the rest of the crate is built on.
//!
//! Nodes are indexed `0..n` internally, with the source (base station)
//! fixed at index [`SOURCE`]. File formats and traces use 1-based ids;
//! the conversion happens only at those boundaries.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

/// Index of the source node (the base station).
pub const SOURCE: usize = 0;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("node index {index} out of range for a graph of {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("self-loop at node {0} is not allowed")]
    SelfLoop(usize),
    #[error("graph set must contain at least one graph")]
    EmptyGraphSet,
    #[error("graph set members must share a node count: expected {expected}, found {found}")]
    MixedNodeCounts { expected: usize, found: usize },
    #[error("edge list parse error on line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Immutable undirected graph. Edges are stored once in canonical
/// `(min, max)` order; adjacency lists are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph on `n` nodes from an edge iterator. Duplicate and
    /// mirrored pairs collapse to a single edge.
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            for idx in [a, b] {
                if idx >= n {
                    return Err(GraphError::IndexOutOfRange { index: idx, n });
                }
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &set {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { n, adj, edges: set })
    }

    /// Graph on `n` nodes with no edges.
    pub fn edgeless(n: usize) -> Result<Self, GraphError> {
        Self::new(n, std::iter::empty())
    }

    /// Unit-disk graph: nodes `i` and `j` share an edge iff the Euclidean
    /// distance between their positions is strictly less than `range`.
    pub fn random_geometric(positions: &[[f64; 2]], range: f64) -> Result<Self, GraphError> {
        assert!(range > 0.0, "communication range must be positive");
        let n = positions.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = positions[i][0] - positions[j][0];
                let dy = positions[i][1] - positions[j][1];
                if (dx * dx + dy * dy).sqrt() < range {
                    edges.push((i, j));
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of node `i`, sorted ascending. Panics if `i >= n`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Edges in canonical `(min, max)` order, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Per-node reachability from the source: entry `i` is true iff a path
    /// exists from node `i` to [`SOURCE`]. Entry `SOURCE` is always true.
    pub fn connected_to_source(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        seen[SOURCE] = true;
        queue.push_back(SOURCE);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Connected-component labels: each node is labeled with the smallest
    /// node index in its component, so the source component is labeled 0.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.n];
        for start in 0..self.n {
            if label[start] != usize::MAX {
                continue;
            }
            let mut queue = std::collections::VecDeque::new();
            label[start] = start;
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = start;
                        queue.push_back(v);
                    }
                }
            }
        }
        label
    }

    /// Copy of the graph with every edge incident to the given nodes removed.
    /// The node set itself is unchanged; a removed node simply becomes
    /// isolated (degree zero).
    pub fn without_incident_edges(&self, nodes: &BTreeSet<usize>) -> Self {
        let edges = self
            .edges
            .iter()
            .copied()
            .filter(|(a, b)| !nodes.contains(a) && !nodes.contains(b));
        Self::new(self.n, edges).expect("edge subset of a valid graph is valid")
    }

    /// Dense adjacency matrix with entries in {0, 1}.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Edge-list text format: first line `n=<count>`, then one `i j` pair
    /// per line with 1-based ids and `i < j`, ascending.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n={}", self.n).unwrap();
        for &(a, b) in &self.edges {
            writeln!(out, "{} {}", a + 1, b + 1).unwrap();
        }
        out
    }

    /// Parses the edge-list text format produced by [`Graph::to_edge_list`].
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let n: usize = header
            .strip_prefix("n=")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| GraphError::Parse {
                line: line_no,
                reason: format!("expected `n=<count>`, found `{header}`"),
            })?;
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize, GraphError> {
                let tok = tok.ok_or_else(|| GraphError::Parse {
                    line: line_no,
                    reason: "expected two node ids".into(),
                })?;
                let id: usize = tok.parse().map_err(|_| GraphError::Parse {
                    line: line_no,
                    reason: format!("invalid node id `{tok}`"),
                })?;
                if id == 0 {
                    return Err(GraphError::Parse {
                        line: line_no,
                        reason: "node ids are 1-based".into(),
                    });
                }
                Ok(id - 1)
            };
            let a = parse(parts.next())?;
            let b = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(GraphError::Parse {
                    line: line_no,
                    reason: "expected exactly two node ids".into(),
                });
            }
            edges.push((a, b));
        }
        Self::new(n, edges)
    }
}

/// Ordered collection of graphs over the same node set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSet {
    graphs: Vec<Graph>,
}

impl GraphSet {
    pub fn new(graphs: Vec<Graph>) -> Result<Self, GraphError> {
        let first = graphs.first().ok_or(GraphError::EmptyGraphSet)?;
        let n = first.n();
        for g in &graphs {
            if g.n() != n {
                return Err(GraphError::MixedNodeCounts {
                    expected: n,
                    found: g.n(),
                });
            }
        }
        Ok(Self { graphs })
    }

    pub fn n(&self) -> usize {
        self.graphs[0].n()
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, i: usize) -> &Graph {
        &self.graphs[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Graph> {
        self.graphs.iter()
    }

    /// Graph whose edge set is the union of all member edge sets.
    pub fn union_graph(&self) -> Graph {
        let edges = self.graphs.iter().flat_map(|g| g.edges());
        Graph::new(self.n(), edges).expect("union of valid graphs is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_pair() -> GraphSet {
        // Four mobile nodes; neither graph is connected but their union is.
        let g1 = Graph::new(4, [(0, 1), (0, 2)]).unwrap();
        let g2 = Graph::new(4, [(1, 3), (2, 3)]).unwrap();
        GraphSet::new(vec![g1, g2]).unwrap()
    }

    #[test]
    fn neighbors_basics() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.degree(0), 1);

        let empty = Graph::edgeless(4).unwrap();
        assert!(empty.neighbors(2).is_empty());

        let g1 = fig_pair().get(0).clone();
        assert_eq!(g1.neighbors(0), &[1, 2]);
    }

    #[test]
    fn rejects_bad_edges() {
        assert_eq!(
            Graph::new(3, [(1, 1)]).unwrap_err(),
            GraphError::SelfLoop(1)
        );
        assert_eq!(
            Graph::new(3, [(0, 3)]).unwrap_err(),
            GraphError::IndexOutOfRange { index: 3, n: 3 }
        );
        assert_eq!(Graph::new(0, []).unwrap_err(), GraphError::Empty);
    }

    #[test]
    fn connected_to_source_cases() {
        let edgeless = Graph::edgeless(3).unwrap();
        assert_eq!(edgeless.connected_to_source(), vec![true, false, false]);

        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(path.connected_to_source(), vec![true, true, true]);

        // Second graph of the four-node pair: only the source reaches itself.
        let g2 = fig_pair().get(1).clone();
        assert_eq!(
            g2.connected_to_source(),
            vec![true, false, false, false]
        );
    }

    #[test]
    fn union_graph_cases() {
        let single = GraphSet::new(vec![Graph::new(3, [(0, 2)]).unwrap()]).unwrap();
        assert_eq!(single.union_graph(), *single.get(0));

        let union = fig_pair().union_graph();
        assert!(union.connected_to_source().iter().all(|&c| c));
        assert_eq!(union.edge_count(), 4);

        let a = Graph::new(3, [(0, 1)]).unwrap();
        let b = Graph::new(3, [(1, 2)]).unwrap();
        let path = GraphSet::new(vec![a, b]).unwrap().union_graph();
        assert_eq!(path, Graph::new(3, [(0, 1), (1, 2)]).unwrap());
    }

    #[test]
    fn geometric_edge_predicate_is_strict() {
        let g = Graph::random_geometric(&[[0.0, 0.0], [0.10, 0.0]], 0.11).unwrap();
        assert!(g.contains_edge(0, 1));

        let g = Graph::random_geometric(&[[0.0, 0.0], [0.11, 0.0]], 0.11).unwrap();
        assert!(!g.contains_edge(0, 1));

        let g = Graph::random_geometric(&[[0.3, 0.7]], 0.11).unwrap();
        assert_eq!(g.n(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn component_labels_use_smallest_member()
    {
        let g = Graph::new(5, [(0, 2), (1, 3)]).unwrap();
        assert_eq!(g.component_labels(), vec![0, 1, 0, 1, 4]);
    }

    #[test]
    fn without_incident_edges_isolates_nodes() {
        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let cut = path.without_incident_edges(&BTreeSet::from([1]));
        assert_eq!(cut.edge_count(), 0);
        assert_eq!(cut.n(), 3);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::new(4, [(2, 3), (0, 1), (0, 2)]).unwrap();
        let text = g.to_edge_list();
        assert_eq!(text, "n=4\n1 2\n1 3\n3 4\n");
        assert_eq!(Graph::from_edge_list(&text).unwrap(), g);
    }

    #[test]
    fn edge_list_rejects_garbage() {
        assert!(matches!(
            Graph::from_edge_list("n=x\n"),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("n=3\n1 2 3\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("n=3\n0 2\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn graph_set_validation() {
        assert_eq!(
            GraphSet::new(vec![]).unwrap_err(),
            GraphError::EmptyGraphSet
        );
        let a = Graph::edgeless(3).unwrap();
        let b = Graph::edgeless(4).unwrap();
        assert_eq!(
            GraphSet::new(vec![a, b]).unwrap_err(),
            GraphError::MixedNodeCounts {
                expected: 3,
                found: 4
            }
        );
    }
}
