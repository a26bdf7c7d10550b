//! Weighted communication graphs, Laplacian construction, connectivity and
//! spanning-tree queries, and the leader/follower partition.
//!
//! Orientation convention: `weight[i][j] = a_ij > 0` means agent `i` receives
//! agent `j`'s state (information flows `j -> i`), matching the consensus
//! law's sum over `a_ij (p_j - p_i)`. Agent indices are 0-based here; config
//! files speak 1-based and convert at the boundary.

use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GraphError {
    #[error("weight matrix must be square, got {rows} rows of width {cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("diagonal entry ({i},{i}) must be zero, got {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("edge weight ({i},{j}) must be non-negative, got {value}")]
    NegativeWeight { i: usize, j: usize, value: f64 },
    #[error("laplacian row {row} sums to {sum}, expected zero")]
    BadLaplacianRow { row: usize, sum: f64 },
    #[error("laplacian entry ({i},{j}) must be non-positive off the diagonal, got {value}")]
    BadLaplacianEntry { i: usize, j: usize, value: f64 },
    #[error("agent index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("connectivity is defined for undirected graphs only")]
    WrongGraphKind,
    #[error("no spanning tree: agent {unreachable} is unreachable from root {root}")]
    NoSpanningTree { root: usize, unreachable: usize },
}

/// Weighted digraph over the agents with an optional leader set.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    n: usize,
    weights: Vec<Vec<f64>>,
    directed: bool,
    leaders: BTreeSet<usize>,
}

/// Directed spanning tree: every non-root agent has exactly one parent, and
/// each parent edge carries information parent -> child in the source graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub root: usize,
    /// `parent[i]` is `None` exactly for the root.
    pub parent: Vec<Option<usize>>,
}

impl SpanningTree {
    /// Edges as (child, parent) pairs in ascending child order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (c, p)))
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }
}

impl CommGraph {
    /// Build from an adjacency (weight) matrix. The graph is undirected when
    /// the matrix is symmetric.
    pub fn from_adjacency(weights: Vec<Vec<f64>>, leaders: &[usize]) -> Result<Self, GraphError> {
        let n = weights.len();
        for (i, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::NonSquare { rows: n, cols: row.len() });
            }
            if row[i] != 0.0 {
                return Err(GraphError::NonzeroDiagonal { i, value: row[i] });
            }
            for (j, &w) in row.iter().enumerate() {
                if w < 0.0 {
                    return Err(GraphError::NegativeWeight { i, j, value: w });
                }
            }
        }
        let directed = (0..n).any(|i| (0..n).any(|j| weights[i][j] != weights[j][i]));
        let mut set = BTreeSet::new();
        for &l in leaders {
            if l >= n {
                return Err(GraphError::IndexOutOfRange { index: l, n });
            }
            set.insert(l);
        }
        Ok(CommGraph { n, weights, directed, leaders: set })
    }

    /// Build from a Laplacian matrix: off-diagonals must be non-positive and
    /// every row must sum to zero (within rounding).
    pub fn from_laplacian(lap: Vec<Vec<f64>>, leaders: &[usize]) -> Result<Self, GraphError> {
        let n = lap.len();
        for (i, row) in lap.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::NonSquare { rows: n, cols: row.len() });
            }
            for (j, &v) in row.iter().enumerate() {
                if i != j && v > 0.0 {
                    return Err(GraphError::BadLaplacianEntry { i, j, value: v });
                }
            }
            let sum: f64 = row.iter().sum();
            if sum.abs() > 1e-9 {
                return Err(GraphError::BadLaplacianRow { row: i, sum });
            }
        }
        let weights: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { -lap[i][j] }).collect())
            .collect();
        Self::from_adjacency(weights, leaders)
    }

    /// Unit-weight undirected graph from an edge list, 0-based.
    pub fn undirected_unit(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut w = vec![vec![0.0; n]; n];
        for &(a, b) in edges {
            if a >= n {
                return Err(GraphError::IndexOutOfRange { index: a, n });
            }
            if b >= n {
                return Err(GraphError::IndexOutOfRange { index: b, n });
            }
            w[a][b] = 1.0;
            w[b][a] = 1.0;
        }
        Self::from_adjacency(w, &[])
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn leaders(&self) -> &BTreeSet<usize> {
        &self.leaders
    }

    pub fn is_leader(&self, i: usize) -> bool {
        self.leaders.contains(&i)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i][j]
    }

    pub fn with_leaders(mut self, leaders: &[usize]) -> Result<Self, GraphError> {
        self.leaders.clear();
        for &l in leaders {
            if l >= self.n {
                return Err(GraphError::IndexOutOfRange { index: l, n: self.n });
            }
            self.leaders.insert(l);
        }
        Ok(self)
    }

    /// Graph Laplacian: `l_ij = -a_ij` off the diagonal and `l_ii` the
    /// ascending-order sum of row `i`'s off-diagonal weights, so each row sum
    /// cancels exactly in floating point.
    pub fn laplacian(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| {
                let degree: f64 = (0..self.n).filter(|&j| j != i).map(|j| self.weights[i][j]).sum();
                (0..self.n)
                    .map(|j| if i == j { degree } else { -self.weights[i][j] })
                    .collect()
            })
            .collect()
    }

    /// In-neighbors of `i`: every `(j, a_ij)` with positive weight.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        self.weights[i]
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > 0.0)
            .map(|(j, &w)| (j, w))
            .collect()
    }

    /// Whether the undirected graph is a single connected component.
    pub fn is_connected(&self) -> Result<bool, GraphError> {
        if self.directed {
            return Err(GraphError::WrongGraphKind);
        }
        if self.n == 0 {
            return Ok(true);
        }
        let reached = self.reachable_from(0);
        Ok(reached.iter().all(|&r| r))
    }

    /// Agents reachable from `start` following information flow outward
    /// (edges `u -> i` where `a_iu > 0`).
    #[allow(clippy::needless_range_loop)]
    fn reachable_from(&self, start: usize) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for i in 0..self.n {
                if !seen[i] && self.weights[i][u] > 0.0 {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        seen
    }

    /// Breadth-first directed spanning tree rooted at `root`, information
    /// flowing outward from the root. Ties break by ascending agent index,
    /// which makes the extraction deterministic.
    #[allow(clippy::needless_range_loop)]
    pub fn extract_spanning_tree(&self, root: usize) -> Result<SpanningTree, GraphError> {
        if root >= self.n {
            return Err(GraphError::IndexOutOfRange { index: root, n: self.n });
        }
        let mut parent = vec![None; self.n];
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for i in 0..self.n {
                if !seen[i] && self.weights[i][u] > 0.0 {
                    seen[i] = true;
                    parent[i] = Some(u);
                    queue.push_back(i);
                }
            }
        }
        if let Some(unreachable) = seen.iter().position(|&r| !r) {
            return Err(GraphError::NoSpanningTree { root, unreachable });
        }
        Ok(SpanningTree { root, parent })
    }
}
