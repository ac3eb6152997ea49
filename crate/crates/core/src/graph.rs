use crate::error::{Error, Result};

/// Simple undirected graph on dense node indices `0..n_nodes`.
///
/// Adjacency is stored as a packed strict upper triangle, so symmetry and the
/// absence of self-loops hold by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    bits: Vec<bool>,
}

impl Graph {
    pub fn empty(n_nodes: usize) -> Self {
        let len = n_nodes * n_nodes.saturating_sub(1) / 2;
        Graph {
            n_nodes,
            bits: vec![false; len],
        }
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.n_nodes);
        // Offset of row i in the packed strict upper triangle.
        i * self.n_nodes - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.n_nodes || j >= self.n_nodes {
            return Err(Error::Parameter(format!(
                "node pair ({i}, {j}) out of range for {} nodes",
                self.n_nodes
            )));
        }
        if i == j {
            return Err(Error::Parameter(format!("self-loop at node {i}")));
        }
        Ok(())
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.pair_index(a, b);
        self.bits[idx] = true;
        Ok(())
    }

    pub fn remove_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.pair_index(a, b);
        self.bits[idx] = false;
        Ok(())
    }

    /// Whether `(i, j)` is an edge. Self-pairs and out-of-range pairs are not edges.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j || i >= self.n_nodes || j >= self.n_nodes {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.bits[self.pair_index(a, b)]
    }

    pub fn degree(&self, v: usize) -> usize {
        (0..self.n_nodes).filter(|&u| self.has_edge(v, u)).count()
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_nodes).filter(move |&u| self.has_edge(v, u))
    }

    /// All edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_nodes {
            for j in (i + 1)..self.n_nodes {
                if self.bits[self.pair_index(i, j)] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Number of neighbors of `v` inside `set`.
    pub fn degree_into(&self, v: usize, set: &[usize]) -> usize {
        set.iter().filter(|&&u| self.has_edge(v, u)).count()
    }

    /// Whether `nodes` induces a complete subgraph.
    pub fn is_clique(&self, nodes: &[usize]) -> bool {
        for (a, &i) in nodes.iter().enumerate() {
            for &j in &nodes[a + 1..] {
                if !self.has_edge(i, j) {
                    return false;
                }
            }
        }
        true
    }
}
