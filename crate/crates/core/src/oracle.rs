//! Exhaustive solver for the maximum node k-disjoint-clique problem on small
//! graphs, used as ground truth in tests and experiments.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Default node cap for the exhaustive search.
pub const DEFAULT_NODE_LIMIT: usize = 16;

/// Result of the exhaustive search.
#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    /// A maximizing collection of at most `k` disjoint cliques (sorted).
    pub best_cliques: Vec<Vec<usize>>,
    /// Number of nodes covered by `best_cliques`.
    pub best_value: usize,
    /// Whether exactly one optimal collection exists up to order.
    pub unique: bool,
    /// Number of candidate configurations evaluated.
    pub explored: u64,
}

struct Search<'a> {
    graph: &'a Graph,
    k: usize,
    best_value: usize,
    best: Vec<Vec<usize>>,
    // Saturates at 2; only whether more than one optimum exists matters.
    optimal_count: u32,
    explored: u64,
}

impl Search<'_> {
    fn finish(&mut self, covered: usize, chosen: &[Vec<usize>]) {
        self.explored += 1;
        if covered > self.best_value {
            self.best_value = covered;
            self.best = chosen.to_vec();
            self.optimal_count = 1;
        } else if covered == self.best_value && self.best_value > 0 {
            // A different configuration attaining the same value; the
            // branching scheme visits every configuration exactly once, so
            // this cannot be a duplicate of `self.best`.
            self.optimal_count = self.optimal_count.saturating_add(1);
        }
    }

    /// Branch on the smallest available node: either it is uncovered, or it
    /// belongs to the next clique, enumerated over all cliques through it.
    fn recurse(&mut self, avail: &[usize], covered: usize, chosen: &mut Vec<Vec<usize>>) {
        let upper = covered + avail.len();
        if upper < self.best_value {
            return;
        }
        if upper == self.best_value && self.optimal_count >= 2 {
            // Only ties can follow; non-uniqueness is already established.
            return;
        }
        if avail.is_empty() || chosen.len() == self.k {
            self.finish(covered, chosen);
            return;
        }
        let v = avail[0];
        let rest: Vec<usize> = avail[1..].to_vec();

        // v joins a clique: extend {v} inside its available neighborhood.
        let candidates: Vec<usize> = rest
            .iter()
            .copied()
            .filter(|&u| self.graph.has_edge(v, u))
            .collect();
        let mut clique = vec![v];
        self.extend_clique(&mut clique, &candidates, &rest, covered, chosen);

        // v stays uncovered.
        self.recurse(&rest, covered, chosen);
    }

    /// Enumerates every clique of the form `clique ∪ subset(candidates)` once
    /// (members ascending) and recurses on the remaining nodes for each.
    fn extend_clique(
        &mut self,
        clique: &mut Vec<usize>,
        candidates: &[usize],
        avail_rest: &[usize],
        covered: usize,
        chosen: &mut Vec<Vec<usize>>,
    ) {
        // Commit the current clique as-is.
        let remaining: Vec<usize> = avail_rest
            .iter()
            .copied()
            .filter(|u| !clique.contains(u))
            .collect();
        chosen.push(clique.clone());
        self.recurse(&remaining, covered + clique.len(), chosen);
        chosen.pop();

        for (idx, &u) in candidates.iter().enumerate() {
            let next: Vec<usize> = candidates[idx + 1..]
                .iter()
                .copied()
                .filter(|&w| self.graph.has_edge(u, w))
                .collect();
            clique.push(u);
            self.extend_clique(clique, &next, avail_rest, covered, chosen);
            clique.pop();
        }
    }
}

/// Exhaustive maximum node k-disjoint-clique search with pruning on the
/// remaining-node upper bound. Refuses graphs above `node_limit`.
pub fn brute_force_kdc(graph: &Graph, k: usize, node_limit: usize) -> Result<OracleResult> {
    let n = graph.n_nodes();
    if n > node_limit {
        return Err(Error::OracleTooLarge {
            n_nodes: n,
            limit: node_limit,
        });
    }
    if k == 0 || k > n.max(1) {
        return Err(Error::Parameter(format!(
            "k must lie in 1..={}, got {k}",
            n.max(1)
        )));
    }
    let mut search = Search {
        graph,
        k,
        best_value: 0,
        best: Vec::new(),
        optimal_count: 0,
        explored: 0,
    };
    let avail: Vec<usize> = (0..n).collect();
    let mut chosen = Vec::new();
    search.recurse(&avail, 0, &mut chosen);

    let mut best_cliques = search.best;
    for c in &mut best_cliques {
        c.sort_unstable();
    }
    best_cliques.sort();
    Ok(OracleResult {
        best_cliques,
        best_value: search.best_value,
        unique: search.optimal_count == 1,
        explored: search.explored,
    })
}
