//! First-order solver for the semidefinite relaxation of the maximum node
//! k-disjoint-clique problem, plus rounding back to cliques.
//!
//! The relaxation maximizes the all-entries sum of a symmetric matrix `X`
//! subject to `X e <= e`, zeros on non-edges, `tr X = k`, and `X >= 0`
//! (positive semidefinite). It is solved by consensus operator splitting over
//! three sets: the affine set (symmetry, non-edge zeros, trace), the PSD
//! cone, and the row-sum halfspaces. Each sweep costs one symmetric
//! eigendecomposition.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::instance::PlantedInstance;
use crate::linalg::SymMatrix;

/// Over-relaxation factor for the splitting updates. Plain updates spiral
/// slowly on degenerate instances; relaxed updates settle reliably.
const RELAXATION: f64 = 1.6;

/// Options for [`solve_relaxation`].
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative tolerance on splitting and feasibility residuals.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Penalty weight of the splitting, fixed for the whole run. Values near
    /// 1 converge reliably on these instances; larger values spiral.
    pub penalty_parameter: f64,
    /// Reserved for randomized initialization; the default start is the zero
    /// matrix and deterministic.
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerance: 1e-6,
            max_iterations: 20_000,
            penalty_parameter: 1.0,
            seed: 0,
        }
    }
}

/// Feasibility diagnostics of the returned iterate.
#[derive(Debug, Clone, Serialize)]
pub struct SolverResiduals {
    /// Largest positive excess of a row sum over 1.
    pub row_sum_violation_max: f64,
    /// Largest magnitude on a non-edge entry (exactly zero after the final
    /// affine projection).
    pub nonedge_violation_max: f64,
    /// `|tr X - k|` (exactly zero after the final affine projection).
    pub trace_gap: f64,
    /// Smallest eigenvalue of the returned iterate.
    pub min_eig: f64,
}

/// Approximate maximizer of the relaxation together with solve diagnostics.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub x: SymMatrix,
    /// Sum of all entries of `x`.
    pub objective: f64,
    pub residuals: SolverResiduals,
    pub iterations: usize,
    pub converged: bool,
}

struct AffineProjector {
    n: usize,
    k: f64,
    /// Non-edge pairs `(i, j)` with `i < j`.
    non_edges: Vec<(usize, usize)>,
}

impl AffineProjector {
    fn new(graph: &Graph, k: usize) -> Self {
        let n = graph.n_nodes();
        let mut non_edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if !graph.has_edge(i, j) {
                    non_edges.push((i, j));
                }
            }
        }
        AffineProjector {
            n,
            k: k as f64,
            non_edges,
        }
    }

    /// Projection onto `{X symmetric, X_ij = 0 on non-edges, tr X = k}`.
    fn project(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = 0.5 * (m + m.transpose());
        for &(i, j) in &self.non_edges {
            out[(i, j)] = 0.0;
            out[(j, i)] = 0.0;
        }
        let shift = (out.trace() - self.k) / self.n as f64;
        for i in 0..self.n {
            out[(i, i)] -= shift;
        }
        out
    }
}

fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = 0.5 * (m + m.transpose());
    let eig = nalgebra::SymmetricEigen::new(sym);
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

/// Row-wise projection onto `{X : X e <= e}`.
fn project_row_sums(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.ncols();
    let mut out = m.clone();
    for i in 0..m.nrows() {
        let excess: f64 = out.row(i).sum() - 1.0;
        if excess > 0.0 {
            let adjust = excess / n as f64;
            for j in 0..n {
                out[(i, j)] -= adjust;
            }
        }
    }
    out
}

fn max_row_excess(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).sum() - 1.0)
        .fold(0.0f64, f64::max)
}

/// Solves the relaxation for `graph` with `k` cliques.
pub fn solve_relaxation(
    graph: &Graph,
    k: usize,
    opts: &SolverOptions,
) -> Result<RelaxationSolution> {
    let n = graph.n_nodes();
    if n == 0 {
        return Err(Error::Parameter("graph has no nodes".into()));
    }
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "k must lie in 1..={n}, got {k}"
        )));
    }
    if opts.tolerance <= 0.0 || opts.max_iterations == 0 || opts.penalty_parameter <= 0.0 {
        return Err(Error::Parameter(
            "tolerance, max_iterations and penalty_parameter must be positive".into(),
        ));
    }

    let affine = AffineProjector::new(graph, k);
    let tol = opts.tolerance;
    let sigma = opts.penalty_parameter;

    let mut consensus = DMatrix::<f64>::zeros(n, n);
    let mut u1 = DMatrix::<f64>::zeros(n, n);
    let mut u2 = DMatrix::<f64>::zeros(n, n);
    let mut u3 = DMatrix::<f64>::zeros(n, n);

    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iterations {
        iterations = iter + 1;
        let x_affine = affine.project(&(&consensus - &u1));
        let x_psd = project_psd(&(&consensus - &u2));
        let x_rows = project_row_sums(&(&consensus - &u3));

        // Relaxed copies blend toward the previous consensus.
        let h_affine = &x_affine * RELAXATION + &consensus * (1.0 - RELAXATION);
        let h_psd = &x_psd * RELAXATION + &consensus * (1.0 - RELAXATION);
        let h_rows = &x_rows * RELAXATION + &consensus * (1.0 - RELAXATION);

        // Consensus update absorbs the (linear) maximization objective.
        let mut next = (&h_affine + &h_psd + &h_rows + &u1 + &u2 + &u3) / 3.0;
        let objective_shift = 1.0 / (3.0 * sigma);
        next.iter_mut().for_each(|v| *v += objective_shift);

        u1 += &h_affine - &next;
        u2 += &h_psd - &next;
        u3 += &h_rows - &next;

        let scale = next.norm().max(1.0);
        let primal = [
            (&x_affine - &next).norm(),
            (&x_psd - &next).norm(),
            (&x_rows - &next).norm(),
        ]
        .into_iter()
        .fold(0.0f64, f64::max)
            / scale;
        let dual = sigma * (&next - &consensus).norm() * 3.0f64.sqrt() / scale;
        consensus = next;

        if primal < tol && dual < tol {
            // Candidate stop: verify feasibility of the projected iterate.
            let candidate = affine.project(&consensus);
            let row_viol = max_row_excess(&candidate);
            let psd_gap = (&candidate - &x_psd).norm();
            if row_viol <= tol && psd_gap <= tol * n as f64 {
                converged = true;
                break;
            }
        }
    }

    // Final iterate with the affine constraints enforced exactly; converged
    // or not, this is the best available symmetric feasible-pattern iterate.
    let x_out = affine.project(&consensus);
    let x = SymMatrix::from_dense(&x_out, 1e-9)?;
    let objective = x_out.sum();
    let residuals = SolverResiduals {
        row_sum_violation_max: max_row_excess(&x_out).max(0.0),
        nonedge_violation_max: 0.0,
        trace_gap: (x_out.trace() - k as f64).abs(),
        min_eig: x.min_eigenvalue()?,
    };
    Ok(RelaxationSolution {
        x,
        objective,
        residuals,
        iterations,
        converged,
    })
}

/// Rounding outcome: recovered node sets plus quality flags.
#[derive(Debug, Clone, Serialize)]
pub struct RoundedCliques {
    pub cliques: Vec<Vec<usize>>,
    /// Components above threshold that were not cliques and were dropped.
    pub dropped_non_cliques: usize,
    /// Whether exactly `k` cliques were returned.
    pub complete: bool,
}

/// Thresholds the solution at `1/(2 n)`, forms connected components of the
/// surviving support restricted to graph edges, keeps the `k` largest, and
/// verifies each is a clique.
pub fn round_solution(x: &SymMatrix, graph: &Graph, k: usize) -> RoundedCliques {
    let n = graph.n_nodes();
    let threshold = 1.0 / (2.0 * n as f64);
    let support: Vec<usize> = (0..n).filter(|&i| x.get(i, i) >= threshold).collect();
    let index_of = {
        let mut map = vec![usize::MAX; n];
        for (idx, &v) in support.iter().enumerate() {
            map[v] = idx;
        }
        map
    };

    // Union-find over the support nodes.
    let mut parent: Vec<usize> = (0..support.len()).collect();
    fn find(parent: &mut [usize], a: usize) -> usize {
        let mut root = a;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = a;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for &i in &support {
        for &j in &support {
            if i < j && graph.has_edge(i, j) && x.get(i, j) >= threshold {
                let (a, b) = (find(&mut parent, index_of[i]), find(&mut parent, index_of[j]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }

    let mut components: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (idx, &v) in support.iter().enumerate() {
        let root = find(&mut parent, idx);
        components.entry(root).or_default().push(v);
    }
    let mut components: Vec<Vec<usize>> = components.into_values().collect();
    // Largest first; ties broken by smallest member for determinism.
    components.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let mut cliques = Vec::new();
    let mut dropped = 0;
    for comp in components.into_iter().take(k) {
        if graph.is_clique(&comp) {
            cliques.push(comp);
        } else {
            dropped += 1;
        }
    }
    let complete = cliques.len() == k;
    RoundedCliques {
        cliques,
        dropped_non_cliques: dropped,
        complete,
    }
}

/// Comparison of a rounded solution against the planted truth.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    /// Set-of-sets equality with the planted cliques, order-insensitive.
    pub exact_match: bool,
    /// Best Jaccard score of each planted clique against the rounded sets.
    pub jaccard: Vec<f64>,
    pub planted_nodes: usize,
    pub rounded_nodes: usize,
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let sa: std::collections::BTreeSet<usize> = a.iter().copied().collect();
    let sb: std::collections::BTreeSet<usize> = b.iter().copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

pub fn recovery_check(rounded: &[Vec<usize>], inst: &PlantedInstance) -> RecoveryReport {
    let mut planted: Vec<Vec<usize>> = inst.cliques().to_vec();
    for c in &mut planted {
        c.sort_unstable();
    }
    planted.sort();
    let mut found: Vec<Vec<usize>> = rounded.to_vec();
    for c in &mut found {
        c.sort_unstable();
    }
    found.sort();
    let exact_match = planted == found;
    let jaccard_scores = planted
        .iter()
        .map(|c| {
            found
                .iter()
                .map(|r| jaccard(c, r))
                .fold(0.0f64, f64::max)
        })
        .collect();
    RecoveryReport {
        exact_match,
        jaccard: jaccard_scores,
        planted_nodes: planted.iter().map(Vec::len).sum(),
        rounded_nodes: found.iter().map(Vec::len).sum(),
    }
}

/// Serializable rendering of a solve-and-round run.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub objective: f64,
    pub residuals: SolverResiduals,
    pub iterations: usize,
    pub converged: bool,
    pub cliques: Vec<Vec<usize>>,
    pub rounding_complete: bool,
    pub dropped_non_cliques: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_match: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<Vec<f64>>>,
}

impl SolutionReport {
    pub fn new(
        sol: &RelaxationSolution,
        rounded: &RoundedCliques,
        exact_match: Option<bool>,
        emit_x: bool,
    ) -> Self {
        SolutionReport {
            objective: sol.objective,
            residuals: sol.residuals.clone(),
            iterations: sol.iterations,
            converged: sol.converged,
            cliques: rounded.cliques.clone(),
            rounding_complete: rounded.complete,
            dropped_non_cliques: rounded.dropped_non_cliques,
            exact_match,
            x: emit_x.then(|| {
                (0..sol.x.dim())
                    .map(|i| (0..sol.x.dim()).map(|j| sol.x.get(i, j)).collect())
                    .collect()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::build_xstar;
    use crate::instance::{generate_adversarial_instance, AdversarialNoise};

    fn complete(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.add_edge(i, j).unwrap();
            }
        }
        g
    }

    #[test]
    fn triangle_reaches_known_optimum() {
        let g = complete(3);
        let sol = solve_relaxation(&g, 1, &SolverOptions::default()).unwrap();
        assert!(sol.converged, "did not converge in {} iters", sol.iterations);
        assert!(
            (sol.objective - 3.0).abs() < 1e-4,
            "objective {}",
            sol.objective
        );
        for i in 0..3 {
            for j in 0..3 {
                assert!((sol.x.get(i, j) - 1.0 / 3.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn two_k4s_reach_block_structure() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        let sol = solve_relaxation(inst.graph(), 2, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(
            (sol.objective - 8.0).abs() < 1e-3,
            "objective {}",
            sol.objective
        );
        let xstar = build_xstar(&inst).x.to_dense();
        let diff = (sol.x.to_dense() - xstar).norm();
        assert!(diff < 1e-3, "Frobenius distance {diff}");
    }

    #[test]
    fn empty_graph_concentrates_on_diagonal() {
        let g = Graph::empty(4);
        let sol = solve_relaxation(&g, 1, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        assert!((sol.objective - 1.0).abs() < 1e-4, "objective {}", sol.objective);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(sol.x.get(i, j), 0.0);
                }
            }
        }
        assert!(sol.residuals.trace_gap < 1e-12);
    }

    #[test]
    fn residual_invariants_hold_at_convergence() {
        let inst =
            generate_adversarial_instance(&[4, 5], 1, AdversarialNoise::Explicit(vec![(0, 9)]))
                .unwrap();
        let opts = SolverOptions::default();
        let sol = solve_relaxation(inst.graph(), 2, &opts).unwrap();
        assert!(sol.converged);
        let n = inst.n_nodes() as f64;
        assert!(sol.residuals.min_eig >= -opts.tolerance * n);
        assert!(sol.residuals.trace_gap <= opts.tolerance);
        assert!(sol.residuals.row_sum_violation_max <= opts.tolerance);
        assert_eq!(sol.residuals.nonedge_violation_max, 0.0);
    }

    #[test]
    fn solver_is_deterministic() {
        let inst =
            generate_adversarial_instance(&[4, 4], 1, AdversarialNoise::Explicit(vec![(0, 4)]))
                .unwrap();
        let a = solve_relaxation(inst.graph(), 2, &SolverOptions::default()).unwrap();
        let b = solve_relaxation(inst.graph(), 2, &SolverOptions::default()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.objective, b.objective);
        for i in 0..inst.n_nodes() {
            for j in 0..inst.n_nodes() {
                assert_eq!(a.x.get(i, j), b.x.get(i, j));
            }
        }
    }

    #[test]
    fn iteration_cap_reports_unconverged() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        let opts = SolverOptions {
            max_iterations: 3,
            ..Default::default()
        };
        let sol = solve_relaxation(inst.graph(), 2, &opts).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 3);
    }

    #[test]
    fn rounding_exact_xstar_recovers_planted() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        let xstar = build_xstar(&inst).x;
        let rounded = round_solution(&xstar, inst.graph(), 2);
        assert!(rounded.complete);
        assert_eq!(rounded.cliques, inst.cliques());
        let report = recovery_check(&rounded.cliques, &inst);
        assert!(report.exact_match);
        assert!(report.jaccard.iter().all(|&j| j == 1.0));
    }

    #[test]
    fn rounding_zero_matrix_flags_empty() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        let zero = SymMatrix::zeros(8);
        let rounded = round_solution(&zero, inst.graph(), 2);
        assert!(rounded.cliques.is_empty());
        assert!(!rounded.complete);
    }

    #[test]
    fn rounding_survives_small_perturbation() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        let n = inst.n_nodes();
        let mut x = build_xstar(&inst).x;
        // Deterministic entrywise perturbation below 1/(4 N).
        let eps = 1.0 / (4.0 * n as f64) * 0.9;
        for i in 0..n {
            for j in 0..=i {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                x.set(i, j, x.get(i, j) + sign * eps);
            }
        }
        let rounded = round_solution(&x, inst.graph(), 2);
        assert!(rounded.complete);
        let report = recovery_check(&rounded.cliques, &inst);
        assert!(report.exact_match);
    }

    #[test]
    fn recovery_check_examples() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        // Reordered cliques still match exactly.
        let reordered = vec![inst.cliques()[1].clone(), inst.cliques()[0].clone()];
        assert!(recovery_check(&reordered, &inst).exact_match);

        // One clique missing a node scores (r - 1) / r.
        let partial = vec![inst.cliques()[0].clone(), vec![4, 5, 6]];
        let report = recovery_check(&partial, &inst);
        assert!(!report.exact_match);
        assert_eq!(report.jaccard[0], 1.0);
        assert!((report.jaccard[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rounded_value_never_beats_exhaustive_search() {
        use crate::instance::generate_random_instance;
        use crate::oracle::brute_force_kdc;
        for seed in 0..10 {
            let inst = generate_random_instance(&[4, 5], 2, 0.25, seed).unwrap();
            let sol = solve_relaxation(inst.graph(), 2, &SolverOptions::default()).unwrap();
            let rounded = round_solution(&sol.x, inst.graph(), 2);
            let covered: usize = rounded.cliques.iter().map(Vec::len).sum();
            let oracle = brute_force_kdc(inst.graph(), 2, 16).unwrap();
            assert!(
                covered <= oracle.best_value,
                "seed {seed}: rounding covered {covered} > optimum {}",
                oracle.best_value
            );
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = complete(3);
        assert!(solve_relaxation(&g, 0, &SolverOptions::default()).is_err());
        assert!(solve_relaxation(&g, 4, &SolverOptions::default()).is_err());
        let bad = SolverOptions {
            tolerance: 0.0,
            ..Default::default()
        };
        assert!(solve_relaxation(&g, 1, &bad).is_err());
    }
}
