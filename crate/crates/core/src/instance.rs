//! Planted k-disjoint-clique instances: seeded generators for the random and
//! adversarial noise models, structural validation, and JSON serialization.

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Upper end of the admissible adversarial delta range: the positive root of
/// `delta = (1 - delta)^2`.
pub const DELTA_MAX: f64 = 0.3819660112501051;

/// Noise-model tag carried by every instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum NoiseModel {
    /// Remaining pairs added independently with probability `p`.
    Random { p: f64 },
    /// Arbitrary extra edges; `delta`/`rho` are the declared budgets when the
    /// seeded budget generator produced the instance, and absent for explicit
    /// edge lists.
    Adversarial {
        #[serde(skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
    },
}

/// Validated bundle of noise parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub delta: f64,
    pub rho: f64,
    pub p: f64,
}

impl NoiseParams {
    pub fn new(delta: f64, rho: f64, p: f64) -> Result<Self> {
        check_delta(delta)?;
        if rho < 0.0 {
            return Err(Error::Parameter(format!("rho must be nonnegative, got {rho}")));
        }
        check_probability(p)?;
        Ok(NoiseParams { delta, rho, p })
    }

    /// Variance of the centered noise-entry distribution, `p / (1 - p)`.
    pub fn sigma_squared(&self) -> f64 {
        self.p / (1.0 - self.p)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    // The admissible range is 0 < delta < (1 - delta)^2.
    if !(delta > 0.0 && delta < (1.0 - delta) * (1.0 - delta)) {
        return Err(Error::Parameter(format!(
            "delta must lie in (0, {DELTA_MAX:.4}), got {delta}"
        )));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    // p = 0 is admitted so noise-free random instances can be expressed.
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Parameter(format!("p must lie in [0, 1), got {p}")));
    }
    Ok(())
}

/// Noise specification for the adversarial generator.
#[derive(Debug, Clone)]
pub enum AdversarialNoise {
    /// Insert exactly these edges; budgets are recorded by validation only.
    Explicit(Vec<(usize, usize)>),
    /// Seeded uniform insertion constrained to the cross-degree and
    /// edge-count budgets.
    Budget { delta: f64, rho: f64, seed: u64 },
}

/// A graph together with its planted partition and generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedInstance {
    graph: Graph,
    cliques: Vec<Vec<usize>>,
    noise_nodes: Vec<usize>,
    model: NoiseModel,
    seed: u64,
}

impl PlantedInstance {
    /// Assembles an instance from parts, checking that the cliques and noise
    /// nodes partition `0..n`. Clique completeness is reported by
    /// [`PlantedInstance::validate`], not enforced here.
    pub fn from_raw_parts(
        graph: Graph,
        cliques: Vec<Vec<usize>>,
        noise_nodes: Vec<usize>,
        model: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        let n = graph.n_nodes();
        let mut seen = vec![false; n];
        let mut mark = |v: usize| -> Result<()> {
            if v >= n {
                return Err(Error::InvalidInstance(format!(
                    "node {v} out of range for {n} nodes"
                )));
            }
            if seen[v] {
                return Err(Error::InvalidInstance(format!(
                    "node {v} appears in more than one part"
                )));
            }
            seen[v] = true;
            Ok(())
        };
        for clique in &cliques {
            if clique.is_empty() {
                return Err(Error::InvalidInstance("empty clique in partition".into()));
            }
            for &v in clique {
                mark(v)?;
            }
        }
        for &v in &noise_nodes {
            mark(v)?;
        }
        if let Some(v) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidInstance(format!(
                "node {v} belongs to no part"
            )));
        }
        let mut cliques = cliques;
        for clique in &mut cliques {
            clique.sort_unstable();
        }
        let mut noise_nodes = noise_nodes;
        noise_nodes.sort_unstable();
        Ok(PlantedInstance {
            graph,
            cliques,
            noise_nodes,
            model,
            seed,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    /// Number of planted cliques.
    pub fn k(&self) -> usize {
        self.cliques.len()
    }

    pub fn cliques(&self) -> &[Vec<usize>] {
        &self.cliques
    }

    pub fn noise_nodes(&self) -> &[usize] {
        &self.noise_nodes
    }

    /// Nodes of part `p`, where parts `0..k` are cliques and part `k` is the
    /// noise set.
    pub fn part(&self, p: usize) -> Result<&[usize]> {
        if p < self.k() {
            Ok(&self.cliques[p])
        } else if p == self.k() {
            Ok(&self.noise_nodes)
        } else {
            Err(Error::Parameter(format!(
                "part index {p} out of range for k = {}",
                self.k()
            )))
        }
    }

    /// Sizes `r_1, ..., r_{k+1}` (noise last).
    pub fn sizes(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.cliques.iter().map(|c| c.len()).collect();
        out.push(self.noise_nodes.len());
        out
    }

    /// Smallest planted clique size.
    pub fn r_hat(&self) -> usize {
        self.cliques.iter().map(|c| c.len()).min().unwrap_or(0)
    }

    pub fn model(&self) -> &NoiseModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Part index of node `v` (`k` for noise nodes).
    pub fn part_of(&self, v: usize) -> Result<usize> {
        if v >= self.n_nodes() {
            return Err(Error::Parameter(format!(
                "node {v} out of range for {} nodes",
                self.n_nodes()
            )));
        }
        for (q, clique) in self.cliques.iter().enumerate() {
            if clique.binary_search(&v).is_ok() {
                return Ok(q);
            }
        }
        Ok(self.k())
    }

    /// Number of neighbors of `v` inside part `s`.
    pub fn cross_degree(&self, v: usize, s: usize) -> Result<usize> {
        if v >= self.n_nodes() {
            return Err(Error::Parameter(format!(
                "node {v} out of range for {} nodes",
                self.n_nodes()
            )));
        }
        let part = self.part(s)?;
        Ok(self.graph.degree_into(v, part))
    }

    /// Edges with endpoints in different parts or inside the noise set.
    pub fn noise_edges(&self) -> Vec<(usize, usize)> {
        let k = self.k();
        let mut part_of = vec![k; self.n_nodes()];
        for (q, clique) in self.cliques.iter().enumerate() {
            for &v in clique {
                part_of[v] = q;
            }
        }
        self.graph
            .edges()
            .into_iter()
            .filter(|&(i, j)| part_of[i] != part_of[j] || part_of[i] == k)
            .collect()
    }

    /// Unordered node pairs not internal to any planted clique.
    pub fn non_clique_pair_count(&self) -> usize {
        let n = self.n_nodes();
        let total = n * (n - 1) / 2;
        let internal: usize = self.cliques.iter().map(|c| c.len() * (c.len() - 1) / 2).sum();
        total - internal
    }

    pub fn validate(&self) -> ValidationReport {
        validate_instance(self)
    }

    /// Drops degree-zero noise nodes and reindexes densely. Returns the
    /// pruned instance and the removed original node ids.
    pub fn prune_isolated_noise(&self) -> (PlantedInstance, Vec<usize>) {
        let removed: Vec<usize> = self
            .noise_nodes
            .iter()
            .copied()
            .filter(|&v| self.graph.degree(v) == 0)
            .collect();
        if removed.is_empty() {
            return (self.clone(), removed);
        }
        let n = self.n_nodes();
        let mut keep = vec![true; n];
        for &v in &removed {
            keep[v] = false;
        }
        let mut new_index = vec![usize::MAX; n];
        let mut next = 0;
        for v in 0..n {
            if keep[v] {
                new_index[v] = next;
                next += 1;
            }
        }
        let mut graph = Graph::empty(next);
        for (i, j) in self.graph.edges() {
            graph.add_edge(new_index[i], new_index[j]).unwrap();
        }
        let cliques = self
            .cliques
            .iter()
            .map(|c| c.iter().map(|&v| new_index[v]).collect())
            .collect();
        let noise_nodes = self
            .noise_nodes
            .iter()
            .filter(|&&v| keep[v])
            .map(|&v| new_index[v])
            .collect();
        (
            PlantedInstance {
                graph,
                cliques,
                noise_nodes,
                model: self.model.clone(),
                seed: self.seed,
            },
            removed,
        )
    }
}

/// Structural and noise-budget report for an instance.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub partition_ok: bool,
    pub omega1_ok: bool,
    /// Missing within-clique edges, at most 32 witnesses.
    pub missing_clique_edges: Vec<(usize, usize)>,
    pub symmetry_ok: bool,
    pub noise_edge_count: usize,
    /// Largest `n_v^s / min(r_q, r_s)` over clique nodes `v` in clique `q`
    /// and parts `s != q`, with its witness `(node, part)`.
    pub max_cross_ratio: f64,
    pub max_cross_ratio_witness: Option<(usize, usize)>,
    /// Declared-budget checks, present when the model carries budgets.
    pub delta_condition: Option<BudgetCheck>,
    pub rho_condition: Option<BudgetCheck>,
    /// Whether `n_v^q < r_q` holds for every node and foreign clique.
    pub uniqueness_ok: bool,
    pub uniqueness_witness: Option<(usize, usize)>,
    pub structurally_valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BudgetCheck {
    pub declared: f64,
    pub observed: f64,
    pub satisfied: bool,
}

pub fn validate_instance(inst: &PlantedInstance) -> ValidationReport {
    let k = inst.k();
    // Partition validity is enforced at construction; re-derive cheaply.
    let partition_ok = {
        let mut count = vec![0usize; inst.n_nodes()];
        for clique in inst.cliques() {
            for &v in clique {
                count[v] += 1;
            }
        }
        for &v in inst.noise_nodes() {
            count[v] += 1;
        }
        count.iter().all(|&c| c == 1)
    };

    let mut missing = Vec::new();
    for clique in inst.cliques() {
        for (a, &i) in clique.iter().enumerate() {
            for &j in &clique[a + 1..] {
                if !inst.graph().has_edge(i, j) && missing.len() < 32 {
                    missing.push((i, j));
                }
            }
        }
    }
    let omega1_ok = missing.is_empty();

    let noise_edge_count = inst.noise_edges().len();
    let sizes = inst.sizes();

    let mut max_ratio = 0.0f64;
    let mut ratio_witness = None;
    for q in 0..k {
        let r_q = sizes[q];
        for &v in &inst.cliques[q] {
            for (s, &r_s) in sizes.iter().enumerate() {
                if s == q || r_s == 0 {
                    continue;
                }
                let deg = inst.graph.degree_into(v, inst.part(s).unwrap());
                let ratio = deg as f64 / r_s.min(r_q) as f64;
                if ratio > max_ratio {
                    max_ratio = ratio;
                    ratio_witness = Some((v, s));
                }
            }
        }
    }

    let (delta_condition, rho_condition) = match inst.model() {
        NoiseModel::Adversarial { delta, rho } => {
            let dc = delta.map(|d| BudgetCheck {
                declared: d,
                observed: max_ratio,
                satisfied: max_ratio <= d + 1e-12,
            });
            let rhat = inst.r_hat() as f64;
            let rc = rho.map(|r| BudgetCheck {
                declared: r,
                observed: noise_edge_count as f64 / (rhat * rhat),
                satisfied: noise_edge_count as f64 <= r * rhat * rhat + 1e-9,
            });
            (dc, rc)
        }
        NoiseModel::Random { .. } => (None, None),
    };

    let mut uniqueness_ok = true;
    let mut uniqueness_witness = None;
    'outer: for v in 0..inst.n_nodes() {
        let home = inst.part_of(v).unwrap();
        for q in 0..k {
            if q == home {
                continue;
            }
            let deg = inst.graph.degree_into(v, &inst.cliques[q]);
            if deg >= inst.cliques[q].len() {
                uniqueness_ok = false;
                uniqueness_witness = Some((v, q));
                break 'outer;
            }
        }
    }

    ValidationReport {
        partition_ok,
        omega1_ok,
        missing_clique_edges: missing,
        symmetry_ok: true, // packed adjacency is symmetric by construction
        noise_edge_count,
        max_cross_ratio: max_ratio,
        max_cross_ratio_witness: ratio_witness,
        delta_condition,
        rho_condition,
        uniqueness_ok,
        uniqueness_witness,
        structurally_valid: partition_ok && omega1_ok,
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::Parameter("at least one clique size required".into()));
    }
    if let Some(&bad) = sizes.iter().find(|&&r| r < 2) {
        return Err(Error::Parameter(format!(
            "clique sizes must be at least 2, got {bad}"
        )));
    }
    Ok(())
}

/// Lays out cliques on contiguous index ranges (noise last) and inserts all
/// within-clique edges.
fn planted_skeleton(sizes: &[usize], extra_nodes: usize) -> (Graph, Vec<Vec<usize>>, Vec<usize>) {
    let n: usize = sizes.iter().sum::<usize>() + extra_nodes;
    let mut graph = Graph::empty(n);
    let mut cliques = Vec::with_capacity(sizes.len());
    let mut offset = 0;
    for &r in sizes {
        let members: Vec<usize> = (offset..offset + r).collect();
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                graph.add_edge(i, j).unwrap();
            }
        }
        cliques.push(members);
        offset += r;
    }
    let noise_nodes: Vec<usize> = (offset..n).collect();
    (graph, cliques, noise_nodes)
}

fn non_clique_pairs(cliques: &[Vec<usize>], n: usize) -> Vec<(usize, usize)> {
    let mut part_of = vec![usize::MAX; n];
    for (q, clique) in cliques.iter().enumerate() {
        for &v in clique {
            part_of[v] = q;
        }
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if part_of[i] == usize::MAX || part_of[i] != part_of[j] {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Plants fully interconnected cliques and adds every remaining pair as an
/// edge independently with probability `p`.
pub fn generate_random_instance(
    sizes: &[usize],
    extra_nodes: usize,
    p: f64,
    seed: u64,
) -> Result<PlantedInstance> {
    check_sizes(sizes)?;
    check_probability(p)?;
    let (mut graph, cliques, noise_nodes) = planted_skeleton(sizes, extra_nodes);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, j) in non_clique_pairs(&cliques, graph.n_nodes()) {
        if rng.random_bool(p) {
            graph.add_edge(i, j).unwrap();
        }
    }
    Ok(PlantedInstance {
        graph,
        cliques,
        noise_nodes,
        model: NoiseModel::Random { p },
        seed,
    })
}

/// Plants cliques and adds adversarial noise, either an explicit edge list or
/// seeded random edges constrained to the cross-degree budget
/// `n_i^s <= delta * min(r_q, r_s)` and the total budget `rho * r_hat^2`.
pub fn generate_adversarial_instance(
    sizes: &[usize],
    extra_nodes: usize,
    noise: AdversarialNoise,
) -> Result<PlantedInstance> {
    check_sizes(sizes)?;
    let (mut graph, cliques, noise_nodes) = planted_skeleton(sizes, extra_nodes);
    let n = graph.n_nodes();
    let mut part_of = vec![cliques.len(); n];
    for (q, clique) in cliques.iter().enumerate() {
        for &v in clique {
            part_of[v] = q;
        }
    }
    let k = cliques.len();
    let part_sizes: Vec<usize> = {
        let mut s: Vec<usize> = cliques.iter().map(|c| c.len()).collect();
        s.push(extra_nodes);
        s
    };

    match noise {
        AdversarialNoise::Explicit(edges) => {
            let mut inserted = std::collections::HashSet::new();
            for (i, j) in edges {
                graph.check_pair(i, j)?;
                if part_of[i] == part_of[j] && part_of[i] < k {
                    return Err(Error::Parameter(format!(
                        "explicit noise edge ({i}, {j}) duplicates a clique-internal edge"
                    )));
                }
                let key = (i.min(j), i.max(j));
                if !inserted.insert(key) {
                    return Err(Error::Parameter(format!(
                        "duplicate explicit noise edge ({i}, {j})"
                    )));
                }
                graph.add_edge(i, j)?;
            }
            Ok(PlantedInstance {
                graph,
                cliques,
                noise_nodes,
                model: NoiseModel::Adversarial {
                    delta: None,
                    rho: None,
                },
                seed: 0,
            })
        }
        AdversarialNoise::Budget { delta, rho, seed } => {
            check_delta(delta)?;
            if rho < 0.0 {
                return Err(Error::Parameter(format!(
                    "rho must be nonnegative, got {rho}"
                )));
            }
            let r_hat = part_sizes[..k].iter().min().copied().unwrap();
            let budget = (rho * (r_hat * r_hat) as f64).floor() as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut candidates = non_clique_pairs(&cliques, n);
            candidates.shuffle(&mut rng);
            // Cross-degree counters indexed by (node, foreign part).
            let mut cross = vec![vec![0usize; k + 1]; n];
            let mut added = 0usize;
            let allowed = |v: usize, s: usize, cross: &[Vec<usize>]| -> bool {
                let q = part_of[v];
                if q >= k {
                    return true; // noise endpoints face no per-node budget
                }
                let cap = (delta * part_sizes[q].min(part_sizes[s]) as f64).floor() as usize;
                cross[v][s] < cap
            };
            for (i, j) in candidates {
                if added >= budget {
                    break;
                }
                let (si, sj) = (part_of[j], part_of[i]);
                if allowed(i, si, &cross) && allowed(j, sj, &cross) {
                    graph.add_edge(i, j).unwrap();
                    cross[i][si] += 1;
                    cross[j][sj] += 1;
                    added += 1;
                }
            }
            Ok(PlantedInstance {
                graph,
                cliques,
                noise_nodes,
                model: NoiseModel::Adversarial {
                    delta: Some(delta),
                    rho: Some(rho),
                },
                seed,
            })
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    version: u32,
    n_nodes: usize,
    cliques: Vec<Vec<usize>>,
    noise_nodes: Vec<usize>,
    model: NoiseModel,
    seed: u64,
    /// Non-clique edges only, each as `[i, j]` with `i < j`.
    edges: Vec<(usize, usize)>,
}

/// Serializes an instance to the versioned JSON format. Clique-internal
/// edges are implied and never listed.
pub fn instance_to_json(inst: &PlantedInstance) -> String {
    let mut edges = inst.noise_edges();
    edges.sort_unstable();
    let file = InstanceFile {
        version: 1,
        n_nodes: inst.n_nodes(),
        cliques: inst.cliques().to_vec(),
        noise_nodes: inst.noise_nodes().to_vec(),
        model: inst.model().clone(),
        seed: inst.seed(),
        edges,
    };
    serde_json::to_string_pretty(&file).expect("instance serialization cannot fail")
}

pub fn instance_from_json(text: &str) -> Result<PlantedInstance> {
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if file.version != 1 {
        return Err(Error::Parse(format!(
            "unsupported instance file version {}",
            file.version
        )));
    }
    let mut graph = Graph::empty(file.n_nodes);
    let mut part_of = vec![usize::MAX; file.n_nodes];
    for (q, clique) in file.cliques.iter().enumerate() {
        for &v in clique {
            if v >= file.n_nodes {
                return Err(Error::Parse(format!(
                    "clique node {v} out of range for {} nodes",
                    file.n_nodes
                )));
            }
            if part_of[v] != usize::MAX {
                return Err(Error::Parse(format!(
                    "node {v} listed in overlapping cliques"
                )));
            }
            part_of[v] = q;
        }
        for (a, &i) in clique.iter().enumerate() {
            for &j in &clique[a + 1..] {
                graph.add_edge(i, j).map_err(|e| Error::Parse(e.to_string()))?;
            }
        }
    }
    let mut seen = std::collections::HashSet::new();
    for &(i, j) in &file.edges {
        graph.check_pair(i, j).map_err(|e| Error::Parse(e.to_string()))?;
        if part_of[i] != usize::MAX && part_of[i] == part_of[j] {
            return Err(Error::Parse(format!(
                "edge ({i}, {j}) is clique-internal and must not be listed"
            )));
        }
        if !seen.insert((i.min(j), i.max(j))) {
            return Err(Error::Parse(format!("duplicate edge ({i}, {j})")));
        }
        graph.add_edge(i, j).map_err(|e| Error::Parse(e.to_string()))?;
    }
    PlantedInstance::from_raw_parts(
        graph,
        file.cliques,
        file.noise_nodes,
        file.model,
        file.seed,
    )
    .map_err(|e| Error::Parse(e.to_string()))
}

pub fn save_instance(inst: &PlantedInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, instance_to_json(inst))?;
    Ok(())
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<PlantedInstance> {
    let text = std::fs::read_to_string(path)?;
    instance_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn k3_has_no_noise_pairs() {
        let inst = generate_random_instance(&[3], 0, 0.5, 7).unwrap();
        assert_eq!(inst.n_nodes(), 3);
        assert_eq!(inst.graph().edge_count(), 3);
        assert_eq!(inst.non_clique_pair_count(), 0);
        assert!(inst.noise_edges().is_empty());
    }

    #[test]
    fn p_zero_forbids_noise() {
        let inst = generate_random_instance(&[4, 4], 0, 0.0, 3).unwrap();
        assert_eq!(inst.graph().edge_count(), 12);
        assert!(inst.noise_edges().is_empty());
        assert!(inst.validate().structurally_valid);
    }

    #[test]
    fn random_noise_count_within_binomial_band() {
        let inst = generate_random_instance(&[10, 10], 5, 0.3, 1).unwrap();
        let pairs = inst.non_clique_pair_count() as f64;
        assert_eq!(pairs, 210.0);
        let count = inst.noise_edges().len() as f64;
        let mean = 0.3 * pairs;
        let sd = (pairs * 0.3 * 0.7).sqrt();
        assert!(
            (count - mean).abs() <= 4.0 * sd,
            "noise count {count} outside 4 sigma of {mean}"
        );
        // Regression pin for this exact seed.
        assert_eq!(inst.noise_edges().len(), 60);
    }

    #[test]
    fn generator_rejects_bad_params() {
        assert!(generate_random_instance(&[1], 0, 0.5, 0).is_err());
        assert!(generate_random_instance(&[], 0, 0.5, 0).is_err());
        assert!(generate_random_instance(&[3], 0, 1.0, 0).is_err());
        assert!(generate_random_instance(&[3], 0, -0.1, 0).is_err());
    }

    #[test]
    fn explicit_adversarial_empty_noise() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        assert_eq!(inst.graph().edge_count(), 12);
        let report = inst.validate();
        assert!(report.structurally_valid);
        assert_eq!(report.noise_edge_count, 0);
        assert_eq!(report.max_cross_ratio, 0.0);
        assert!(report.uniqueness_ok);
    }

    #[test]
    fn explicit_single_cross_edge_ratio() {
        let inst = generate_adversarial_instance(
            &[4, 4],
            0,
            AdversarialNoise::Explicit(vec![(0, 4)]),
        )
        .unwrap();
        assert_eq!(inst.cross_degree(0, 1).unwrap(), 1);
        assert_eq!(inst.cross_degree(4, 0).unwrap(), 1);
        let report = inst.validate();
        // n_i^s = 1 against min(4, 4) needs delta >= 0.25.
        assert!((report.max_cross_ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn explicit_rejects_bad_edges() {
        assert!(generate_adversarial_instance(
            &[4, 4],
            0,
            AdversarialNoise::Explicit(vec![(0, 9)])
        )
        .is_err());
        assert!(generate_adversarial_instance(
            &[4, 4],
            0,
            AdversarialNoise::Explicit(vec![(0, 1)])
        )
        .is_err());
        assert!(generate_adversarial_instance(
            &[4, 4],
            0,
            AdversarialNoise::Explicit(vec![(0, 4), (4, 0)])
        )
        .is_err());
    }

    #[test]
    fn budget_mode_respects_declared_bounds() {
        let inst = generate_adversarial_instance(
            &[8, 8, 8],
            0,
            AdversarialNoise::Budget {
                delta: 0.3,
                rho: 0.2,
                seed: 7,
            },
        )
        .unwrap();
        let report = inst.validate();
        assert!(report.noise_edge_count <= 12); // 0.2 * 64 = 12.8 -> 12
        // Every cross-degree at most floor(0.3 * 8) = 2.
        for q in 0..3 {
            for &v in &inst.cliques()[q] {
                for s in 0..3 {
                    if s != q {
                        assert!(inst.cross_degree(v, s).unwrap() <= 2);
                    }
                }
            }
        }
        assert!(report.delta_condition.unwrap().satisfied);
        assert!(report.rho_condition.unwrap().satisfied);
    }

    #[test]
    fn budget_mode_never_violates_bounds_across_seeds() {
        for seed in 0..40 {
            let inst = generate_adversarial_instance(
                &[6, 9],
                3,
                AdversarialNoise::Budget {
                    delta: 0.34,
                    rho: 0.3,
                    seed,
                },
            )
            .unwrap();
            let report = inst.validate();
            assert!(report.delta_condition.as_ref().unwrap().satisfied, "seed {seed}");
            assert!(report.rho_condition.as_ref().unwrap().satisfied, "seed {seed}");
        }
    }

    #[test]
    fn cross_degree_examples() {
        let inst =
            generate_adversarial_instance(&[4, 4], 0, AdversarialNoise::Explicit(vec![])).unwrap();
        assert_eq!(inst.cross_degree(0, 1).unwrap(), 0);
        assert_eq!(inst.cross_degree(0, 0).unwrap(), 3); // own-clique internal degree r - 1
        assert_eq!(inst.part_of(0).unwrap(), 0);
        assert_eq!(inst.part_of(5).unwrap(), 1);
        assert!(inst.cross_degree(0, 5).is_err());
        assert!(inst.cross_degree(99, 0).is_err());
    }

    #[test]
    fn validation_flags_missing_clique_edge() {
        let mut inst = generate_random_instance(&[4], 0, 0.0, 0).unwrap();
        inst.graph.remove_edge(0, 1).unwrap();
        let report = inst.validate();
        assert!(!report.omega1_ok);
        assert_eq!(report.missing_clique_edges, vec![(0, 1)]);
        assert!(!report.structurally_valid);
    }

    #[test]
    fn validation_flags_rho_violation() {
        // Declared rho = 0 but one noise edge present.
        let mut inst = generate_adversarial_instance(
            &[3, 3],
            0,
            AdversarialNoise::Explicit(vec![(0, 3)]),
        )
        .unwrap();
        inst.model = NoiseModel::Adversarial {
            delta: Some(0.3),
            rho: Some(0.0),
        };
        let report = inst.validate();
        let rho = report.rho_condition.unwrap();
        assert!(!rho.satisfied);
        assert_eq!(report.noise_edge_count, 1);
    }

    #[test]
    fn uniqueness_witness_reported() {
        // Noise node 6 adjacent to all of clique 0.
        let inst = generate_adversarial_instance(
            &[3, 3],
            1,
            AdversarialNoise::Explicit(vec![(6, 0), (6, 1), (6, 2)]),
        )
        .unwrap();
        let report = inst.validate();
        assert!(!report.uniqueness_ok);
        assert_eq!(report.uniqueness_witness, Some((6, 0)));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = std::env::temp_dir().join(format!("kdc-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("inst.json");
        let inst = generate_random_instance(&[5, 7], 3, 0.25, 42).unwrap();
        save_instance(&inst, &path).unwrap();
        let loaded = load_instance(&path).unwrap();
        assert_eq!(inst, loaded);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_rejects_overlapping_cliques() {
        let text = r#"{
            "version": 1, "n_nodes": 4,
            "cliques": [[0, 1], [1, 2]],
            "noise_nodes": [3],
            "model": {"type": "random", "p": 0.5},
            "seed": 0, "edges": []
        }"#;
        let err = instance_from_json(text).unwrap_err();
        assert!(err.to_string().contains("overlapping"), "{err}");
    }

    #[test]
    fn load_rejects_unknown_model_tag() {
        let text = r#"{
            "version": 1, "n_nodes": 2,
            "cliques": [[0, 1]],
            "noise_nodes": [],
            "model": {"type": "quantum"},
            "seed": 0, "edges": []
        }"#;
        let err = instance_from_json(text).unwrap_err();
        assert!(err.to_string().contains("quantum"), "{err}");
    }

    #[test]
    fn load_rejects_listed_clique_edge() {
        let text = r#"{
            "version": 1, "n_nodes": 3,
            "cliques": [[0, 1, 2]],
            "noise_nodes": [],
            "model": {"type": "random", "p": 0.1},
            "seed": 0, "edges": [[0, 1]]
        }"#;
        assert!(instance_from_json(text).is_err());
    }

    #[test]
    fn prune_drops_isolated_noise_only() {
        let inst = generate_adversarial_instance(
            &[3, 3],
            2,
            AdversarialNoise::Explicit(vec![(0, 6)]),
        )
        .unwrap();
        let (pruned, removed) = inst.prune_isolated_noise();
        assert_eq!(removed, vec![7]);
        assert_eq!(pruned.n_nodes(), 7);
        assert_eq!(pruned.noise_nodes(), &[6]);
        assert!(pruned.validate().structurally_valid);
        assert_eq!(pruned.noise_edges(), vec![(0, 6)]);
    }

    #[test]
    fn noise_params_validation() {
        let ok = NoiseParams::new(0.3, 0.5, 0.25).unwrap();
        assert!((ok.sigma_squared() - 1.0 / 3.0).abs() < 1e-15);
        // The delta range is 0 < delta < (1 - delta)^2; 0.382 sits just above.
        assert!(NoiseParams::new(0.382, 0.5, 0.25).is_err());
        assert!(NoiseParams::new(0.0, 0.5, 0.25).is_err());
        assert!(NoiseParams::new(0.38, 0.5, 0.25).is_ok());
        assert!(NoiseParams::new(0.3, -0.1, 0.25).is_err());
        assert!(NoiseParams::new(0.3, 0.5, 1.0).is_err());
    }

    #[test]
    fn chernoff_band_on_noise_rate() {
        // Empirical edge rate over many instances concentrates near p.
        let p = 0.3;
        let mut total_edges = 0usize;
        let mut total_pairs = 0usize;
        for seed in 0..200 {
            let inst = generate_random_instance(&[20, 20], 10, p, seed).unwrap();
            total_edges += inst.noise_edges().len();
            total_pairs += inst.non_clique_pair_count();
        }
        let rate = total_edges as f64 / total_pairs as f64;
        assert!(
            (rate - p).abs() <= 0.05,
            "empirical rate {rate} strayed from {p}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn omega1_always_holds_for_generated(seed in 0u64..10000, p in 0.0f64..0.8) {
            let inst = generate_random_instance(&[4, 6], 3, p, seed).unwrap();
            prop_assert!(inst.validate().omega1_ok);
        }

        #[test]
        fn json_round_trip_is_identity(seed in 0u64..10000) {
            let inst = generate_random_instance(&[3, 5, 4], 4, 0.35, seed).unwrap();
            let text = instance_to_json(&inst);
            let back = instance_from_json(&text).unwrap();
            prop_assert_eq!(inst, back);
        }
    }
}
