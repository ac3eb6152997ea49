//! Planted k-disjoint-clique instances, a first-order solver for their
//! semidefinite relaxation, and dual certificates of exact recovery.
//!
//! The pipeline: plant fully interconnected cliques, obscure them with noise
//! edges and nodes (seeded random or adversarial), then either certify the
//! planted partition as the unique maximum node k-disjoint-clique subgraph by
//! constructing explicit dual multipliers, or recover it by solving the
//! relaxation with operator splitting and rounding the result. An exhaustive
//! search on small graphs serves as ground truth.

pub mod certificate;
pub mod error;
pub mod graph;
pub mod instance;
pub mod linalg;
pub mod oracle;
pub mod randmat;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use graph::Graph;
pub use instance::{
    generate_adversarial_instance, generate_random_instance, instance_from_json,
    instance_to_json, load_instance, save_instance, validate_instance, AdversarialNoise,
    NoiseModel, NoiseParams, PlantedInstance, ValidationReport,
};
pub use linalg::SymMatrix;

pub use certificate::{
    build_dual_s, build_lambda, build_stilde, build_xstar, check_optimality, compute_c,
    solve_yz_block, BlockSystem, CertificateReport, CertifyOutcome, DualCertificate,
    PrimalCandidate,
};
pub use oracle::{brute_force_kdc, OracleResult, DEFAULT_NODE_LIMIT};
pub use randmat::{matrix_check, matrix_check_csv, MatrixCheckOutput};
pub use solver::{
    recovery_check, round_solution, solve_relaxation, RecoveryReport, RelaxationSolution,
    RoundedCliques, SolutionReport, SolverOptions,
};
pub use sweep::{run_sweep, sweep_csv, SweepCell, SweepModel, SweepRow, SweepSpec};
