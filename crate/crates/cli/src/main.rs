//! Batch command-line interface: generate planted instances, certify them,
//! solve the relaxation, round, run parameter sweeps, and run random-matrix
//! checks. Verdicts live in the output payloads; exit codes are 0 for a
//! completed run, 2 for usage errors, 3 for I/O errors.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use kdc_core::certificate::{check_optimality, CertificateReport};
use kdc_core::instance::{
    generate_adversarial_instance, generate_random_instance, instance_from_json,
    AdversarialNoise, PlantedInstance,
};
use kdc_core::oracle::{brute_force_kdc, DEFAULT_NODE_LIMIT};
use kdc_core::randmat::{matrix_check, matrix_check_csv};
use kdc_core::solver::{
    recovery_check, round_solution, solve_relaxation, SolutionReport, SolverOptions,
};
use kdc_core::sweep::{run_sweep, sweep_csv, SweepCell, SweepModel, SweepSpec};
use kdc_core::{Error, Graph, SymMatrix};

#[derive(Parser)]
#[command(name = "kdc", about = "Planted k-disjoint-clique experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance and write it as JSON.
    Generate {
        #[command(subcommand)]
        model: GenerateModel,
    },
    /// Build and verify the dual certificate for an instance.
    Certify(CertifyArgs),
    /// Solve the semidefinite relaxation and round to cliques.
    Solve(SolveArgs),
    /// Round a previously solved relaxation (needs `solve --emit-x` output).
    Round(RoundArgs),
    /// Exhaustive ground-truth search on a small instance.
    Oracle(OracleArgs),
    /// Parameter sweep: generate, certify, solve, round per cell and trial.
    Sweep(SweepArgs),
    /// Monte-Carlo spectral statistics of the centered noise ensemble.
    MatrixCheck(MatrixCheckArgs),
}

#[derive(Subcommand)]
enum GenerateModel {
    /// Planted cliques plus independent noise edges with probability p.
    Random {
        /// Comma-separated clique sizes, e.g. 8,8.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Number of extra noise nodes.
        #[arg(long, default_value_t = 0)]
        extra: usize,
        /// Edge probability for non-clique pairs.
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Planted cliques plus adversarial noise edges.
    Adversarial {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        extra: usize,
        /// Cross-degree budget fraction (budget mode).
        #[arg(long)]
        delta: Option<f64>,
        /// Total noise-edge budget as a fraction of r_hat^2 (budget mode).
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explicit noise edges "i-j,i-j,..." (explicit mode).
        #[arg(long, value_delimiter = ',')]
        edges: Option<Vec<String>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CertifyArgs {
    instance: PathBuf,
    /// Override the model-tag default for the system regularizer.
    #[arg(long)]
    theta: Option<f64>,
    /// Override the model-tag default for the noise-block off-edge value.
    #[arg(long)]
    gamma: Option<f64>,
    /// Drop degree-zero noise nodes before certifying.
    #[arg(long)]
    prune_isolated: bool,
    /// Include the dense auxiliary and dual matrices in the report.
    #[arg(long)]
    emit_matrices: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance JSON or a plain edge list ("i j" per line, 0-indexed).
    input: PathBuf,
    /// Number of cliques; defaults to the instance's planted count.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    penalty: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the dense solution matrix in the report (needed by `round`).
    #[arg(long)]
    emit_x: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RoundArgs {
    /// Solution JSON produced by `solve --emit-x`.
    solution: PathBuf,
    /// Instance JSON the solution was computed from.
    instance: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    node_limit: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum)]
enum SweepModelArg {
    Random,
    Adversarial,
}

#[derive(Copy, Clone, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum)]
    model: SweepModelArg,
    /// Clique-size cell, e.g. --sizes 10,10; repeat for more cells.
    #[arg(long, required = true)]
    sizes: Vec<String>,
    /// Edge-probability grid values (random model); repeatable.
    #[arg(long)]
    p: Vec<f64>,
    /// Cross-degree budget grid values (adversarial model); repeatable.
    #[arg(long)]
    delta: Vec<f64>,
    /// Noise-budget grid values (adversarial model); repeatable.
    #[arg(long)]
    rho: Vec<f64>,
    /// Fix the total node count; extra nodes are derived per cell.
    #[arg(long)]
    n: Option<usize>,
    /// Extra-noise-node grid values (ignored when --n is given); repeatable.
    #[arg(long)]
    extra: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iterations: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixCheckArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    };
    std::process::exit(code);
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Json(_) | Error::Parse(_) => 3,
        _ => 2,
    }
}

fn emit(text: String, output: Option<&Path>) -> Result<(), Error> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_json<T: serde::Serialize>(value: &T, output: Option<&Path>) -> Result<(), Error> {
    emit(serde_json::to_string_pretty(value)?, output)
}

fn load(path: &Path) -> Result<PlantedInstance, Error> {
    let text = std::fs::read_to_string(path)?;
    instance_from_json(&text)
}

fn parse_edge_pairs(specs: &[String]) -> Result<Vec<(usize, usize)>, Error> {
    specs
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once('-')
                .ok_or_else(|| Error::Parameter(format!("edge '{s}' must have the form i-j")))?;
            let i = a
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad node index '{a}' in edge '{s}'")))?;
            let j = b
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad node index '{b}' in edge '{s}'")))?;
            Ok((i, j))
        })
        .collect()
}

/// Plain edge-list input: one "i j" pair per line, 0-indexed.
fn graph_from_edge_list(text: &str) -> Result<Graph, Error> {
    let mut edges = Vec::new();
    let mut max_node = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected 'i j'", lineno + 1)));
        };
        let i: usize = a
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad index '{a}'", lineno + 1)))?;
        let j: usize = b
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: bad index '{b}'", lineno + 1)))?;
        max_node = max_node.max(i).max(j);
        edges.push((i, j));
    }
    if edges.is_empty() {
        return Err(Error::Parse("edge list is empty".into()));
    }
    let mut graph = Graph::empty(max_node + 1);
    for (i, j) in edges {
        graph.add_edge(i, j)?;
    }
    Ok(graph)
}

#[derive(Deserialize)]
struct SolutionFile {
    x: Option<Vec<Vec<f64>>>,
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate { model } => match model {
            GenerateModel::Random {
                sizes,
                extra,
                p,
                seed,
                output,
            } => {
                let inst = generate_random_instance(&sizes, extra, p, seed)?;
                emit(kdc_core::instance_to_json(&inst), output.as_deref())
            }
            GenerateModel::Adversarial {
                sizes,
                extra,
                delta,
                rho,
                seed,
                edges,
                output,
            } => {
                let noise = match (edges, delta, rho) {
                    (Some(specs), None, None) => {
                        AdversarialNoise::Explicit(parse_edge_pairs(&specs)?)
                    }
                    (None, Some(delta), Some(rho)) => AdversarialNoise::Budget { delta, rho, seed },
                    _ => {
                        return Err(Error::Parameter(
                            "give either --edges, or both --delta and --rho".into(),
                        ))
                    }
                };
                let inst = generate_adversarial_instance(&sizes, extra, noise)?;
                emit(kdc_core::instance_to_json(&inst), output.as_deref())
            }
        },

        Command::Certify(args) => {
            let mut inst = load(&args.instance)?;
            let mut pruned = 0;
            if args.prune_isolated {
                let (kept, removed) = inst.prune_isolated_noise();
                inst = kept;
                pruned = removed.len();
            }
            let outcome = check_optimality(&inst, args.theta, args.gamma)?;
            let mut report = serde_json::to_value(CertificateReport::from_outcome(
                &outcome,
                args.emit_matrices,
            ))?;
            if args.prune_isolated {
                report["pruned_isolated_noise_nodes"] = serde_json::json!(pruned);
            }
            emit(serde_json::to_string_pretty(&report)?, args.output.as_deref())
        }

        Command::Solve(args) => {
            let text = std::fs::read_to_string(&args.input)?;
            // Instance JSON first; fall back to a plain edge list.
            let (graph, planted) = match instance_from_json(&text) {
                Ok(inst) => (inst.graph().clone(), Some(inst)),
                Err(_) => (graph_from_edge_list(&text)?, None),
            };
            let k = match (args.k, &planted) {
                (Some(k), _) => k,
                (None, Some(inst)) => inst.k(),
                (None, None) => {
                    return Err(Error::Parameter(
                        "--k is required for edge-list input".into(),
                    ))
                }
            };
            let opts = SolverOptions {
                tolerance: args.tolerance,
                max_iterations: args.max_iterations,
                penalty_parameter: args.penalty,
                seed: args.seed,
            };
            let sol = solve_relaxation(&graph, k, &opts)?;
            let rounded = round_solution(&sol.x, &graph, k);
            let exact = planted
                .as_ref()
                .map(|inst| recovery_check(&rounded.cliques, inst).exact_match);
            let report = SolutionReport::new(&sol, &rounded, exact, args.emit_x);
            emit_json(&report, args.output.as_deref())
        }

        Command::Round(args) => {
            let solution: SolutionFile =
                serde_json::from_str(&std::fs::read_to_string(&args.solution)?)?;
            let rows = solution.x.ok_or_else(|| {
                Error::Parameter(
                    "solution file has no dense matrix; rerun solve with --emit-x".into(),
                )
            })?;
            let inst = load(&args.instance)?;
            let n = rows.len();
            if n != inst.n_nodes() || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Parameter(format!(
                    "solution matrix is {n}x? but instance has {} nodes",
                    inst.n_nodes()
                )));
            }
            let mut x = SymMatrix::zeros(n);
            for (i, row) in rows.iter().enumerate() {
                for (j, &value) in row.iter().enumerate().take(i + 1) {
                    x.set(i, j, 0.5 * (value + rows[j][i]));
                }
            }
            let k = args.k.unwrap_or_else(|| inst.k());
            let rounded = round_solution(&x, inst.graph(), k);
            let recovery = recovery_check(&rounded.cliques, &inst);
            let report = serde_json::json!({
                "cliques": rounded.cliques,
                "rounding_complete": rounded.complete,
                "dropped_non_cliques": rounded.dropped_non_cliques,
                "exact_match": recovery.exact_match,
                "jaccard": recovery.jaccard,
            });
            emit(serde_json::to_string_pretty(&report)?, args.output.as_deref())
        }

        Command::Oracle(args) => {
            let inst = load(&args.instance)?;
            let k = args.k.unwrap_or_else(|| inst.k());
            let result = brute_force_kdc(inst.graph(), k, args.node_limit)?;
            emit_json(&result, args.output.as_deref())
        }

        Command::Sweep(args) => {
            let size_cells: Result<Vec<Vec<usize>>, Error> = args
                .sizes
                .iter()
                .map(|spec| {
                    spec.split(',')
                        .map(|tok| {
                            tok.trim().parse::<usize>().map_err(|_| {
                                Error::Parameter(format!("bad clique size '{tok}' in '{spec}'"))
                            })
                        })
                        .collect()
                })
                .collect();
            let size_cells = size_cells?;

            let mut cells = Vec::new();
            for sizes in &size_cells {
                let planted: usize = sizes.iter().sum();
                // The extra-node axis: derived from --n, or the --extra grid.
                let extras: Vec<usize> = match args.n {
                    Some(n) => vec![n.checked_sub(planted).ok_or_else(|| {
                        Error::Parameter(format!(
                            "--n {n} is smaller than the planted {planted} nodes"
                        ))
                    })?],
                    None if args.extra.is_empty() => vec![0],
                    None => args.extra.clone(),
                };
                for &extra in &extras {
                    match args.model {
                        SweepModelArg::Random => {
                            if args.p.is_empty() {
                                return Err(Error::Parameter(
                                    "random sweeps need at least one --p".into(),
                                ));
                            }
                            for &p in &args.p {
                                cells.push(SweepCell {
                                    model: SweepModel::Random { p },
                                    sizes: sizes.clone(),
                                    extra_nodes: extra,
                                });
                            }
                        }
                        SweepModelArg::Adversarial => {
                            if args.delta.is_empty() || args.rho.is_empty() {
                                return Err(Error::Parameter(
                                    "adversarial sweeps need at least one --delta and one --rho"
                                        .into(),
                                ));
                            }
                            for &delta in &args.delta {
                                for &rho in &args.rho {
                                    cells.push(SweepCell {
                                        model: SweepModel::Adversarial { delta, rho },
                                        sizes: sizes.clone(),
                                        extra_nodes: extra,
                                    });
                                }
                            }
                        }
                    }
                }
            }

            let spec = SweepSpec {
                cells,
                trials: args.trials,
                base_seed: args.seed,
                solver: SolverOptions {
                    tolerance: args.tolerance,
                    max_iterations: args.max_iterations,
                    ..Default::default()
                },
            };
            let rows = run_sweep(&spec)?;
            match args.format {
                OutputFormat::Csv => emit(sweep_csv(&rows), args.output.as_deref()),
                OutputFormat::Json => emit_json(&rows, args.output.as_deref()),
            }
        }

        Command::MatrixCheck(args) => {
            let out = matrix_check(args.n, args.p, args.trials, args.seed)?;
            match args.format {
                OutputFormat::Csv => emit(matrix_check_csv(&out), args.output.as_deref()),
                OutputFormat::Json => emit_json(&out, args.output.as_deref()),
            }
        }
    }
}
