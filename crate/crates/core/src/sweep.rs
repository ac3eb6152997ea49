//! Batch experiment harness: for each parameter cell and trial, generate an
//! instance, certify it, solve the relaxation, round, and compare against the
//! planted truth. Rows aggregate per-cell empirical rates.

use rayon::prelude::*;
use serde::Serialize;

use crate::certificate::{check_optimality, CertifyOutcome};
use crate::error::Result;
use crate::instance::{
    generate_adversarial_instance, generate_random_instance, AdversarialNoise,
};
use crate::solver::{recovery_check, round_solution, solve_relaxation, SolverOptions};

/// Noise model of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SweepModel {
    Random { p: f64 },
    Adversarial { delta: f64, rho: f64 },
}

/// One grid cell: model parameters plus instance shape.
#[derive(Debug, Clone, Serialize)]
pub struct SweepCell {
    pub model: SweepModel,
    pub sizes: Vec<usize>,
    pub extra_nodes: usize,
}

/// Full sweep specification.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub cells: Vec<SweepCell>,
    pub trials: usize,
    pub base_seed: u64,
    pub solver: SolverOptions,
}

/// Aggregated outcome of one cell.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub model: String,
    pub n_nodes: usize,
    /// Clique sizes joined with `|`.
    pub sizes: String,
    pub extra_nodes: usize,
    pub p: Option<f64>,
    pub delta: Option<f64>,
    pub rho: Option<f64>,
    pub trials: usize,
    /// Fraction of trials whose rounded solution equals the planted cliques.
    pub recovery_rate: f64,
    /// Fraction of trials whose certificate proves optimality.
    pub certificate_rate: f64,
    /// Mean `||S_tilde||` over trials with a built certificate.
    pub mean_s_tilde_norm: f64,
    /// Mean `r_hat - 1` over trials with a built certificate.
    pub mean_threshold: f64,
    pub mean_solve_iterations: f64,
    /// Trials that errored in some stage (never aborts the sweep).
    pub failures: usize,
}

struct TrialOutcome {
    recovered: bool,
    certified: bool,
    s_tilde_norm: Option<f64>,
    threshold: Option<f64>,
    iterations: usize,
    failed: bool,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Independent per-trial stream derived from `(base, cell, trial)`.
pub fn derive_seed(base: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(base ^ splitmix64(cell)) ^ trial)
}

fn run_trial(cell: &SweepCell, solver: &SolverOptions, seed: u64) -> TrialOutcome {
    let failed = TrialOutcome {
        recovered: false,
        certified: false,
        s_tilde_norm: None,
        threshold: None,
        iterations: 0,
        failed: true,
    };
    let inst = match cell.model {
        SweepModel::Random { p } => {
            generate_random_instance(&cell.sizes, cell.extra_nodes, p, seed)
        }
        SweepModel::Adversarial { delta, rho } => generate_adversarial_instance(
            &cell.sizes,
            cell.extra_nodes,
            AdversarialNoise::Budget { delta, rho, seed },
        ),
    };
    let inst = match inst {
        Ok(inst) => inst,
        Err(_) => return failed,
    };

    let (certified, s_tilde_norm, threshold) = match check_optimality(&inst, None, None) {
        Ok(CertifyOutcome::Built(cert)) => {
            (cert.optimal, Some(cert.s_tilde_norm), Some(cert.threshold))
        }
        Ok(CertifyOutcome::Inapplicable(_)) => (false, None, None),
        Err(_) => return failed,
    };

    let sol = match solve_relaxation(inst.graph(), inst.k(), solver) {
        Ok(sol) => sol,
        Err(_) => return failed,
    };
    let rounded = round_solution(&sol.x, inst.graph(), inst.k());
    let recovered = recovery_check(&rounded.cliques, &inst).exact_match;

    TrialOutcome {
        recovered,
        certified,
        s_tilde_norm,
        threshold,
        iterations: sol.iterations,
        failed: false,
    }
}

/// Runs every cell of the sweep. Trials execute concurrently; aggregation is
/// performed in trial order so output is independent of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.cells.is_empty() {
        return Err(crate::error::Error::Parameter("sweep grid is empty".into()));
    }
    if spec.trials == 0 {
        return Err(crate::error::Error::Parameter(
            "trials must be at least 1".into(),
        ));
    }
    let mut rows = Vec::with_capacity(spec.cells.len());
    for (cell_idx, cell) in spec.cells.iter().enumerate() {
        let outcomes: Vec<TrialOutcome> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(spec.base_seed, cell_idx as u64, trial as u64);
                run_trial(cell, &spec.solver, seed)
            })
            .collect();

        let mut recovered = 0usize;
        let mut certified = 0usize;
        let mut failures = 0usize;
        let mut norm_sum = 0.0f64;
        let mut threshold_sum = 0.0f64;
        let mut cert_count = 0usize;
        let mut iter_sum = 0usize;
        for o in &outcomes {
            recovered += o.recovered as usize;
            certified += o.certified as usize;
            failures += o.failed as usize;
            if let (Some(nrm), Some(thr)) = (o.s_tilde_norm, o.threshold) {
                norm_sum += nrm;
                threshold_sum += thr;
                cert_count += 1;
            }
            iter_sum += o.iterations;
        }

        let trials = spec.trials;
        let (p, delta, rho, model) = match cell.model {
            SweepModel::Random { p } => (Some(p), None, None, "random"),
            SweepModel::Adversarial { delta, rho } => {
                (None, Some(delta), Some(rho), "adversarial")
            }
        };
        rows.push(SweepRow {
            model: model.to_string(),
            n_nodes: cell.sizes.iter().sum::<usize>() + cell.extra_nodes,
            sizes: cell
                .sizes
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("|"),
            extra_nodes: cell.extra_nodes,
            p,
            delta,
            rho,
            trials,
            recovery_rate: recovered as f64 / trials as f64,
            certificate_rate: certified as f64 / trials as f64,
            mean_s_tilde_norm: if cert_count > 0 {
                norm_sum / cert_count as f64
            } else {
                f64::NAN
            },
            mean_threshold: if cert_count > 0 {
                threshold_sum / cert_count as f64
            } else {
                f64::NAN
            },
            mean_solve_iterations: iter_sum as f64 / trials as f64,
            failures,
        });
    }
    Ok(rows)
}

/// Versioned CSV header matching the row fields exactly.
pub const SWEEP_CSV_HEADER: &str = "model,n_nodes,sizes,extra_nodes,p,delta,rho,trials,\
recovery_rate,certificate_rate,mean_s_tilde_norm,mean_threshold,mean_solve_iterations,failures";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut text = String::from(SWEEP_CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.model,
            r.n_nodes,
            r.sizes,
            r.extra_nodes,
            opt(r.p),
            opt(r.delta),
            opt(r.rho),
            r.trials,
            r.recovery_rate,
            r.certificate_rate,
            r.mean_s_tilde_norm,
            r.mean_threshold,
            r.mean_solve_iterations,
            r.failures
        ));
    }
    text
}
