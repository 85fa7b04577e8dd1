//! The synchronous simulation loop: oracle draws, client rounds, server
//! rounds, bit accounting, metric collection, and parameter sweeps.
//!
//! Runs are deterministic: every random draw comes from a stream keyed by
//! `(master_seed, purpose, client, round)`, so identical configurations
//! produce bit-identical traces regardless of execution order. Two cheap
//! algebraic identities are monitored at every round barrier: the
//! virtual-iterate link `x_t - x~_t = gamma * mean(e_t^i)` for the
//! error-compensated methods, and agreement between the server aggregate
//! and the mean client estimator for the tracking methods.

mod config;
mod presets;
mod trace;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algorithms::{
    self, ApproxH, ClientState, MethodId, ServerState, Uplink,
};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::objectives::Problem;
use crate::rng::{derive_stream, StreamDomain};
use crate::vector::DenseVector;

pub use config::{
    build_problem, AlgorithmConfig, CompressorConfig, OracleConfig, ProblemConfig, RunConfig,
};
pub use presets::{
    preset, preset_bundle, preset_by_name, toy_theory_gamma, PresetBundle, PresetName, TuneSpec,
    ETA_GRID, GAMMA_GRID, SPEEDUP_CLIENTS,
};
pub use trace::{format_float, to_csv_string, write_csv, TraceColumns, TraceRecord};

/// Hard ceiling for the per-round identity checks, relative to state scale.
/// A violation means an implementation bug, not an unlucky run.
const INVARIANT_HARD_LIMIT: f64 = 1e-6;

/// Stream feeding client `i`'s oracle draw in optimization round `t`.
/// Round tags start at 1; tag 0 is reserved for pre-round estimator draws,
/// so every method sees the same gradient sequence under a shared seed.
pub fn gradient_stream(master_seed: u64, client: usize, round: u64) -> crate::rng::RngStream {
    derive_stream(master_seed, StreamDomain::Gradient, client as u64, round + 1)
}

/// Stream feeding client `i`'s compressor randomness in round `t`.
pub fn compressor_stream(master_seed: u64, client: usize, round: u64) -> crate::rng::RngStream {
    derive_stream(master_seed, StreamDomain::Compressor, client as u64, round + 1)
}

/// Everything a finished run exposes.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TraceRecord>,
    pub columns: TraceColumns,
    pub f_star: Option<f64>,
    pub final_server: ServerState,
    pub final_clients: Vec<ClientState>,
    /// Max over rounds of `||(x - x~) - gamma * mean e|| / (1 + ||x||)`.
    pub max_virtual_residual: f64,
    /// Max over rounds of `||h_server - mean h_client||`.
    pub max_estimator_gap: f64,
    /// Round after which the iterate went non-finite, if any.
    pub stopped_early: Option<u64>,
}

impl RunOutput {
    pub fn final_record(&self) -> &TraceRecord {
        self.records.last().expect("runs emit at least one record")
    }
}

/// Execute one configured run.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let problem = build_problem(&config.problem)?;
    let oracle = config.oracle.to_oracle();
    oracle.validate(&problem)?;
    let algo_config = config.algo_config(problem.d())?;
    let method = algo_config.method;

    let x0 = match &config.x0 {
        None => DenseVector::zeros(problem.d()),
        Some(values) => {
            if values.len() != problem.d() {
                return Err(Error::Config(format!(
                    "x0: expected dimension {}, got {}",
                    problem.d(),
                    values.len()
                )));
            }
            DenseVector::from_vec(values.clone())
        }
    };

    // ec-approx consumes a frozen estimator table produced up front.
    let warm_h: Option<Vec<DenseVector>> = match (&algo_config.approx_h, method) {
        (Some(ApproxH::Warmup { rounds, gamma }), _) => Some(algorithms::run_ef21_warmup(
            &problem,
            &oracle,
            &algo_config.compressor,
            *rounds,
            *gamma,
            config.master_seed,
        )?),
        (Some(ApproxH::Zero), _) => Some(vec![DenseVector::zeros(problem.d()); problem.n()]),
        (None, MethodId::EcApprox) => {
            return Err(Error::Config(
                "algorithm.approx_h: required for ec-approx".into(),
            ))
        }
        (None, _) => None,
    };

    let ctx = algorithms::InitCtx {
        problem: &problem,
        oracle: &oracle,
        config: &algo_config,
        x0: &x0,
        master_seed: config.master_seed,
        warm_h: warm_h.as_deref(),
    };
    let (mut server, mut clients) = algorithms::init(method, &ctx)?;

    let columns = TraceColumns {
        dist_sq: problem.x_star().is_some(),
        test_acc: problem.test_accuracy(&x0).is_some(),
        f_gap: config.diagnostics && problem.f_star().is_some(),
        e_avg: config.diagnostics,
        h_avg: config.diagnostics,
        x_dist_sq: config.diagnostics && problem.x_star().is_some(),
    };

    let n = problem.n();
    let mut records: Vec<TraceRecord> = Vec::new();
    let mut bits: u64 = 0;
    let mut tracker = InvariantTracker::default();
    let mut stopped_early = None;

    let mut grads: Vec<DenseVector> = Vec::with_capacity(n);
    for t in 0..config.rounds {
        grads.clear();
        for i in 0..n {
            let mut rng = gradient_stream(config.master_seed, i, t);
            grads.push(oracle.sample_gradient(&problem, i, &server.x, &mut rng)?);
        }

        if t % config.eval_every == 0 {
            records.push(make_record(
                &problem, &server, &clients, &grads, &algo_config, &columns, bits, config,
            )?);
        }

        let mut uplinks: Vec<Uplink> = Vec::with_capacity(n);
        for (i, client) in clients.iter_mut().enumerate() {
            let mut rng = compressor_stream(config.master_seed, i, t);
            let up = algorithms::client_round(method, client, &grads[i], &algo_config, &mut rng)?;
            bits += up.bits();
            uplinks.push(up);
        }
        let grad_mean = DenseVector::mean(&grads);
        algorithms::server_round(method, &mut server, &uplinks, &grad_mean, &algo_config)?;

        if server.x.is_finite() {
            tracker.update(method, &algo_config, &server, &clients)?;
        } else {
            // Record the blow-up row and stop; the trace stays well-formed.
            records.push(make_record(
                &problem, &server, &clients, &grads, &algo_config, &columns, bits, config,
            )?);
            stopped_early = Some(server.round);
            break;
        }
    }

    if stopped_early.is_none() {
        let final_grads: Vec<DenseVector> = if config.diagnostics {
            let mut gs = Vec::with_capacity(n);
            for i in 0..n {
                let mut rng = gradient_stream(config.master_seed, i, config.rounds);
                gs.push(oracle.sample_gradient(&problem, i, &server.x, &mut rng)?);
            }
            gs
        } else {
            grads.clone()
        };
        records.push(make_record(
            &problem,
            &server,
            &clients,
            &final_grads,
            &algo_config,
            &columns,
            bits,
            config,
        )?);
    }

    Ok(RunOutput {
        records,
        columns,
        f_star: problem.f_star(),
        final_server: server,
        final_clients: clients,
        max_virtual_residual: tracker.max_virtual_residual,
        max_estimator_gap: tracker.max_estimator_gap,
        stopped_early,
    })
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    problem: &Problem,
    server: &ServerState,
    clients: &[ClientState],
    grads: &[DenseVector],
    algo_config: &algorithms::AlgoConfig,
    columns: &TraceColumns,
    bits: u64,
    config: &RunConfig,
) -> Result<TraceRecord> {
    let loss = problem.value(&server.x);
    let grad_norm_sq = problem.full_grad(&server.x).norm_sq();
    let mut record = TraceRecord {
        round: server.round,
        bits,
        loss,
        grad_norm_sq,
        dist_sq: None,
        test_acc: None,
        f_gap: None,
        e_avg: None,
        h_avg: None,
        x_dist_sq: None,
    };
    if columns.dist_sq {
        record.dist_sq = problem.x_star().map(|xs| server.x.dist_sq(xs));
    }
    if columns.test_acc {
        record.test_acc = problem.test_accuracy(&server.x);
    }
    if config.diagnostics {
        let snap = diagnostics::snapshot(problem, server, clients, grads, algo_config)?;
        record.f_gap = if columns.f_gap { snap.f_gap } else { None };
        record.e_avg = columns.e_avg.then_some(snap.e_avg);
        record.h_avg = columns.h_avg.then_some(snap.h_avg);
        record.x_dist_sq = if columns.x_dist_sq {
            snap.x_virtual_dist_sq
        } else {
            None
        };
    }
    Ok(record)
}

/// Running state of the per-round algebraic checks. Rounding drift is
/// cumulative and proportional to the scales a trajectory has visited, so
/// the bug detector compares residuals against the largest scale seen so
/// far rather than the (possibly re-contracted) current one.
#[derive(Debug, Clone, Default)]
struct InvariantTracker {
    max_virtual_residual: f64,
    max_estimator_gap: f64,
    max_identity_scale: f64,
    max_estimator_scale: f64,
}

impl InvariantTracker {
    fn update(
        &mut self,
        method: MethodId,
        algo_config: &algorithms::AlgoConfig,
        server: &ServerState,
        clients: &[ClientState],
    ) -> Result<()> {
        if method.has_error_state() {
            let mut e_mean = DenseVector::zeros(server.x.dim());
            for c in clients {
                e_mean.add_assign(&c.e);
            }
            e_mean.scale(1.0 / clients.len() as f64);
            let mut residual = server.x.sub(&server.x_virtual);
            residual.axpy(-algo_config.gamma, &e_mean);
            let norm = residual.norm();
            self.max_virtual_residual =
                self.max_virtual_residual.max(norm / (1.0 + server.x.norm()));
            let scale = 1.0
                + server.x.norm()
                + server.x_virtual.norm()
                + algo_config.gamma.abs() * e_mean.norm();
            self.max_identity_scale = self.max_identity_scale.max(scale);
            if norm > INVARIANT_HARD_LIMIT * self.max_identity_scale {
                return Err(Error::Invariant(format!(
                    "virtual-iterate link broke at round {}: residual {norm:.3e} at \
                     historical scale {:.3e}",
                    server.round, self.max_identity_scale
                )));
            }
        }
        if method.tracks_estimator() {
            let mut h_mean = DenseVector::zeros(server.h.dim());
            for c in clients {
                h_mean.add_assign(&c.h);
            }
            h_mean.scale(1.0 / clients.len() as f64);
            let gap = server.h.dist_sq(&h_mean).sqrt();
            self.max_estimator_gap = self.max_estimator_gap.max(gap);
            self.max_estimator_scale = self.max_estimator_scale.max(1.0 + server.h.norm());
            if gap > INVARIANT_HARD_LIMIT * self.max_estimator_scale {
                return Err(Error::Invariant(format!(
                    "server estimator drifted from client mean at round {}: gap {gap:.3e}",
                    server.round
                )));
            }
        }
        Ok(())
    }
}

/// Stationary error level: mean of `loss - f_star` (or, without a known
/// optimal value, of the squared distance to the minimizer) over the final
/// `tail_fraction` of the records.
pub fn plateau_error(
    records: &[TraceRecord],
    f_star: Option<f64>,
    tail_fraction: f64,
) -> Result<f64> {
    if records.len() < 10 {
        return Err(Error::Config(format!(
            "plateau_error needs at least 10 records, got {}",
            records.len()
        )));
    }
    if !(0.0 < tail_fraction && tail_fraction <= 1.0) {
        return Err(Error::Config("tail_fraction must lie in (0, 1]".into()));
    }
    let count = ((records.len() as f64 * tail_fraction).floor() as usize).max(1);
    let tail = &records[records.len() - count..];
    let values: Vec<f64> = match f_star {
        Some(fs) => tail.iter().map(|r| r.loss - fs).collect(),
        None => tail
            .iter()
            .map(|r| r.dist_sq.ok_or_else(|| {
                Error::Config("plateau_error: no optimal value and no distance metric".into())
            }))
            .collect::<Result<_>>()?,
    };
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Default plateau window.
pub const PLATEAU_TAIL: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepCriterion {
    /// Loss of the last record among runs that did not diverge.
    FinalLoss,
    /// Smallest loss seen anywhere in the trace among non-diverged runs.
    MinLossNoDivergence,
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub gamma: f64,
    pub eta: Option<f64>,
    pub config: RunConfig,
    pub output: RunOutput,
    pub diverged: bool,
    /// Selection score; absent for diverged runs.
    pub score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub cells: Vec<SweepCell>,
    /// Index into `cells` of the selected configuration; `None` when every
    /// cell diverged.
    pub best: Option<usize>,
}

impl SweepOutcome {
    pub fn best_cell(&self) -> Result<&SweepCell> {
        self.best
            .map(|i| &self.cells[i])
            .ok_or(Error::NoStableConfiguration)
    }
}

/// A run is counted as diverged when any recorded loss is non-finite, the
/// iterate blew up, or the loss exceeds a thousand times the initial loss
/// (the threshold floor handles start points where the loss is ~0).
pub fn run_diverged(output: &RunOutput) -> bool {
    if output.stopped_early.is_some() {
        return true;
    }
    let initial = output.records[0].loss;
    let threshold = 1e3 * initial.abs().max(1.0);
    output
        .records
        .iter()
        .any(|r| !r.loss.is_finite() || r.loss > threshold)
}

/// Run the Cartesian product of `gammas` x `etas` around `base` and select
/// the best non-diverged cell under `criterion` (ties prefer the smaller
/// stepsize, then the smaller feedback strength).
///
/// An empty `etas` grid keeps the base configuration's feedback strength.
pub fn sweep(
    base: &RunConfig,
    gammas: &[f64],
    etas: &[f64],
    criterion: SweepCriterion,
) -> Result<SweepOutcome> {
    if gammas.is_empty() {
        return Err(Error::Config("sweep: gamma grid must be nonempty".into()));
    }
    let eta_choices: Vec<Option<f64>> = if etas.is_empty() {
        vec![base.algorithm.eta]
    } else {
        etas.iter().copied().map(Some).collect()
    };

    let mut cell_configs = Vec::new();
    for &gamma in gammas {
        for eta in &eta_choices {
            let mut config = base.clone();
            config.algorithm.gamma = Some(gamma);
            config.algorithm.eta = *eta;
            config.resolve()?;
            cell_configs.push((gamma, *eta, config));
        }
    }

    let cells: Vec<SweepCell> = cell_configs
        .into_par_iter()
        .map(|(gamma, eta, config)| -> Result<SweepCell> {
            let output = run(&config)?;
            let diverged = run_diverged(&output);
            let score = if diverged {
                None
            } else {
                Some(match criterion {
                    SweepCriterion::FinalLoss => output.final_record().loss,
                    SweepCriterion::MinLossNoDivergence => output
                        .records
                        .iter()
                        .map(|r| r.loss)
                        .fold(f64::INFINITY, f64::min),
                })
            };
            Ok(SweepCell {
                gamma,
                eta,
                config,
                output,
                diverged,
                score,
            })
        })
        .collect::<Result<_>>()?;

    let mut best: Option<usize> = None;
    for (i, cell) in cells.iter().enumerate() {
        let Some(score) = cell.score else { continue };
        best = match best {
            None => Some(i),
            Some(j) => {
                let incumbent = &cells[j];
                let inc_score = incumbent.score.unwrap();
                let better = score < inc_score
                    || (score == inc_score
                        && (cell.gamma, cell.eta.unwrap_or(0.0))
                            < (incumbent.gamma, incumbent.eta.unwrap_or(0.0)));
                if better {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    Ok(SweepOutcome { cells, best })
}
