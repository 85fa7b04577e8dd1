//! Analysis quantities as runtime observables: per-round energy terms,
//! heterogeneity at the optimum, and output-iterate selection rules.
//!
//! The energies are single-trajectory surrogates of in-expectation
//! quantities; they are monitors, not the proved statements.

use rand::Rng;

use crate::algorithms::{AlgoConfig, ClientState, ServerState};
use crate::error::{Error, Result};
use crate::objectives::Problem;
use crate::rng::RngStream;
use crate::vector::DenseVector;

/// One round's worth of analysis observables, taken at a round barrier with
/// that round's raw gradients in hand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagSnapshot {
    pub round: u64,
    /// `f(x_t) - f_star`; absent when the optimal value is unknown.
    pub f_gap: Option<f64>,
    /// Mean squared error-accumulator norm `(1/n) sum ||e_t^i||^2`.
    pub e_avg: f64,
    /// Mean squared compression-argument norm
    /// `(1/n) sum ||eta e_t^i + g_t^i - h_t^i||^2` (with `eta = 0` for
    /// methods without a feedback knob).
    pub h_avg: f64,
    /// `||x~_t - x_star||^2`; absent when the minimizer is unknown.
    pub x_virtual_dist_sq: Option<f64>,
    /// Exact `||grad f(x_t)||^2`, independent of the oracle's noise.
    pub grad_norm_sq: f64,
}

/// Compute the observables for the current barrier state.
pub fn snapshot(
    problem: &Problem,
    server: &ServerState,
    clients: &[ClientState],
    last_gradients: &[DenseVector],
    config: &AlgoConfig,
) -> Result<DiagSnapshot> {
    if clients.len() != last_gradients.len() {
        return Err(Error::Invariant(format!(
            "snapshot got {} gradients for {} clients",
            last_gradients.len(),
            clients.len()
        )));
    }
    let n = clients.len() as f64;
    let eta = config.eta.unwrap_or(0.0);

    let e_avg = clients.iter().map(|c| c.e.norm_sq()).sum::<f64>() / n;
    let h_avg = clients
        .iter()
        .zip(last_gradients.iter())
        .map(|(c, g)| {
            let mut arg = c.e.scaled(eta);
            arg.add_assign(g);
            arg.sub_assign(&c.h);
            arg.norm_sq()
        })
        .sum::<f64>()
        / n;

    let grad_norm_sq = problem.full_grad(&server.x).norm_sq();
    let f_gap = problem.f_star().map(|fs| problem.value(&server.x) - fs);
    let x_virtual_dist_sq = problem.x_star().map(|xs| server.x_virtual.dist_sq(xs));

    Ok(DiagSnapshot {
        round: server.round,
        f_gap,
        e_avg,
        h_avg,
        x_virtual_dist_sq,
        grad_norm_sq,
    })
}

/// Output-iterate selection law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputRule {
    /// Index `t` drawn with probability proportional to
    /// `(1 - mu_gamma / 2)^-(t+1)`; later iterates weigh more.
    WeightedGeometric { mu_gamma: f64 },
    /// Uniform over all recorded iterates.
    Uniform,
}

/// Sample an iterate index from a trace of `len` iterates under `rule`.
/// Weights are normalized in the log domain so long traces with strong
/// geometric growth stay finite.
pub fn pick_output(len: usize, rule: OutputRule, rng: &mut RngStream) -> Result<usize> {
    if len == 0 {
        return Err(Error::Config("pick_output on an empty trace".into()));
    }
    match rule {
        OutputRule::Uniform => Ok(rng.gen_range(0..len)),
        OutputRule::WeightedGeometric { mu_gamma } => {
            let q: f64 = 1.0 - mu_gamma / 2.0;
            if !(q > 0.0 && q <= 1.0) {
                return Err(Error::Config(format!(
                    "pick_output: mu*gamma = {mu_gamma} leaves no valid weight base"
                )));
            }
            // log w_t = -(t+1) ln q, increasing in t when q < 1.
            let log_w = |t: usize| -((t + 1) as f64) * q.ln();
            let max_log = log_w(len - 1).max(log_w(0));
            let total: f64 = (0..len).map(|t| (log_w(t) - max_log).exp()).sum();
            let mut u = rng.gen_range(0.0..1.0) * total;
            for t in 0..len {
                u -= (log_w(t) - max_log).exp();
                if u <= 0.0 {
                    return Ok(t);
                }
            }
            Ok(len - 1)
        }
    }
}

/// Client-drift magnitude at the optimum: `(1/n) sum ||grad f_i(x_star)||^2`.
/// `None` when the problem has no known minimizer.
pub fn heterogeneity_at_opt(problem: &Problem) -> Option<f64> {
    let xs = problem.x_star()?;
    let n = problem.n();
    let total: f64 = (0..n)
        .map(|i| problem.client_grad(i, xs).norm_sq())
        .sum();
    Some(total / n as f64)
}
