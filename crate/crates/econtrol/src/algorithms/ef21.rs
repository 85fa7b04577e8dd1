//! EF21-style gradient-difference feedback, its heavy-ball variant, and the
//! warm-up routine that turns it into a bias-correction table producer.
//!
//! Client: `Delta = C(g - h)`, `h <- h + Delta` (the heavy-ball variant
//! feeds an exponential moving average `v` of the gradients instead of `g`).
//! Server: `h <- h + (1/n) sum Delta`, then `x <- x - gamma * h`, so the
//! step uses the estimator refreshed with this round's messages. With the
//! identity compressor the estimator equals the current mean gradient and
//! the method reduces to plain SGD.

use crate::compressors::CompressorSpec;
use crate::error::{Error, Result};
use crate::objectives::{GradientOracle, Problem};
use crate::rng::{derive_stream, RngStream, StreamDomain};
use crate::vector::DenseVector;

use super::{
    compress_into_uplink, mean_primary, AlgoConfig, Algorithm, ClientState, InitCtx, MethodId,
    ServerState, Uplink,
};

fn exact_gradient_init(ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
    let (mut server, mut clients) = ctx.base_states();
    for (i, client) in clients.iter_mut().enumerate() {
        client.h = ctx.problem.client_grad(i, ctx.x0);
        server.h.axpy(1.0 / ctx.problem.n() as f64, &client.h);
    }
    Ok((server, clients))
}

fn feedback_client_round(
    client: &mut ClientState,
    signal: &DenseVector,
    config: &AlgoConfig,
    rng: &mut RngStream,
) -> Result<Uplink> {
    let mut arg = signal.clone();
    arg.sub_assign(&client.h);
    let msg = compress_into_uplink(&config.compressor, &arg, rng)?;
    for (i, v) in msg.entries() {
        client.h[i] += v;
    }
    Ok(Uplink::single(msg))
}

fn feedback_server_round(
    server: &mut ServerState,
    uplinks: &[Uplink],
    config: &AlgoConfig,
) -> Result<()> {
    let delta_mean = mean_primary(uplinks, server.clients, server.x.dim())?;
    server.h.add_assign(&delta_mean);
    server.x.axpy(-config.gamma, &server.h);
    Ok(())
}

pub struct Ef21;

impl Algorithm for Ef21 {
    fn id(&self) -> MethodId {
        MethodId::Ef21
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        exact_gradient_init(ctx)
    }

    fn client_round(
        &self,
        client: &mut ClientState,
        g: &DenseVector,
        config: &AlgoConfig,
        rng: &mut RngStream,
    ) -> Result<Uplink> {
        feedback_client_round(client, g, config, rng)
    }

    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()> {
        feedback_server_round(server, uplinks, config)
    }
}

/// Heavy-ball reconstruction of a momentum EF21 baseline: the feedback
/// signal is `v = (1 - beta) v + beta g` with `v` seeded by the first
/// gradient. Not one of the reference updates; kept as a labeled extra.
pub struct Ef21Hb;

pub const DEFAULT_MOMENTUM: f64 = 0.1;

impl Algorithm for Ef21Hb {
    fn id(&self) -> MethodId {
        MethodId::Ef21Hb
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        exact_gradient_init(ctx)
    }

    fn client_round(
        &self,
        client: &mut ClientState,
        g: &DenseVector,
        config: &AlgoConfig,
        rng: &mut RngStream,
    ) -> Result<Uplink> {
        let beta = config.momentum.unwrap_or(DEFAULT_MOMENTUM);
        let v = match client.velocity.take() {
            None => g.clone(),
            Some(mut v) => {
                v.scale(1.0 - beta);
                v.axpy(beta, g);
                v
            }
        };
        let up = feedback_client_round(client, &v, config, rng)?;
        client.velocity = Some(v);
        Ok(up)
    }

    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()> {
        feedback_server_round(server, uplinks, config)
    }
}

/// Run the EF21 update for `rounds` as a preprocessing phase and return the
/// final per-client estimators, e.g. to seed `ec-approx`.
///
/// Per round: the iterate moves by the current aggregate, then every client
/// refreshes its estimator against the gradient at the new point, so after
/// one identity-compressed exact round the estimators equal `grad f_i(x_1)`.
/// `gamma` defaults to `delta / (100 L)`.
pub fn run_ef21_warmup(
    problem: &Problem,
    oracle: &GradientOracle,
    compressor: &CompressorSpec,
    rounds: u64,
    gamma: Option<f64>,
    master_seed: u64,
) -> Result<Vec<DenseVector>> {
    if compressor.dim != problem.d() {
        return Err(Error::DimensionMismatch {
            context: "run_ef21_warmup",
            expected: problem.d(),
            got: compressor.dim,
        });
    }
    let gamma = gamma.unwrap_or_else(|| compressor.delta() / (100.0 * problem.l()));
    let n = problem.n();
    let mut x = DenseVector::zeros(problem.d());
    let mut h: Vec<DenseVector> = (0..n).map(|i| problem.client_grad(i, &x)).collect();
    let mut h_mean = DenseVector::mean(&h);

    for t in 0..rounds {
        x.axpy(-gamma, &h_mean);
        for (i, hi) in h.iter_mut().enumerate() {
            let mut grad_rng = derive_stream(master_seed, StreamDomain::Warmup, i as u64, t + 1);
            let g = oracle.sample_gradient(problem, i, &x, &mut grad_rng)?;
            let mut arg = g;
            arg.sub_assign(hi);
            let mut comp_rng = derive_stream(master_seed, StreamDomain::Compressor, i as u64, t + 1);
            let msg = compress_into_uplink(compressor, &arg, &mut comp_rng)?;
            for (j, v) in msg.entries() {
                hi[j] += v;
                h_mean[j] += v / n as f64;
            }
        }
    }
    Ok(h)
}
