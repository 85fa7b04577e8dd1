//! Error compensation with a frozen per-client bias-correction vector.
//!
//! Both variants compress `e + g - h_fixed` and keep the residual:
//!
//! * `ec-ideal` freezes `h_fixed^i = grad f_i(x_star)` — it needs the
//!   problem's closed-form minimizer;
//! * `ec-approx` freezes a supplied approximation (typically the output of
//!   an EF21 warm-up; the all-zero table recovers classic behavior with a
//!   heterogeneity-dependent bias floor).
//!
//! Server: `x <- x - gamma * h_bar - (gamma/n) * sum Delta`, where `h_bar`
//! is the mean of the frozen vectors, stored once at init.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::DenseVector;

use super::{
    compress_into_uplink, mean_primary, AlgoConfig, Algorithm, ClientState, InitCtx, MethodId,
    ServerState, Uplink,
};

fn bias_corrected_client_round(
    client: &mut ClientState,
    g: &DenseVector,
    config: &AlgoConfig,
    rng: &mut RngStream,
) -> Result<Uplink> {
    let h_fixed = client
        .h_fixed
        .as_ref()
        .ok_or_else(|| Error::Invariant("bias-corrected client without h_fixed".into()))?;
    let mut arg = client.e.add(g);
    arg.sub_assign(h_fixed);
    let msg = compress_into_uplink(&config.compressor, &arg, rng)?;
    client.e.add_assign(g);
    let h_fixed = client.h_fixed.as_ref().unwrap();
    for j in 0..client.e.dim() {
        client.e[j] -= h_fixed[j];
    }
    for (i, v) in msg.entries() {
        client.e[i] -= v;
    }
    Ok(Uplink::single(msg))
}

fn bias_corrected_server_round(
    server: &mut ServerState,
    uplinks: &[Uplink],
    config: &AlgoConfig,
) -> Result<()> {
    let delta_mean = mean_primary(uplinks, server.clients, server.x.dim())?;
    // server.h holds the constant mean of the frozen vectors.
    server.x.axpy(-config.gamma, &server.h);
    server.x.axpy(-config.gamma, &delta_mean);
    Ok(())
}

pub struct EcIdeal;

impl Algorithm for EcIdeal {
    fn id(&self) -> MethodId {
        MethodId::EcIdeal
    }

    fn validate(&self, ctx: &InitCtx<'_>) -> Result<()> {
        if ctx.problem.x_star().is_none() {
            return Err(Error::Incompatible(
                "ec-ideal needs a problem with a known minimizer".into(),
            ));
        }
        Ok(())
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        let x_star = ctx.problem.x_star().ok_or_else(|| {
            Error::Incompatible("ec-ideal needs a problem with a known minimizer".into())
        })?;
        let (mut server, mut clients) = ctx.base_states();
        for (i, client) in clients.iter_mut().enumerate() {
            let h = ctx.problem.client_grad(i, x_star);
            server.h.axpy(1.0 / ctx.problem.n() as f64, &h);
            client.h_fixed = Some(h);
        }
        Ok((server, clients))
    }

    fn client_round(
        &self,
        client: &mut ClientState,
        g: &DenseVector,
        config: &AlgoConfig,
        rng: &mut RngStream,
    ) -> Result<Uplink> {
        bias_corrected_client_round(client, g, config, rng)
    }

    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()> {
        bias_corrected_server_round(server, uplinks, config)
    }
}

pub struct EcApprox;

impl Algorithm for EcApprox {
    fn id(&self) -> MethodId {
        MethodId::EcApprox
    }

    fn validate(&self, ctx: &InitCtx<'_>) -> Result<()> {
        match ctx.warm_h {
            None => Err(Error::Config(
                "algorithm.approx_h: ec-approx needs a bias-correction table".into(),
            )),
            Some(table) if table.len() != ctx.problem.n() => Err(Error::Config(format!(
                "algorithm.approx_h: table has {} entries for {} clients",
                table.len(),
                ctx.problem.n()
            ))),
            Some(_) => Ok(()),
        }
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        self.validate(ctx)?;
        let table = ctx.warm_h.unwrap();
        let (mut server, mut clients) = ctx.base_states();
        for (client, h) in clients.iter_mut().zip(table.iter()) {
            if h.dim() != ctx.problem.d() {
                return Err(Error::DimensionMismatch {
                    context: "ec-approx table",
                    expected: ctx.problem.d(),
                    got: h.dim(),
                });
            }
            server.h.axpy(1.0 / ctx.problem.n() as f64, h);
            client.h_fixed = Some(h.clone());
        }
        Ok((server, clients))
    }

    fn client_round(
        &self,
        client: &mut ClientState,
        g: &DenseVector,
        config: &AlgoConfig,
        rng: &mut RngStream,
    ) -> Result<Uplink> {
        bias_corrected_client_round(client, g, config, rng)
    }

    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()> {
        bias_corrected_server_round(server, uplinks, config)
    }
}
