//! Error-compensated SGD with bias correction driven by a second
//! contractive compressor. Each round every client sends two messages:
//!
//! ```text
//! Delta     = C1(e + g - h)      (error-compensated increment)
//! Delta_hat = C2(g - h)          (estimator learning signal)
//! e <- e + g - h - Delta
//! h <- h + Delta_hat
//! ```
//!
//! Server: `x <- x - gamma * h - (gamma/n) sum Delta`, then
//! `h <- h + (1/n) sum Delta_hat`, mirroring the client estimator update so
//! the aggregate stays the mean of the client estimators. Both uplinks are
//! billed.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::DenseVector;

use super::{
    compress_into_uplink, mean_primary, AlgoConfig, Algorithm, ClientState, InitCtx, MethodId,
    ServerState, Uplink,
};

pub struct DoubleContractive;

impl Algorithm for DoubleContractive {
    fn id(&self) -> MethodId {
        MethodId::DoubleContractive
    }

    fn validate(&self, ctx: &InitCtx<'_>) -> Result<()> {
        if ctx.config.compressor2.is_none() {
            return Err(Error::Config(
                "algorithm.compressor2: required for double-contractive".into(),
            ));
        }
        Ok(())
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        self.validate(ctx)?;
        let (mut server, mut clients) = ctx.base_states();
        for (i, client) in clients.iter_mut().enumerate() {
            client.h = ctx.draw_h0(i)?;
            server.h.axpy(1.0 / ctx.problem.n() as f64, &client.h);
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
        let c2 = config.compressor2.as_ref().ok_or_else(|| {
            Error::Config("algorithm.compressor2: required for double-contractive".into())
        })?;
        let mut learn = g.clone();
        learn.sub_assign(&client.h);
        let mut arg = client.e.clone();
        arg.add_assign(&learn);
        let primary = compress_into_uplink(&config.compressor, &arg, rng)?;
        let secondary = compress_into_uplink(c2, &learn, rng)?;

        client.e = arg;
        for (i, v) in primary.entries() {
            client.e[i] -= v;
        }
        for (i, v) in secondary.entries() {
            client.h[i] += v;
        }
        Ok(Uplink {
            primary,
            secondary: Some(secondary),
        })
    }

    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()> {
        let delta_mean = mean_primary(uplinks, server.clients, server.x.dim())?;
        let mut learn_mean = DenseVector::zeros(server.x.dim());
        for up in uplinks {
            let hat = up.secondary.as_ref().ok_or_else(|| {
                Error::Invariant("double-contractive uplink missing second message".into())
            })?;
            for (i, v) in hat.entries() {
                learn_mean[i] += v;
            }
        }
        learn_mean.scale(1.0 / server.clients as f64);

        server.x.axpy(-config.gamma, &server.h);
        server.x.axpy(-config.gamma, &delta_mean);
        server.h.add_assign(&learn_mean);
        Ok(())
    }
}
