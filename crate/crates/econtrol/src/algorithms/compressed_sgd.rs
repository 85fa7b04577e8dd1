//! Compressed SGD without any error compensation: each client sends
//! `C(g)` and the server averages what arrives. Kept as the baseline whose
//! compression bias never washes out.

use crate::error::Result;
use crate::rng::RngStream;
use crate::vector::DenseVector;

use super::{
    compress_into_uplink, mean_primary, AlgoConfig, Algorithm, ClientState, InitCtx, MethodId,
    ServerState, Uplink,
};

pub struct CompressedSgd;

impl Algorithm for CompressedSgd {
    fn id(&self) -> MethodId {
        MethodId::CompressedSgd
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        Ok(ctx.base_states())
    }

    fn client_round(
        &self,
        _client: &mut ClientState,
        g: &DenseVector,
        config: &AlgoConfig,
        rng: &mut RngStream,
    ) -> Result<Uplink> {
        Ok(Uplink::single(compress_into_uplink(
            &config.compressor,
            g,
            rng,
        )?))
    }

    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()> {
        let delta_mean = mean_primary(uplinks, server.clients, server.x.dim())?;
        server.x.axpy(-config.gamma, &delta_mean);
        Ok(())
    }
}
