//! Plain distributed SGD: clients send their raw gradients densely; the
//! server averages and steps. The reference point for the identity-
//! compressor equivalence checks and the uncompressed-bits baseline.

use crate::compressors::SparseMessage;
use crate::error::Result;
use crate::rng::RngStream;
use crate::vector::DenseVector;

use super::{
    mean_primary, AlgoConfig, Algorithm, ClientState, InitCtx, MethodId, ServerState, Uplink,
};

pub struct Sgd;

impl Algorithm for Sgd {
    fn id(&self) -> MethodId {
        MethodId::Sgd
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        Ok(ctx.base_states())
    }

    fn client_round(
        &self,
        _client: &mut ClientState,
        g: &DenseVector,
        _config: &AlgoConfig,
        _rng: &mut RngStream,
    ) -> Result<Uplink> {
        Ok(Uplink::single(SparseMessage::dense(g)))
    }

    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()> {
        let grad_mean = mean_primary(uplinks, server.clients, server.x.dim())?;
        server.x.axpy(-config.gamma, &grad_mean);
        Ok(())
    }
}
