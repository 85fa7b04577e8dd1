//! Classic error compensation: accumulate the compression residual and
//! re-inject it into the next message.
//!
//! Client: `Delta = C(e + g)`, `e <- e + g - Delta`.
//! Server: `x <- x - (gamma/n) * sum Delta`.

use crate::error::Result;
use crate::rng::RngStream;
use crate::vector::DenseVector;

use super::{
    compress_into_uplink, mean_primary, AlgoConfig, Algorithm, ClientState, InitCtx, MethodId,
    ServerState, Uplink,
};

pub struct ClassicEc;

impl Algorithm for ClassicEc {
    fn id(&self) -> MethodId {
        MethodId::Ec
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
        Ok(ctx.base_states())
    }

    fn client_round(
        &self,
        client: &mut ClientState,
        g: &DenseVector,
        config: &AlgoConfig,
        rng: &mut RngStream,
    ) -> Result<Uplink> {
        let arg = client.e.add(g);
        let msg = compress_into_uplink(&config.compressor, &arg, rng)?;
        client.e.add_assign(g);
        for (i, v) in msg.entries() {
            client.e[i] -= v;
        }
        Ok(Uplink::single(msg))
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
