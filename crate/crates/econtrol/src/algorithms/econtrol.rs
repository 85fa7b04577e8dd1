//! EControl: error compensation with a jointly-maintained gradient
//! estimator and a tunable feedback strength.
//!
//! Client round:
//! ```text
//! Delta = C(eta * e + g - h)
//! e    <- e + g - h - Delta
//! h    <- h + Delta
//! ```
//! Server round:
//! ```text
//! x <- x - gamma * h - (gamma/n) * sum Delta
//! h <- h + (1/n) * sum Delta
//! ```
//! With the identity compressor the update telescopes to plain SGD and the
//! error stays exactly zero.

use crate::error::Result;
use crate::rng::RngStream;
use crate::vector::DenseVector;

use super::{
    compress_into_uplink, mean_primary, AlgoConfig, Algorithm, ClientState, InitCtx, MethodId,
    ServerState, Uplink,
};

pub struct EControl;

impl Algorithm for EControl {
    fn id(&self) -> MethodId {
        MethodId::EControl
    }

    fn validate(&self, ctx: &InitCtx<'_>) -> Result<()> {
        ctx.config.eta_required().map(|_| ())
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
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
        let eta = config.eta_required()?;
        let mut arg = client.e.scaled(eta);
        arg.add_assign(g);
        arg.sub_assign(&client.h);
        let msg = compress_into_uplink(&config.compressor, &arg, rng)?;

        // e <- e + g - h - Delta ; h <- h + Delta
        client.e.add_assign(g);
        client.e.sub_assign(&client.h);
        for (i, v) in msg.entries() {
            client.e[i] -= v;
            client.h[i] += v;
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
        server.x.axpy(-config.gamma, &server.h);
        server.x.axpy(-config.gamma, &delta_mean);
        server.h.add_assign(&delta_mean);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compressors::CompressorSpec;
    use crate::rng::{derive_stream, StreamDomain};

    fn rng() -> RngStream {
        derive_stream(0, StreamDomain::Compressor, 0, 0)
    }

    #[test]
    fn top1_round_matches_hand_trace() {
        // e = 0, g = (1,1,5), h = (1,3,3), eta = 1/3:
        // argument = (0,-2,2); |-2| ties |2| and the lower index wins,
        // so Delta = (0,-2,0), e' = (0,0,2), h' = (1,1,3).
        let config = AlgoConfig::new(
            MethodId::EControl,
            0.1,
            CompressorSpec::top_k(1, 3).unwrap(),
        )
        .with_eta(1.0 / 3.0);
        let mut client = ClientState {
            e: DenseVector::zeros(3),
            h: DenseVector::from_vec(vec![1.0, 3.0, 3.0]),
            h_fixed: None,
            velocity: None,
        };
        let g = DenseVector::from_vec(vec![1.0, 1.0, 5.0]);
        let up = EControl
            .client_round(&mut client, &g, &config, &mut rng())
            .unwrap();
        assert_eq!(up.primary.indices(), &[1]);
        assert_eq!(up.primary.values(), &[-2.0]);
        assert_eq!(client.e.as_slice(), &[0.0, 0.0, 2.0]);
        assert_eq!(client.h.as_slice(), &[1.0, 1.0, 3.0]);
    }

    #[test]
    fn identity_compressor_zeroes_error_and_tracks_gradient() {
        // With delta = 1: Delta = eta*e + g - h exactly, so starting from
        // e = 0 the error stays 0 and h becomes the last gradient.
        let config = AlgoConfig::new(
            MethodId::EControl,
            0.1,
            CompressorSpec::identity(3).unwrap(),
        )
        .with_eta(0.25);
        let mut client = ClientState {
            e: DenseVector::zeros(3),
            h: DenseVector::from_vec(vec![0.5, -1.0, 2.0]),
            h_fixed: None,
            velocity: None,
        };
        for step in 0..5 {
            let g = DenseVector::from_vec(vec![step as f64, 1.0, -1.0]);
            EControl
                .client_round(&mut client, &g, &config, &mut rng())
                .unwrap();
            assert_eq!(client.e, DenseVector::zeros(3));
            assert_eq!(client.h, g);
        }
    }
}
