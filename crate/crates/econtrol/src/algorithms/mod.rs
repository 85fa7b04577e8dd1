//! Synchronous-round optimizers over (client states, server state).
//!
//! Every method is a strategy behind the [`Algorithm`] trait, registered by
//! name and selected at runtime from the run configuration. A round is:
//! each client turns its oracle draw into one (or two) compressed uplink
//! messages and updates its local state; the server folds the messages into
//! the iterate. The free functions [`init`], [`client_round`] and
//! [`server_round`] dispatch through the registry and maintain the shared
//! bookkeeping (virtual iterate, round counter).

mod compressed_sgd;
mod double_contractive;
mod ec;
mod ec_bias_corrected;
mod econtrol;
mod ef21;
mod sgd;
mod theory;

use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::compressors::{compress, CompressorSpec, SparseMessage};
use crate::error::{Error, Result};
use crate::objectives::{GradientOracle, Problem};
use crate::rng::{derive_stream, RngStream, StreamDomain};
use crate::vector::DenseVector;

pub use ef21::run_ef21_warmup;
pub use theory::{theory_params, TheoryParams};

/// Identifier of an optimizer variant; doubles as its registry name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodId {
    #[serde(rename = "econtrol")]
    EControl,
    Ec,
    EcIdeal,
    EcApprox,
    CompressedSgd,
    DoubleContractive,
    Ef21,
    Ef21Hb,
    Sgd,
}

impl MethodId {
    pub const ALL: [MethodId; 9] = [
        MethodId::EControl,
        MethodId::Ec,
        MethodId::EcIdeal,
        MethodId::EcApprox,
        MethodId::CompressedSgd,
        MethodId::DoubleContractive,
        MethodId::Ef21,
        MethodId::Ef21Hb,
        MethodId::Sgd,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodId::EControl => "econtrol",
            MethodId::Ec => "ec",
            MethodId::EcIdeal => "ec-ideal",
            MethodId::EcApprox => "ec-approx",
            MethodId::CompressedSgd => "compressed-sgd",
            MethodId::DoubleContractive => "double-contractive",
            MethodId::Ef21 => "ef21",
            MethodId::Ef21Hb => "ef21-hb",
            MethodId::Sgd => "sgd",
        }
    }

    pub fn from_name(name: &str) -> Option<MethodId> {
        MethodId::ALL.iter().copied().find(|m| m.as_str() == name)
    }

    /// Methods that maintain a nonzero error accumulator, for which the
    /// virtual-iterate identity `x_t - x~_t = gamma * mean(e_t^i)` holds.
    pub fn has_error_state(&self) -> bool {
        matches!(
            self,
            MethodId::EControl
                | MethodId::Ec
                | MethodId::EcIdeal
                | MethodId::EcApprox
                | MethodId::DoubleContractive
        )
    }

    /// Methods whose server-side aggregate must equal the mean of the
    /// client estimators every round.
    pub fn tracks_estimator(&self) -> bool {
        matches!(
            self,
            MethodId::EControl | MethodId::DoubleContractive | MethodId::Ef21 | MethodId::Ef21Hb
        )
    }
}

/// How `h_0^i` is produced for methods that start from a gradient estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H0Init {
    /// One stochastic oracle draw per client, consumed before round 0.
    #[default]
    Draw,
    /// Exact local gradient at the start point.
    Exact,
    /// All-zero estimators.
    Zero,
}

/// Source of the frozen bias-correction table for `ec-approx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxH {
    /// Run an EF21 warm-up for `rounds` and freeze the resulting estimators.
    Warmup {
        rounds: u64,
        /// Warm-up stepsize; defaults to `delta / (100 L)`.
        gamma: Option<f64>,
    },
    /// All-zero table (plain error compensation with a bias term of zero).
    Zero,
}

/// Fully-resolved optimizer settings for one run.
#[derive(Debug, Clone)]
pub struct AlgoConfig {
    pub method: MethodId,
    pub gamma: f64,
    /// Feedback strength; used by `econtrol` only.
    pub eta: Option<f64>,
    pub compressor: CompressorSpec,
    /// Second compressor of `double-contractive`.
    pub compressor2: Option<CompressorSpec>,
    /// Momentum of `ef21-hb`.
    pub momentum: Option<f64>,
    pub h0_init: H0Init,
    pub approx_h: Option<ApproxH>,
}

impl AlgoConfig {
    pub fn new(method: MethodId, gamma: f64, compressor: CompressorSpec) -> Self {
        Self {
            method,
            gamma,
            eta: None,
            compressor,
            compressor2: None,
            momentum: None,
            h0_init: H0Init::default(),
            approx_h: None,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_h0(mut self, h0: H0Init) -> Self {
        self.h0_init = h0;
        self
    }

    fn eta_required(&self) -> Result<f64> {
        self.eta
            .ok_or_else(|| Error::Config("algorithm.eta: required for econtrol".into()))
    }
}

/// Per-client mutable state, advanced one synchronous round at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    /// Error accumulator `e_t^i`.
    pub e: DenseVector,
    /// Gradient estimator `h_t^i` (kept at zero by methods without one).
    pub h: DenseVector,
    /// Frozen bias-correction vector of `ec-ideal` / `ec-approx`.
    pub h_fixed: Option<DenseVector>,
    /// Momentum buffer of `ef21-hb`; `None` until the first round.
    pub velocity: Option<DenseVector>,
}

impl ClientState {
    fn fresh(d: usize) -> Self {
        Self {
            e: DenseVector::zeros(d),
            h: DenseVector::zeros(d),
            h_fixed: None,
            velocity: None,
        }
    }
}

/// Server-side state: the iterate, aggregate estimator, and the diagnostic
/// virtual iterate driven by the raw (uncompressed) gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub x: DenseVector,
    pub h: DenseVector,
    pub x_virtual: DenseVector,
    pub round: u64,
    /// Number of participating clients; one uplink per client per round.
    pub clients: usize,
}

/// The message(s) one client sends in one round. Both messages of
/// `double-contractive` are billed.
#[derive(Debug, Clone, PartialEq)]
pub struct Uplink {
    pub primary: SparseMessage,
    pub secondary: Option<SparseMessage>,
}

impl Uplink {
    pub fn single(msg: SparseMessage) -> Self {
        Self {
            primary: msg,
            secondary: None,
        }
    }

    pub fn bits(&self) -> u64 {
        self.primary.bits() + self.secondary.as_ref().map_or(0, SparseMessage::bits)
    }
}

/// Everything an algorithm may need to build its initial state.
pub struct InitCtx<'a> {
    pub problem: &'a Problem,
    pub oracle: &'a GradientOracle,
    pub config: &'a AlgoConfig,
    pub x0: &'a DenseVector,
    pub master_seed: u64,
    /// Bias-correction table for `ec-approx` (one vector per client).
    pub warm_h: Option<&'a [DenseVector]>,
}

impl<'a> InitCtx<'a> {
    /// `h_0^i` per the configured initialization mode. The stochastic draw
    /// consumes the client's dedicated pre-round stream.
    fn draw_h0(&self, client: usize) -> Result<DenseVector> {
        match self.config.h0_init {
            H0Init::Draw => {
                let mut rng = derive_stream(self.master_seed, StreamDomain::InitDraw, client as u64, 0);
                self.oracle.sample_gradient(self.problem, client, self.x0, &mut rng)
            }
            H0Init::Exact => Ok(self.problem.client_grad(client, self.x0)),
            H0Init::Zero => Ok(DenseVector::zeros(self.problem.d())),
        }
    }

    fn base_states(&self) -> (ServerState, Vec<ClientState>) {
        let d = self.problem.d();
        let server = ServerState {
            x: self.x0.clone(),
            h: DenseVector::zeros(d),
            x_virtual: self.x0.clone(),
            round: 0,
            clients: self.problem.n(),
        };
        let clients = (0..self.problem.n()).map(|_| ClientState::fresh(d)).collect();
        (server, clients)
    }
}

/// One optimizer variant. Implementations are stateless; all mutable state
/// lives in [`ClientState`] / [`ServerState`].
pub trait Algorithm: Send + Sync {
    fn id(&self) -> MethodId;

    /// Check configuration/problem compatibility before round 0.
    fn validate(&self, ctx: &InitCtx<'_>) -> Result<()> {
        let _ = ctx;
        Ok(())
    }

    fn init(&self, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)>;

    fn client_round(
        &self,
        client: &mut ClientState,
        g: &DenseVector,
        config: &AlgoConfig,
        rng: &mut RngStream,
    ) -> Result<Uplink>;

    /// Fold one round of uplinks into the server state. The shared
    /// virtual-iterate update and round counter are handled by the
    /// dispatching [`server_round`] function.
    fn server_round(
        &self,
        server: &mut ServerState,
        uplinks: &[Uplink],
        config: &AlgoConfig,
    ) -> Result<()>;
}

static REGISTRY: LazyLock<Vec<Box<dyn Algorithm>>> = LazyLock::new(|| {
    vec![
        Box::new(econtrol::EControl),
        Box::new(ec::ClassicEc),
        Box::new(ec_bias_corrected::EcIdeal),
        Box::new(ec_bias_corrected::EcApprox),
        Box::new(compressed_sgd::CompressedSgd),
        Box::new(double_contractive::DoubleContractive),
        Box::new(ef21::Ef21),
        Box::new(ef21::Ef21Hb),
        Box::new(sgd::Sgd),
    ]
});

/// The strategy registered under `method`.
pub fn lookup(method: MethodId) -> &'static dyn Algorithm {
    REGISTRY
        .iter()
        .find(|a| a.id() == method)
        .map(|a| a.as_ref())
        .expect("every method id is registered")
}

/// Resolve a strategy by its registry name (e.g. `"econtrol"`).
pub fn lookup_name(name: &str) -> Option<&'static dyn Algorithm> {
    MethodId::from_name(name).map(lookup)
}

/// Registry names of all available methods.
pub fn method_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|a| a.id().as_str()).collect()
}

/// Build initial (server, clients) state for `method`.
pub fn init(method: MethodId, ctx: &InitCtx<'_>) -> Result<(ServerState, Vec<ClientState>)> {
    let algo = lookup(method);
    algo.validate(ctx)?;
    algo.init(ctx)
}

/// Advance one client by one round, producing its uplink message(s).
pub fn client_round(
    method: MethodId,
    client: &mut ClientState,
    g: &DenseVector,
    config: &AlgoConfig,
    rng: &mut RngStream,
) -> Result<Uplink> {
    if g.dim() != client.e.dim() {
        return Err(Error::DimensionMismatch {
            context: "client_round",
            expected: client.e.dim(),
            got: g.dim(),
        });
    }
    lookup(method).client_round(client, g, config, rng)
}

/// Fold the round's uplinks into the server state, then advance the virtual
/// iterate by the mean raw gradient and bump the round counter.
pub fn server_round(
    method: MethodId,
    server: &mut ServerState,
    uplinks: &[Uplink],
    grad_mean: &DenseVector,
    config: &AlgoConfig,
) -> Result<()> {
    lookup(method).server_round(server, uplinks, config)?;
    server.x_virtual.axpy(-config.gamma, grad_mean);
    server.round += 1;
    Ok(())
}

/// Mean of the primary messages, densified. Errors on a count mismatch.
fn mean_primary(uplinks: &[Uplink], n_expected: usize, d: usize) -> Result<DenseVector> {
    if uplinks.len() != n_expected {
        return Err(Error::Invariant(format!(
            "server expected {n_expected} uplinks, got {}",
            uplinks.len()
        )));
    }
    let mut sum = DenseVector::zeros(d);
    for up in uplinks {
        for (i, v) in up.primary.entries() {
            sum[i] += v;
        }
    }
    sum.scale(1.0 / n_expected as f64);
    Ok(sum)
}

fn compress_into_uplink(
    spec: &CompressorSpec,
    arg: &DenseVector,
    rng: &mut RngStream,
) -> Result<SparseMessage> {
    compress(spec, arg, rng)
}
