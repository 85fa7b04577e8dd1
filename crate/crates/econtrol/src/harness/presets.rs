//! Canned experiment definitions: the desk-scale benchmark suite.
//!
//! Each preset emits a list of run configurations sharing one problem
//! instance. Presets whose reference protocol tunes the stepsize also carry
//! the tuning grids; `reproduce` runs those sweeps and keeps the best cell
//! per configuration.

use crate::algorithms::{H0Init, MethodId};
use crate::error::{Error, Result};

use super::config::{
    AlgorithmConfig, CompressorConfig, OracleConfig, ProblemConfig, RunConfig,
};
use super::SweepCriterion;

/// Stepsize grid used wherever a preset tunes gamma.
pub const GAMMA_GRID: [f64; 6] = [5e-5, 1e-4, 5e-4, 1e-3, 1e-2, 1e-1];
/// Feedback-strength grid used wherever a preset tunes eta.
pub const ETA_GRID: [f64; 5] = [1e-3, 5e-3, 1e-2, 5e-2, 1e-1];

/// Client counts for the linear-speedup sweep.
pub const SPEEDUP_CLIENTS: [usize; 5] = [1, 2, 4, 8, 16];

/// Theoretical stepsize of the toy-problem presets:
/// `delta / (3200 sqrt(2) L)` with `delta = 1/3`, `L = 1`.
pub fn toy_theory_gamma() -> f64 {
    (1.0 / 3.0) / (3200.0 * std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Fig1,
    Fig2,
    Fig3,
    AppendixCA,
    AppendixCB,
}

impl PresetName {
    pub const ALL: [PresetName; 5] = [
        PresetName::Fig1,
        PresetName::Fig2,
        PresetName::Fig3,
        PresetName::AppendixCA,
        PresetName::AppendixCB,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Fig1 => "fig1",
            PresetName::Fig2 => "fig2",
            PresetName::Fig3 => "fig3",
            PresetName::AppendixCA => "appendixC_a",
            PresetName::AppendixCB => "appendixC_b",
        }
    }

    pub fn from_name(name: &str) -> Option<PresetName> {
        PresetName::ALL.iter().copied().find(|p| p.as_str() == name)
    }
}

/// Grids a preset tunes over before reporting results.
#[derive(Debug, Clone)]
pub struct TuneSpec {
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
    pub criterion: SweepCriterion,
}

#[derive(Debug, Clone)]
pub struct PresetBundle {
    pub name: PresetName,
    pub description: &'static str,
    /// One label per config, used for output directories and summaries.
    pub labels: Vec<String>,
    pub configs: Vec<RunConfig>,
    /// Tuning protocol; methods without a feedback knob ignore the eta grid.
    pub tune: Option<TuneSpec>,
}

/// The run set of a named preset.
pub fn preset(name: PresetName) -> Vec<RunConfig> {
    preset_bundle(name).configs
}

/// The run set plus labels and tuning protocol.
pub fn preset_bundle(name: PresetName) -> PresetBundle {
    match name {
        PresetName::Fig1 => fig1(),
        PresetName::Fig2 => fig2(),
        PresetName::Fig3 => fig3(),
        PresetName::AppendixCA => appendix_c(H0Init::Exact, PresetName::AppendixCA),
        PresetName::AppendixCB => appendix_c(H0Init::Zero, PresetName::AppendixCB),
    }
}

pub fn preset_by_name(name: &str) -> Result<PresetBundle> {
    PresetName::from_name(name)
        .map(preset_bundle)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown preset '{name}'; available: {}",
                PresetName::ALL
                    .iter()
                    .map(|p| p.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ))
        })
}

fn least_squares_base(method: MethodId, problem: ProblemConfig, sigma: f64, seed: u64) -> RunConfig {
    let compressor = match method {
        MethodId::Sgd => CompressorConfig::identity(),
        _ => CompressorConfig::top_k(30),
    };
    RunConfig {
        problem,
        oracle: OracleConfig::AdditiveGaussian { sigma },
        algorithm: AlgorithmConfig::new(method, compressor),
        rounds: 2000,
        eval_every: 10,
        master_seed: seed,
        diagnostics: false,
        x0: None,
        out: None,
    }
}

/// Three-method comparison on homogeneous-target least squares
/// (n=5, d=300, zeta=0, sigma=10, top-30 of 300): error compensation is
/// what separates the convergent methods from plain compressed SGD.
fn fig1() -> PresetBundle {
    let methods = [MethodId::CompressedSgd, MethodId::Ec, MethodId::EControl];
    let problem = ProblemConfig::LeastSquares {
        n: 5,
        d: 300,
        zeta: 0.0,
        b_mean: 1.0,
        seed: 11,
    };
    let configs: Vec<RunConfig> = methods
        .iter()
        .map(|&m| least_squares_base(m, problem.clone(), 10.0, 101))
        .collect();
    PresetBundle {
        name: PresetName::Fig1,
        description: "compressed-sgd vs ec vs econtrol on least squares (n=5, d=300, zeta=0, \
                      sigma=10, top-k 10%), stepsizes tuned per method",
        labels: methods.iter().map(|m| m.as_str().to_string()).collect(),
        configs,
        tune: Some(TuneSpec {
            gammas: GAMMA_GRID.to_vec(),
            etas: ETA_GRID.to_vec(),
            criterion: SweepCriterion::FinalLoss,
        }),
    }
}

/// Linear-speedup sweep: econtrol at a fixed small stepsize
/// (gamma = delta/100 = 0.001) with the client count doubling from 1 to 16
/// on noisy heterogeneous least squares (d=200, zeta=100, sigma=50).
fn fig2() -> PresetBundle {
    let configs: Vec<RunConfig> = SPEEDUP_CLIENTS
        .iter()
        .map(|&n| {
            let mut config = least_squares_base(
                MethodId::EControl,
                ProblemConfig::LeastSquares {
                    n,
                    d: 200,
                    zeta: 100.0,
                    b_mean: 1.0,
                    seed: 12,
                },
                50.0,
                102,
            );
            config.algorithm.compressor = CompressorConfig::top_k(20);
            config.algorithm.gamma = Some(1e-3);
            // eta stays unset: resolution fills the prescribed delta/400.
            config.rounds = 20_000;
            config.eval_every = 25;
            config
        })
        .collect();
    PresetBundle {
        name: PresetName::Fig2,
        description: "econtrol linear-speedup sweep, n in {1,2,4,8,16} on least squares \
                      (d=200, zeta=100, sigma=50, top-k 10%, fixed gamma=0.001)",
        labels: SPEEDUP_CLIENTS.iter().map(|n| format!("n{n}")).collect(),
        configs,
        tune: None,
    }
}

/// Heterogeneity robustness: sgd vs ec vs econtrol across
/// zeta in {0, 10, 100} (n=5, d=300, sigma=10, top-30 of 300), tuned.
fn fig3() -> PresetBundle {
    let methods = [MethodId::Sgd, MethodId::Ec, MethodId::EControl];
    let zetas = [0.0, 10.0, 100.0];
    let mut labels = Vec::new();
    let mut configs = Vec::new();
    for &zeta in &zetas {
        for &method in &methods {
            let mut config = least_squares_base(
                method,
                ProblemConfig::LeastSquares {
                    n: 5,
                    d: 300,
                    zeta,
                    b_mean: 1.0,
                    seed: 13,
                },
                10.0,
                103,
            );
            config.rounds = 4000;
            labels.push(format!("{}_zeta{}", method.as_str(), zeta as u64));
            configs.push(config);
        }
    }
    PresetBundle {
        name: PresetName::Fig3,
        description: "sgd vs ec vs econtrol across heterogeneity zeta in {0,10,100} on least \
                      squares (n=5, d=300, sigma=10, top-k 10%), stepsizes tuned per cell",
        labels,
        configs,
        tune: Some(TuneSpec {
            gammas: GAMMA_GRID.to_vec(),
            etas: ETA_GRID.to_vec(),
            criterion: SweepCriterion::FinalLoss,
        }),
    }
}

/// Feedback-strength stability study on the two-client toy problem with
/// top-1 compression and exact gradients at the theoretical stepsize:
/// eta = delta converges from any initialization, eta = 1 depends on it.
fn appendix_c(h0: H0Init, name: PresetName) -> PresetBundle {
    let etas = [1.0, 1.0 / 3.0];
    let labels = vec!["eta_1".to_string(), "eta_delta".to_string()];
    let configs: Vec<RunConfig> = etas
        .iter()
        .map(|&eta| RunConfig {
            problem: ProblemConfig::ToyDivergence,
            oracle: OracleConfig::Exact,
            algorithm: AlgorithmConfig {
                method: MethodId::EControl,
                gamma: Some(toy_theory_gamma()),
                eta: Some(eta),
                compressor: CompressorConfig::top_k(1),
                compressor2: None,
                momentum: None,
                h0_init: h0,
                approx_h: None,
            },
            rounds: 250_000,
            eval_every: 200,
            master_seed: 104,
            diagnostics: false,
            x0: None,
            out: None,
        })
        .collect();
    let description = match h0 {
        H0Init::Zero => {
            "econtrol stability on the toy problem, estimators initialized to zero: \
             eta=1 blows up for any stepsize, eta=delta converges"
        }
        _ => {
            "econtrol stability on the toy problem, estimators initialized with the local \
             gradients: both eta=1 and eta=delta converge"
        }
    };
    PresetBundle {
        name,
        description,
        labels,
        configs,
        tune: None,
    }
}
