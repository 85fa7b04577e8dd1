//! Run-configuration schema and resolution.
//!
//! The on-disk form (JSON) mirrors these structs field by field. A config
//! is "resolved" once the stepsize (and feedback strength, where the method
//! has one) are concrete numbers; unspecified values are auto-filled from
//! the analysis-prescribed choices, with a note returned to the caller.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::algorithms::{theory_params, AlgoConfig, ApproxH, H0Init, MethodId};
use crate::compressors::{CompressorKind, CompressorSpec};
use crate::error::{Error, Result};
use crate::objectives::{
    make_least_squares, make_logistic_with_test, make_toy_divergence, partition_by_label,
    GradientOracle, LabeledDataset, Problem,
};
use crate::vector::DenseVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    LeastSquares {
        n: usize,
        d: usize,
        zeta: f64,
        /// Shared mean of the per-client targets, as a constant fill value.
        #[serde(default = "default_b_mean")]
        b_mean: f64,
        seed: u64,
    },
    ToyDivergence,
    LogisticSynthetic {
        samples: usize,
        features: usize,
        classes: usize,
        n: usize,
        skew_fraction: f64,
        l2: f64,
        seed: u64,
        #[serde(default)]
        test_fraction: f64,
    },
    LogisticCsv {
        path: PathBuf,
        #[serde(default)]
        has_header: bool,
        n: usize,
        skew_fraction: f64,
        l2: f64,
        seed: u64,
        #[serde(default)]
        test_fraction: f64,
    },
}

fn default_b_mean() -> f64 {
    1.0
}

pub fn build_problem(config: &ProblemConfig) -> Result<Problem> {
    match config {
        ProblemConfig::LeastSquares {
            n,
            d,
            zeta,
            b_mean,
            seed,
        } => make_least_squares(*n, *d, *zeta, &DenseVector::filled(*d, *b_mean), *seed),
        ProblemConfig::ToyDivergence => Ok(make_toy_divergence()),
        ProblemConfig::LogisticSynthetic {
            samples,
            features,
            classes,
            n,
            skew_fraction,
            l2,
            seed,
            test_fraction,
        } => {
            let dataset = LabeledDataset::synthetic_blobs(*samples, *features, *classes, *seed)?;
            let partition = partition_by_label(&dataset, *n, *skew_fraction, *seed)?;
            make_logistic_with_test(dataset, partition, *l2, *test_fraction)
        }
        ProblemConfig::LogisticCsv {
            path,
            has_header,
            n,
            skew_fraction,
            l2,
            seed,
            test_fraction,
        } => {
            let dataset = LabeledDataset::from_csv(path, *has_header)?;
            let partition = partition_by_label(&dataset, *n, *skew_fraction, *seed)?;
            make_logistic_with_test(dataset, partition, *l2, *test_fraction)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompressorConfig {
    pub kind: CompressorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

impl CompressorConfig {
    pub fn top_k(k: usize) -> Self {
        Self {
            kind: CompressorKind::TopK,
            k: Some(k),
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: CompressorKind::Identity,
            k: None,
        }
    }

    pub fn bind(&self, dim: usize) -> Result<CompressorSpec> {
        CompressorSpec::new(self.kind, self.k, dim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub method: MethodId,
    /// Stepsize; auto-filled from the prescribed maximum when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Feedback strength (econtrol); auto-filled with `delta / 400`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub compressor: CompressorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compressor2: Option<CompressorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<f64>,
    #[serde(default)]
    pub h0_init: H0Init,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approx_h: Option<ApproxH>,
}

impl AlgorithmConfig {
    pub fn new(method: MethodId, compressor: CompressorConfig) -> Self {
        Self {
            method,
            gamma: None,
            eta: None,
            compressor,
            compressor2: None,
            momentum: None,
            h0_init: H0Init::default(),
            approx_h: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    Exact,
    AdditiveGaussian { sigma: f64 },
    MiniBatch { batch_size: usize },
}

impl OracleConfig {
    pub fn to_oracle(&self) -> GradientOracle {
        match self {
            OracleConfig::Exact => GradientOracle::exact(),
            OracleConfig::AdditiveGaussian { sigma } => GradientOracle::gaussian(*sigma),
            OracleConfig::MiniBatch { batch_size } => GradientOracle::mini_batch(*batch_size),
        }
    }
}

/// One complete run description; serializable, and canonical once resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub oracle: OracleConfig,
    pub algorithm: AlgorithmConfig,
    pub rounds: u64,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub diagnostics: bool,
    /// Start iterate; zero vector when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    /// Output directory hint for the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_eval_every() -> u64 {
    1
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds: must be at least 1".into()));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every: must be at least 1".into()));
        }
        if let Some(gamma) = self.algorithm.gamma {
            if gamma <= 0.0 || !gamma.is_finite() {
                return Err(Error::Config("algorithm.gamma: must be positive".into()));
            }
        }
        if let Some(eta) = self.algorithm.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config("algorithm.eta: must lie in (0, 1]".into()));
            }
        }
        if let Some(m) = self.algorithm.momentum {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::Config("algorithm.momentum: must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    /// Fill unspecified `gamma`/`eta` from the prescribed choices. Returns
    /// human-readable notes describing what was filled.
    pub fn resolve(&mut self) -> Result<Vec<String>> {
        self.validate()?;
        let problem = build_problem(&self.problem)?;
        let compressor = self
            .algorithm
            .compressor
            .bind(problem.d())
            .map_err(prefix_compressor_path)?;
        let compressor2 = match (&self.algorithm.compressor2, self.algorithm.method) {
            (Some(c), _) => Some(c.bind(problem.d()).map_err(prefix_compressor_path)?),
            (None, MethodId::DoubleContractive) => {
                return Err(Error::Config(
                    "algorithm.compressor2: required for double-contractive".into(),
                ))
            }
            (None, _) => None,
        };
        let prescribed = theory_params(
            self.algorithm.method,
            &problem,
            &compressor,
            compressor2.as_ref(),
        )?;
        let mut notes = Vec::new();
        if self.algorithm.gamma.is_none() {
            self.algorithm.gamma = Some(prescribed.gamma_max);
            notes.push(format!(
                "algorithm.gamma auto-filled with the prescribed maximum {:.6e}",
                prescribed.gamma_max
            ));
        }
        if self.algorithm.method == MethodId::EControl && self.algorithm.eta.is_none() {
            let eta = prescribed
                .eta
                .expect("econtrol theory params always carry eta");
            self.algorithm.eta = Some(eta);
            notes.push(format!("algorithm.eta auto-filled with {eta:.6e}"));
        }
        self.validate()?;
        Ok(notes)
    }

    /// Bind the algorithm section to a problem dimension.
    pub fn algo_config(&self, d: usize) -> Result<AlgoConfig> {
        let gamma = self
            .algorithm
            .gamma
            .ok_or_else(|| Error::Config("algorithm.gamma: unresolved".into()))?;
        let compressor = self
            .algorithm
            .compressor
            .bind(d)
            .map_err(prefix_compressor_path)?;
        let compressor2 = self
            .algorithm
            .compressor2
            .as_ref()
            .map(|c| c.bind(d).map_err(prefix_compressor_path))
            .transpose()?;
        Ok(AlgoConfig {
            method: self.algorithm.method,
            gamma,
            eta: self.algorithm.eta,
            compressor,
            compressor2,
            momentum: self.algorithm.momentum,
            h0_init: self.algorithm.h0_init,
            approx_h: self.algorithm.approx_h.clone(),
        })
    }
}

fn prefix_compressor_path(err: Error) -> Error {
    match err {
        Error::Config(msg) if !msg.starts_with("algorithm.") => {
            Error::Config(format!("algorithm.compressor: {msg}"))
        }
        other => other,
    }
}
