//! Benchmark objectives: synthetic least squares, a two-client strongly
//! convex toy problem, and multiclass logistic regression, together with
//! gradient oracles and the label-skewed data partitioner.
//!
//! A [`Problem`] bundles `n` client objectives with exact gradient queries,
//! smoothness metadata (`L_i`, `L`, `L_tilde`, `mu`), and, where available,
//! a closed-form minimizer. Problems are immutable after construction;
//! gradient queries are pure and safe to evaluate concurrently.

mod dataset;
mod least_squares;
mod logistic;
mod partition;
mod toy;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{standard_normal, RngStream};
use crate::vector::DenseVector;

pub use dataset::LabeledDataset;
pub use least_squares::make_least_squares;
pub use logistic::{make_logistic, make_logistic_with_test};
pub use partition::partition_by_label;
pub use toy::make_toy_divergence;

/// Family-specific gradient/value evaluation, behind the [`Problem`] facade.
pub(crate) trait ObjectiveCore: Send + Sync {
    fn client_grad(&self, client: usize, x: &DenseVector) -> DenseVector;
    fn client_value(&self, client: usize, x: &DenseVector) -> f64;
    /// Number of samples in the client's shard, for finite-sum objectives.
    fn client_samples(&self, client: usize) -> Option<usize>;
    /// Gradient of one sample of the client's shard.
    fn sample_grad(&self, _client: usize, _sample: usize, _x: &DenseVector) -> Option<DenseVector> {
        None
    }
    fn test_accuracy(&self, _x: &DenseVector) -> Option<f64> {
        None
    }
}

/// `n` client objectives `f_i` with metadata for the average `f`.
#[derive(Clone)]
pub struct Problem {
    core: Arc<dyn ObjectiveCore>,
    n: usize,
    d: usize,
    l_per_client: Vec<f64>,
    l: f64,
    l_tilde: f64,
    mu: f64,
    x_star: Option<DenseVector>,
    f_star: Option<f64>,
}

impl Problem {
    pub(crate) fn from_parts(
        core: Arc<dyn ObjectiveCore>,
        n: usize,
        d: usize,
        l_per_client: Vec<f64>,
        l: f64,
        mu: f64,
        x_star: Option<DenseVector>,
    ) -> Self {
        debug_assert_eq!(l_per_client.len(), n);
        let l_tilde =
            (l_per_client.iter().map(|li| li * li).sum::<f64>() / n as f64).sqrt();
        let mut problem = Self {
            core,
            n,
            d,
            l_per_client,
            l,
            l_tilde,
            mu,
            x_star,
            f_star: None,
        };
        problem.f_star = problem.x_star.clone().map(|xs| problem.value(&xs));
        problem
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Smoothness constant of client `i`'s objective.
    pub fn l_client(&self, client: usize) -> f64 {
        self.l_per_client[client]
    }

    /// Smoothness constant of the average objective.
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Root mean square of the per-client smoothness constants;
    /// always sits between `l()` and the largest `l_client`.
    pub fn l_tilde(&self) -> f64 {
        self.l_tilde
    }

    /// Strong-convexity constant of the average objective (0 if unknown/none).
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn x_star(&self) -> Option<&DenseVector> {
        self.x_star.as_ref()
    }

    pub fn f_star(&self) -> Option<f64> {
        self.f_star
    }

    /// Exact local gradient of client `i` at `x`.
    pub fn client_grad(&self, client: usize, x: &DenseVector) -> DenseVector {
        debug_assert!(client < self.n);
        debug_assert_eq!(x.dim(), self.d);
        self.core.client_grad(client, x)
    }

    pub fn client_value(&self, client: usize, x: &DenseVector) -> f64 {
        self.core.client_value(client, x)
    }

    /// `f(x) = (1/n) sum_i f_i(x)`.
    pub fn value(&self, x: &DenseVector) -> f64 {
        (0..self.n).map(|i| self.core.client_value(i, x)).sum::<f64>() / self.n as f64
    }

    /// Exact gradient of the average objective.
    pub fn full_grad(&self, x: &DenseVector) -> DenseVector {
        let mut g = DenseVector::zeros(self.d);
        for i in 0..self.n {
            g.add_assign(&self.core.client_grad(i, x));
        }
        g.scale(1.0 / self.n as f64);
        g
    }

    pub fn client_samples(&self, client: usize) -> Option<usize> {
        self.core.client_samples(client)
    }

    pub fn sample_grad(&self, client: usize, sample: usize, x: &DenseVector) -> Option<DenseVector> {
        self.core.sample_grad(client, sample, x)
    }

    /// Classification accuracy on a held-out test set, when the problem has one.
    pub fn test_accuracy(&self, x: &DenseVector) -> Option<f64> {
        self.core.test_accuracy(x)
    }
}

/// How stochastic gradients are produced from a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum OracleMode {
    /// Exact local gradients.
    Exact,
    /// Exact gradient plus isotropic Gaussian noise with total variance
    /// `sigma^2` (per-coordinate variance `sigma^2 / d`).
    AdditiveGaussian { sigma: f64 },
    /// Mean gradient over `batch_size` samples drawn uniformly with
    /// replacement from the client's shard.
    MiniBatch { batch_size: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientOracle {
    #[serde(flatten)]
    pub mode: OracleMode,
}

impl GradientOracle {
    pub fn exact() -> Self {
        Self {
            mode: OracleMode::Exact,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        Self {
            mode: OracleMode::AdditiveGaussian { sigma },
        }
    }

    pub fn mini_batch(batch_size: usize) -> Self {
        Self {
            mode: OracleMode::MiniBatch { batch_size },
        }
    }

    pub fn validate(&self, problem: &Problem) -> Result<()> {
        match self.mode {
            OracleMode::Exact => Ok(()),
            OracleMode::AdditiveGaussian { sigma } => {
                if sigma < 0.0 {
                    Err(Error::Config("oracle.sigma: must be nonnegative".into()))
                } else {
                    Ok(())
                }
            }
            OracleMode::MiniBatch { batch_size } => {
                if batch_size == 0 {
                    return Err(Error::Config("oracle.batch_size: must be positive".into()));
                }
                if (0..problem.n()).any(|i| problem.client_samples(i).is_none()) {
                    return Err(Error::Incompatible(
                        "mini_batch oracle requires a finite-sum problem with per-sample structure"
                            .into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// One oracle draw for client `i` at `x`.
    pub fn sample_gradient(
        &self,
        problem: &Problem,
        client: usize,
        x: &DenseVector,
        rng: &mut RngStream,
    ) -> Result<DenseVector> {
        if x.dim() != problem.d() {
            return Err(Error::DimensionMismatch {
                context: "sample_gradient",
                expected: problem.d(),
                got: x.dim(),
            });
        }
        match self.mode {
            OracleMode::Exact => Ok(problem.client_grad(client, x)),
            OracleMode::AdditiveGaussian { sigma } => {
                let mut g = problem.client_grad(client, x);
                if sigma > 0.0 {
                    let scale = sigma / (problem.d() as f64).sqrt();
                    for j in 0..g.dim() {
                        g[j] += scale * standard_normal(rng);
                    }
                }
                Ok(g)
            }
            OracleMode::MiniBatch { batch_size } => {
                let m = problem.client_samples(client).ok_or_else(|| {
                    Error::Incompatible(
                        "mini_batch oracle on a problem without per-sample structure".into(),
                    )
                })?;
                let mut g = DenseVector::zeros(problem.d());
                for _ in 0..batch_size {
                    let s = rand::Rng::gen_range(rng, 0..m);
                    let gs = problem.sample_grad(client, s, x).ok_or_else(|| {
                        Error::Incompatible("problem does not expose per-sample gradients".into())
                    })?;
                    g.add_assign(&gs);
                }
                g.scale(1.0 / batch_size as f64);
                Ok(g)
            }
        }
    }
}
