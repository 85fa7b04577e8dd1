//! Multiclass logistic regression over a partitioned dataset.
//!
//! The parameter vector packs a `(num_classes x num_features)` weight matrix
//! row-major followed by one bias per class. Client `i`'s objective is the
//! mean softmax cross-entropy over its shard plus `(l2/2) ||x||^2`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::vector::DenseVector;

use super::{dataset::LabeledDataset, ObjectiveCore, Problem};

struct LogisticCore {
    dataset: LabeledDataset,
    shards: Vec<Vec<usize>>,
    l2: f64,
    /// Pooled held-out samples for accuracy reporting; empty when unused.
    test_indices: Vec<usize>,
}

impl LogisticCore {
    fn classes(&self) -> usize {
        self.dataset.num_classes()
    }

    fn features(&self) -> usize {
        self.dataset.num_features()
    }

    fn logits(&self, sample: usize, x: &DenseVector) -> Vec<f64> {
        let c = self.classes();
        let f = self.features();
        let a = self.dataset.sample_features(sample);
        (0..c)
            .map(|class| {
                let row = &x.as_slice()[class * f..(class + 1) * f];
                let bias = x[c * f + class];
                row.iter().zip(a.iter()).map(|(w, v)| w * v).sum::<f64>() + bias
            })
            .collect()
    }

    /// log(sum exp(z)) with the max subtracted for stability.
    fn log_sum_exp(z: &[f64]) -> f64 {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    }

    fn sample_loss(&self, sample: usize, x: &DenseVector) -> f64 {
        let z = self.logits(sample, x);
        Self::log_sum_exp(&z) - z[self.dataset.label(sample)]
    }

    /// Accumulate the cross-entropy gradient of one sample into `g`,
    /// scaled by `weight`.
    fn accumulate_sample_grad(&self, sample: usize, x: &DenseVector, weight: f64, g: &mut DenseVector) {
        let c = self.classes();
        let f = self.features();
        let z = self.logits(sample, x);
        let lse = Self::log_sum_exp(&z);
        let a = self.dataset.sample_features(sample);
        let y = self.dataset.label(sample);
        for class in 0..c {
            let mut p = (z[class] - lse).exp();
            if class == y {
                p -= 1.0;
            }
            let coeff = weight * p;
            let row = &mut g.as_mut_slice()[class * f..(class + 1) * f];
            for (gw, v) in row.iter_mut().zip(a.iter()) {
                *gw += coeff * v;
            }
            g[c * f + class] += coeff;
        }
    }
}

impl ObjectiveCore for LogisticCore {
    fn client_grad(&self, client: usize, x: &DenseVector) -> DenseVector {
        let shard = &self.shards[client];
        let mut g = x.scaled(self.l2);
        let w = 1.0 / shard.len() as f64;
        for &s in shard {
            self.accumulate_sample_grad(s, x, w, &mut g);
        }
        g
    }

    fn client_value(&self, client: usize, x: &DenseVector) -> f64 {
        let shard = &self.shards[client];
        let mean_ce =
            shard.iter().map(|&s| self.sample_loss(s, x)).sum::<f64>() / shard.len() as f64;
        mean_ce + 0.5 * self.l2 * x.norm_sq()
    }

    fn client_samples(&self, client: usize) -> Option<usize> {
        Some(self.shards[client].len())
    }

    fn sample_grad(&self, client: usize, sample: usize, x: &DenseVector) -> Option<DenseVector> {
        let &s = self.shards[client].get(sample)?;
        let mut g = x.scaled(self.l2);
        self.accumulate_sample_grad(s, x, 1.0, &mut g);
        Some(g)
    }

    fn test_accuracy(&self, x: &DenseVector) -> Option<f64> {
        if self.test_indices.is_empty() {
            return None;
        }
        let correct = self
            .test_indices
            .iter()
            .filter(|&&s| {
                let z = self.logits(s, x);
                let best = z
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map(|(i, _)| i)
                    .unwrap();
                best == self.dataset.label(s)
            })
            .count();
        Some(correct as f64 / self.test_indices.len() as f64)
    }
}

fn build(
    dataset: LabeledDataset,
    partition: Vec<Vec<usize>>,
    l2: f64,
    test_indices: Vec<usize>,
) -> Result<Problem> {
    if partition.is_empty() {
        return Err(Error::Config("logistic partition must be nonempty".into()));
    }
    if partition.iter().any(|shard| shard.is_empty()) {
        return Err(Error::Config("every client shard must be nonempty".into()));
    }
    let mut seen = vec![false; dataset.num_samples()];
    for shard in &partition {
        for &s in shard {
            if s >= dataset.num_samples() {
                return Err(Error::Config(format!("sample index {s} out of range")));
            }
            if seen[s] {
                return Err(Error::Config(format!("sample {s} assigned to two clients")));
            }
            seen[s] = true;
        }
    }
    if l2 < 0.0 {
        return Err(Error::Config("problem.l2: must be nonnegative".into()));
    }

    let n = partition.len();
    let d = dataset.num_classes() * (dataset.num_features() + 1);
    // Smoothness upper bound per client: the softmax Hessian spectrum is
    // bounded by 1/4 per sample, so L_i <= (1/4) max_s ||(a_s, 1)||^2 + l2
    // with the bias treated as an always-on feature. Conservative; only
    // used to size stepsizes.
    let l_per_client: Vec<f64> = partition
        .iter()
        .map(|shard| {
            let max_sq = shard
                .iter()
                .map(|&s| {
                    1.0 + dataset
                        .sample_features(s)
                        .iter()
                        .map(|v| v * v)
                        .sum::<f64>()
                })
                .fold(0.0f64, f64::max);
            0.25 * max_sq + l2
        })
        .collect();
    let l = l_per_client.iter().sum::<f64>() / n as f64;

    let core = Arc::new(LogisticCore {
        dataset,
        shards: partition,
        l2,
        test_indices,
    });
    Ok(Problem::from_parts(core, n, d, l_per_client, l, l2, None))
}

/// Logistic regression over the given per-client shards.
pub fn make_logistic(dataset: LabeledDataset, partition: Vec<Vec<usize>>, l2: f64) -> Result<Problem> {
    build(dataset, partition, l2, Vec::new())
}

/// Same, but carves `test_fraction` of every shard (at least one sample is
/// kept for training) into a pooled held-out set for accuracy reporting.
pub fn make_logistic_with_test(
    dataset: LabeledDataset,
    partition: Vec<Vec<usize>>,
    l2: f64,
    test_fraction: f64,
) -> Result<Problem> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Config("problem.test_fraction: must be in [0, 1)".into()));
    }
    let mut train = Vec::with_capacity(partition.len());
    let mut test = Vec::new();
    for shard in partition {
        let n_test = ((shard.len() as f64) * test_fraction).floor() as usize;
        let n_test = n_test.min(shard.len().saturating_sub(1));
        let split = shard.len() - n_test;
        test.extend_from_slice(&shard[split..]);
        train.push(shard[..split].to_vec());
    }
    build(dataset, train, l2, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::test_util::assert_grad_matches_fd;
    use crate::rng::{derive_stream, StreamDomain};
    use rand::Rng;

    fn two_sample_dataset() -> LabeledDataset {
        LabeledDataset::new(vec![1.0, 0.0, 0.0, 1.0], 2, vec![0, 1]).unwrap()
    }

    #[test]
    fn loss_at_zero_weights_is_ln_num_classes() {
        let p = make_logistic(two_sample_dataset(), vec![vec![0, 1]], 0.0).unwrap();
        let loss = p.value(&DenseVector::zeros(p.d()));
        assert!((loss - 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_gradient_at_zero() {
        // One sample (1, 0) with label 0, two classes: weight-row gradients
        // are (-1/2, 0) and (1/2, 0); bias gradients are -1/2 and 1/2.
        let ds = LabeledDataset::new(vec![1.0, 0.0, 0.0, 1.0], 2, vec![0, 1]).unwrap();
        let p = make_logistic(ds, vec![vec![0], vec![1]], 0.0).unwrap();
        let g = p.client_grad(0, &DenseVector::zeros(p.d()));
        assert_eq!(&g.as_slice()[0..2], &[-0.5, 0.0]);
        assert_eq!(&g.as_slice()[2..4], &[0.5, 0.0]);
        assert_eq!(&g.as_slice()[4..6], &[-0.5, 0.5]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let ds = LabeledDataset::synthetic_blobs(40, 3, 3, 5).unwrap();
        let shards = vec![(0..20).collect::<Vec<_>>(), (20..40).collect()];
        let p = make_logistic(ds, shards, 0.01).unwrap();
        let mut rng = derive_stream(6, StreamDomain::Data, 0, 0);
        for _ in 0..5 {
            let x =
                DenseVector::from_vec((0..p.d()).map(|_| rng.gen_range(-1.0..1.0)).collect());
            assert_grad_matches_fd(&p, &x, 1e-4);
        }
    }

    #[test]
    fn single_sample_gradient_matches_finite_difference_without_ridge() {
        let ds = LabeledDataset::new(vec![0.5, -1.0, 2.0, 0.25], 2, vec![1, 0]).unwrap();
        let p = make_logistic(ds, vec![vec![0, 1]], 0.0).unwrap();
        let x = DenseVector::from_vec(vec![0.2, -0.3, 0.1, 0.4, -0.2, 0.05]);
        assert_grad_matches_fd(&p, &x, 1e-5);
    }

    #[test]
    fn minibatch_sample_grads_average_to_client_grad() {
        let ds = LabeledDataset::synthetic_blobs(12, 2, 2, 8).unwrap();
        let p = make_logistic(ds, vec![(0..12).collect()], 0.0).unwrap();
        let x = DenseVector::filled(p.d(), 0.1);
        let mut mean = DenseVector::zeros(p.d());
        for s in 0..12 {
            mean.add_assign(&p.sample_grad(0, s, &x).unwrap());
        }
        mean.scale(1.0 / 12.0);
        assert!(mean.dist_sq(&p.client_grad(0, &x)) < 1e-24);
    }

    #[test]
    fn rejects_empty_shards_and_duplicates() {
        let ds = two_sample_dataset();
        assert!(make_logistic(ds.clone(), vec![vec![0, 1], vec![]], 0.0).is_err());
        assert!(make_logistic(ds, vec![vec![0], vec![0]], 0.0).is_err());
    }

    #[test]
    fn test_split_reports_accuracy() {
        let ds = LabeledDataset::synthetic_blobs(100, 4, 2, 3).unwrap();
        let shards = vec![(0..50).collect::<Vec<_>>(), (50..100).collect()];
        let p = make_logistic_with_test(ds, shards, 0.0, 0.2).unwrap();
        let acc = p.test_accuracy(&DenseVector::zeros(p.d())).unwrap();
        assert!((0.0..=1.0).contains(&acc));
        // A few gradient steps on well-separated blobs must beat guessing.
        let mut x = DenseVector::zeros(p.d());
        for _ in 0..200 {
            x.axpy(-0.5, &p.full_grad(&x));
        }
        assert!(p.test_accuracy(&x).unwrap() > 0.7);
    }
}
