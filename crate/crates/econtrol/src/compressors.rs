//! Contractive compression operators and uplink bit accounting.
//!
//! A compressor `C` with contraction factor `delta in (0, 1]` satisfies
//! `E ||C(x) - x||^2 <= (1 - delta) ||x||^2` for every input. Three
//! operators are provided:
//!
//! * `TopK` — keeps the `k` entries of largest absolute value
//!   (deterministic; ties broken toward the lower index), `delta = k/d`;
//! * `RandK` — keeps `k` coordinates chosen uniformly without replacement,
//!   unscaled, so the bound holds in expectation with `delta = k/d`;
//! * `Identity` — lossless, `delta = 1`.
//!
//! Values are never rescaled, so `C(0) = 0` exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::vector::DenseVector;

/// Bits billed per transmitted value.
pub const VALUE_BITS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressorKind {
    TopK,
    RandK,
    Identity,
}

/// A contractive operator bound to an ambient dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressorSpec {
    pub kind: CompressorKind,
    /// Retained coordinate count; equals `dim` for `Identity`.
    pub k: usize,
    pub dim: usize,
}

impl CompressorSpec {
    pub fn new(kind: CompressorKind, k: Option<usize>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("compressor dim must be positive".into()));
        }
        match kind {
            CompressorKind::Identity => Ok(Self { kind, k: dim, dim }),
            CompressorKind::TopK | CompressorKind::RandK => {
                let k = k.ok_or_else(|| {
                    Error::Config("algorithm.compressor.k: required for top_k/rand_k".into())
                })?;
                if k == 0 || k > dim {
                    return Err(Error::Config(format!(
                        "algorithm.compressor.k: must satisfy 1 <= k <= dim, got k={k}, dim={dim}"
                    )));
                }
                Ok(Self { kind, k, dim })
            }
        }
    }

    pub fn top_k(k: usize, dim: usize) -> Result<Self> {
        Self::new(CompressorKind::TopK, Some(k), dim)
    }

    pub fn rand_k(k: usize, dim: usize) -> Result<Self> {
        Self::new(CompressorKind::RandK, Some(k), dim)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(CompressorKind::Identity, None, dim)
    }

    /// Contraction factor of the operator.
    pub fn delta(&self) -> f64 {
        match self.kind {
            CompressorKind::Identity => 1.0,
            CompressorKind::TopK | CompressorKind::RandK => self.k as f64 / self.dim as f64,
        }
    }
}

/// Contraction factor of a compressor spec.
pub fn delta(spec: &CompressorSpec) -> f64 {
    spec.delta()
}

/// One compressed uplink transmission: retained coordinates of a
/// `dim`-dimensional vector, indices strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMessage {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMessage {
    pub fn new(dim: usize, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(Error::Config(format!(
                "sparse message index/value length mismatch: {} vs {}",
                indices.len(),
                values.len()
            )));
        }
        let sorted_unique = indices.windows(2).all(|w| w[0] < w[1]);
        if !sorted_unique {
            return Err(Error::Config(
                "sparse message indices must be strictly increasing".into(),
            ));
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::Config(format!(
                    "sparse message index {last} out of range for dim {dim}"
                )));
            }
        }
        Ok(Self {
            dim,
            indices,
            values,
        })
    }

    pub fn dense(x: &DenseVector) -> Self {
        Self {
            dim: x.dim(),
            indices: (0..x.dim()).collect(),
            values: x.as_slice().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn densify(&self) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim);
        for (i, v) in self.entries() {
            out[i] = v;
        }
        out
    }

    /// Uplink cost of this message under the declared accounting:
    /// 32-bit values plus `ceil(log2 dim)`-bit indices; a message carrying
    /// all `dim` coordinates is billed dense, with no index overhead.
    pub fn bits(&self) -> u64 {
        message_bits(self)
    }
}

fn ceil_log2(n: usize) -> u64 {
    debug_assert!(n > 0);
    (usize::BITS - (n - 1).leading_zeros()) as u64
}

/// Bit cost of one uplink message.
pub fn message_bits(msg: &SparseMessage) -> u64 {
    let entries = msg.nnz() as u64;
    if msg.nnz() == msg.dim() {
        entries * VALUE_BITS
    } else {
        entries * (VALUE_BITS + ceil_log2(msg.dim()))
    }
}

/// Apply the operator described by `spec` to `x`.
///
/// Only `RandK` consumes randomness; `TopK` and `Identity` are deterministic
/// and never touch `rng`.
pub fn compress(spec: &CompressorSpec, x: &DenseVector, rng: &mut RngStream) -> Result<SparseMessage> {
    if x.dim() != spec.dim {
        return Err(Error::DimensionMismatch {
            context: "compress",
            expected: spec.dim,
            got: x.dim(),
        });
    }
    let d = spec.dim;
    match spec.kind {
        CompressorKind::Identity => Ok(SparseMessage::dense(x)),
        CompressorKind::TopK => {
            let k = spec.k;
            let mut order: Vec<usize> = (0..d).collect();
            // Largest |x_i| first; among equal magnitudes the lower index wins.
            let by_magnitude = |&a: &usize, &b: &usize| {
                x[b].abs()
                    .total_cmp(&x[a].abs())
                    .then_with(|| a.cmp(&b))
            };
            if k < d {
                order.select_nth_unstable_by(k - 1, by_magnitude);
                order.truncate(k);
            }
            order.sort_unstable();
            let values = order.iter().map(|&i| x[i]).collect();
            SparseMessage::new(d, order, values)
        }
        CompressorKind::RandK => {
            let k = spec.k;
            let mut chosen = rand::seq::index::sample(rng, d, k).into_vec();
            chosen.sort_unstable();
            let values = chosen.iter().map(|&i| x[i]).collect();
            SparseMessage::new(d, chosen, values)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_stream, StreamDomain};
    use proptest::prelude::*;
    use rand::Rng as _;

    fn rng() -> RngStream {
        derive_stream(42, StreamDomain::Compressor, 0, 0)
    }

    #[test]
    fn top1_keeps_largest_magnitude() {
        let spec = CompressorSpec::top_k(1, 3).unwrap();
        let msg = compress(&spec, &DenseVector::from_vec(vec![3.0, -1.0, 2.0]), &mut rng()).unwrap();
        assert_eq!(msg.indices(), &[0]);
        assert_eq!(msg.values(), &[3.0]);
    }

    #[test]
    fn top1_tie_breaks_toward_lower_index() {
        let spec = CompressorSpec::top_k(1, 3).unwrap();
        let msg = compress(&spec, &DenseVector::from_vec(vec![2.0, -2.0, 1.0]), &mut rng()).unwrap();
        assert_eq!(msg.indices(), &[0]);
        assert_eq!(msg.values(), &[2.0]);

        // Negative-first variant: |-2| == |2|, index 1 wins over index 2.
        let msg = compress(&spec, &DenseVector::from_vec(vec![0.0, -2.0, 2.0]), &mut rng()).unwrap();
        assert_eq!(msg.indices(), &[1]);
        assert_eq!(msg.values(), &[-2.0]);
    }

    #[test]
    fn identity_is_lossless() {
        let spec = CompressorSpec::identity(3).unwrap();
        let x = DenseVector::from_vec(vec![3.0, -1.0, 2.0]);
        let msg = compress(&spec, &x, &mut rng()).unwrap();
        assert_eq!(msg.indices(), &[0, 1, 2]);
        assert_eq!(msg.values(), &[3.0, -1.0, 2.0]);
        assert_eq!(msg.densify(), x);
    }

    #[test]
    fn top1_contraction_on_worked_example() {
        // ||C(x) - x||^2 = 5 <= (1 - 1/3) * 14
        let spec = CompressorSpec::top_k(1, 3).unwrap();
        let x = DenseVector::from_vec(vec![3.0, -1.0, 2.0]);
        let msg = compress(&spec, &x, &mut rng()).unwrap();
        let err = msg.densify().sub(&x).norm_sq();
        assert_eq!(err, 5.0);
        assert!(err <= (1.0 - spec.delta()) * x.norm_sq());
    }

    #[test]
    fn delta_values() {
        assert_eq!(CompressorSpec::top_k(1, 3).unwrap().delta(), 1.0 / 3.0);
        assert_eq!(CompressorSpec::top_k(30, 300).unwrap().delta(), 0.1);
        assert_eq!(CompressorSpec::identity(5).unwrap().delta(), 1.0);
    }

    #[test]
    fn bit_accounting() {
        let m30 = SparseMessage::new(300, (0..30).collect(), vec![1.0; 30]).unwrap();
        assert_eq!(message_bits(&m30), 30 * (32 + 9));
        let m1 = SparseMessage::new(3, vec![1], vec![4.0]).unwrap();
        assert_eq!(message_bits(&m1), 34);
        let dense = SparseMessage::dense(&DenseVector::zeros(3));
        assert_eq!(message_bits(&dense), 96);
        // One-dimensional messages never pay index overhead.
        let m = SparseMessage::new(1, vec![0], vec![2.0]).unwrap();
        assert_eq!(message_bits(&m), 32);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = CompressorSpec::top_k(1, 3).unwrap();
        let err = compress(&spec, &DenseVector::zeros(4), &mut rng());
        assert!(matches!(err, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_k_is_rejected() {
        assert!(CompressorSpec::top_k(0, 3).is_err());
        assert!(CompressorSpec::top_k(4, 3).is_err());
        assert!(CompressorSpec::new(CompressorKind::TopK, None, 3).is_err());
    }

    #[test]
    fn topk_contraction_holds_on_random_vectors() {
        let mut rs = derive_stream(7, StreamDomain::Compressor, 1, 0);
        for &d in &[3usize, 10, 300] {
            for trial in 0..1000 {
                let x =
                    DenseVector::from_vec((0..d).map(|_| rs.gen_range(-10.0..10.0)).collect());
                let k = 1 + (trial % d);
                let spec = CompressorSpec::top_k(k, d).unwrap();
                let err = compress(&spec, &x, &mut rng()).unwrap().densify().sub(&x).norm_sq();
                let bound = (1.0 - spec.delta()) * x.norm_sq();
                assert!(
                    err <= bound + 1e-12,
                    "top-{k} of d={d} violated contraction: {err} > {bound}"
                );
            }
        }
    }

    #[test]
    fn randk_contraction_holds_in_expectation() {
        let mut rs = derive_stream(9, StreamDomain::Compressor, 2, 0);
        for &(k, d) in &[(1usize, 3usize), (3, 10), (30, 300)] {
            let x = DenseVector::from_vec((0..d).map(|_| rs.gen_range(-5.0..5.0)).collect());
            let spec = CompressorSpec::rand_k(k, d).unwrap();
            let draws = 10_000;
            let errs: Vec<f64> = (0..draws)
                .map(|t| {
                    let mut r = derive_stream(100, StreamDomain::Compressor, 0, t as u64);
                    compress(&spec, &x, &mut r).unwrap().densify().sub(&x).norm_sq()
                })
                .collect();
            let mean = errs.iter().sum::<f64>() / draws as f64;
            let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
                / (draws as f64 - 1.0);
            let se = (var / draws as f64).sqrt();
            let expected = (1.0 - spec.delta()) * x.norm_sq();
            assert!(
                (mean - expected).abs() <= 3.0 * se + 1e-12,
                "rand-{k}/{d}: mean {mean} vs expected {expected} (se {se})"
            );
        }
    }

    #[test]
    fn topk_support_is_idempotent() {
        let mut rs = derive_stream(11, StreamDomain::Compressor, 3, 0);
        for _ in 0..50 {
            let d = 20;
            let x = DenseVector::from_vec((0..d).map(|_| rs.gen_range(-1.0..1.0)).collect());
            let spec = CompressorSpec::top_k(6, d).unwrap();
            let once = compress(&spec, &x, &mut rng()).unwrap();
            let twice = compress(&spec, &once.densify(), &mut rng()).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn deterministic_compressors_ignore_rng_state() {
        let x = DenseVector::from_vec(vec![0.4, -0.9, 0.1, 2.0]);
        for spec in [
            CompressorSpec::top_k(2, 4).unwrap(),
            CompressorSpec::identity(4).unwrap(),
        ] {
            let mut r1 = derive_stream(1, StreamDomain::Compressor, 0, 0);
            let mut r2 = derive_stream(2, StreamDomain::Compressor, 5, 9);
            let _ = r2.gen::<u64>();
            assert_eq!(
                compress(&spec, &x, &mut r1).unwrap(),
                compress(&spec, &x, &mut r2).unwrap()
            );
        }
    }

    #[test]
    fn compress_of_zero_is_zero() {
        let spec = CompressorSpec::top_k(2, 5).unwrap();
        let msg = compress(&spec, &DenseVector::zeros(5), &mut rng()).unwrap();
        assert_eq!(msg.densify(), DenseVector::zeros(5));
    }

    proptest! {
        #[test]
        fn prop_topk_contraction_and_message_validity(
            raw in proptest::collection::vec(-100.0f64..100.0, 1..40),
            k_seed in 0usize..40,
        ) {
            let d = raw.len();
            let k = 1 + k_seed % d;
            let x = DenseVector::from_vec(raw);
            let spec = CompressorSpec::top_k(k, d).unwrap();
            let msg = compress(&spec, &x, &mut rng()).unwrap();
            prop_assert_eq!(msg.nnz(), k);
            prop_assert!(msg.indices().windows(2).all(|w| w[0] < w[1]));
            let err = msg.densify().sub(&x).norm_sq();
            prop_assert!(err <= (1.0 - spec.delta()) * x.norm_sq() + 1e-9);
        }

        #[test]
        fn prop_randk_keeps_original_values(
            raw in proptest::collection::vec(-100.0f64..100.0, 2..30),
            seed in 0u64..1000,
        ) {
            let d = raw.len();
            let x = DenseVector::from_vec(raw);
            let spec = CompressorSpec::rand_k(1 + (seed as usize) % d, d).unwrap();
            let mut r = derive_stream(seed, StreamDomain::Compressor, 0, 0);
            let msg = compress(&spec, &x, &mut r).unwrap();
            for (i, v) in msg.entries() {
                prop_assert_eq!(v, x[i]);
            }
        }
    }
}
