//! Label-skewed dataset partitioning.
//!
//! A `skew_fraction` share of every label's samples is assigned by label
//! (label `l` goes to client `l mod n`); the remainder is shuffled and dealt
//! uniformly across clients. `skew_fraction = 1` with `n = num_classes`
//! gives a fully label-separated split; `skew_fraction = 0` is a uniform
//! random split with client sizes within one sample of each other.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_stream, StreamDomain};

use super::dataset::LabeledDataset;

pub fn partition_by_label(
    dataset: &LabeledDataset,
    n: usize,
    skew_fraction: f64,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if n == 0 {
        return Err(Error::Config("partition needs at least one client".into()));
    }
    if !(0.0..=1.0).contains(&skew_fraction) {
        return Err(Error::Config(
            "problem.skew_fraction: must be in [0, 1]".into(),
        ));
    }

    let num_classes = dataset.num_classes();
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for s in 0..dataset.num_samples() {
        by_label[dataset.label(s)].push(s);
    }

    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pool: Vec<usize> = Vec::new();
    for (label, mut samples) in by_label.into_iter().enumerate() {
        shuffle(&mut samples, &mut derive_stream(seed, StreamDomain::Partition, label as u64, 0));
        let keep = ((samples.len() as f64) * skew_fraction).round() as usize;
        let keep = keep.min(samples.len());
        shards[label % n].extend_from_slice(&samples[..keep]);
        pool.extend_from_slice(&samples[keep..]);
    }

    shuffle(&mut pool, &mut derive_stream(seed, StreamDomain::Partition, u64::MAX, 0));
    for (offset, s) in pool.into_iter().enumerate() {
        shards[offset % n].push(s);
    }

    for shard in &mut shards {
        shard.sort_unstable();
    }
    Ok(shards)
}

fn shuffle(items: &mut [usize], rng: &mut crate::rng::RngStream) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i);
        items.swap(i, j);
    }
}
