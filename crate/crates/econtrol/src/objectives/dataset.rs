//! Labeled datasets for the classification objectives.

use std::io::Read;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{derive_stream, standard_normal, StreamDomain};

/// Row-major feature matrix with integer class labels.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    features: Vec<f64>,
    num_features: usize,
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(features: Vec<f64>, num_features: usize, labels: Vec<usize>) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::Data("datasets need at least one feature".into()));
        }
        if labels.is_empty() || features.len() != labels.len() * num_features {
            return Err(Error::Data(format!(
                "feature matrix shape mismatch: {} values for {} samples x {} features",
                features.len(),
                labels.len(),
                num_features
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("feature rows must be finite".into()));
        }
        let num_classes = labels.iter().copied().max().unwrap() + 1;
        Ok(Self {
            features,
            num_features,
            labels,
            num_classes,
        })
    }

    /// Load from CSV: one row per sample, last column an integer label,
    /// remaining columns real features.
    pub fn from_csv(path: &Path, has_header: bool) -> Result<Self> {
        let mut text = String::new();
        std::fs::File::open(path)?.read_to_string(&mut text)?;
        Self::from_csv_str(&text, has_header)
    }

    pub fn from_csv_str(text: &str, has_header: bool) -> Result<Self> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        let mut num_features = None;
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 && has_header {
                continue;
            }
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() < 2 {
                return Err(Error::Data(format!(
                    "csv line {}: need at least one feature and a label",
                    lineno + 1
                )));
            }
            let nf = cells.len() - 1;
            match num_features {
                None => num_features = Some(nf),
                Some(expected) if expected != nf => {
                    return Err(Error::Data(format!(
                        "csv line {}: expected {} features, got {}",
                        lineno + 1,
                        expected,
                        nf
                    )))
                }
                _ => {}
            }
            for cell in &cells[..nf] {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::Data(format!("csv line {}: bad feature '{}'", lineno + 1, cell))
                })?;
                features.push(v);
            }
            let raw: f64 = cells[nf].parse().map_err(|_| {
                Error::Data(format!("csv line {}: bad label '{}'", lineno + 1, cells[nf]))
            })?;
            if raw.fract() != 0.0 || raw < 0.0 {
                return Err(Error::Data(format!(
                    "csv line {}: label must be a nonnegative integer, got '{}'",
                    lineno + 1,
                    cells[nf]
                )));
            }
            labels.push(raw as usize);
        }
        let num_features =
            num_features.ok_or_else(|| Error::Data("csv contains no sample rows".into()))?;
        Self::new(features, num_features, labels)
    }

    /// Synthetic Gaussian-blob classification set: a desk-scale stand-in for
    /// image benchmarks. Classes are balanced; samples cluster around
    /// per-class centers.
    pub fn synthetic_blobs(
        num_samples: usize,
        num_features: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if num_samples == 0 || num_features == 0 || num_classes == 0 {
            return Err(Error::Data("synthetic dataset sizes must be positive".into()));
        }
        let centers: Vec<Vec<f64>> = (0..num_classes)
            .map(|c| {
                let mut rng = derive_stream(seed, StreamDomain::Data, c as u64, 0);
                (0..num_features).map(|_| 2.0 * standard_normal(&mut rng)).collect()
            })
            .collect();
        let mut features = Vec::with_capacity(num_samples * num_features);
        let mut labels = Vec::with_capacity(num_samples);
        let mut rng = derive_stream(seed, StreamDomain::Data, u64::MAX, 0);
        for s in 0..num_samples {
            let label = s % num_classes;
            labels.push(label);
            for center in &centers[label] {
                features.push(center + 0.6 * standard_normal(&mut rng));
            }
        }
        // Shuffle sample order so label blocks are not contiguous.
        let mut order: Vec<usize> = (0..num_samples).collect();
        for i in (1..num_samples).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut shuffled_features = Vec::with_capacity(features.len());
        let mut shuffled_labels = Vec::with_capacity(labels.len());
        for &s in &order {
            shuffled_features.extend_from_slice(&features[s * num_features..(s + 1) * num_features]);
            shuffled_labels.push(labels[s]);
        }
        Self::new(shuffled_features, num_features, shuffled_labels)
    }

    pub fn num_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label(&self, sample: usize) -> usize {
        self.labels[sample]
    }

    pub fn sample_features(&self, sample: usize) -> &[f64] {
        &self.features[sample * self.num_features..(sample + 1) * self.num_features]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip_with_header() {
        let text = "a,b,label\n1.0,2.0,0\n-1.5,0.25,1\n0,0,2\n";
        let ds = LabeledDataset::from_csv_str(text, true).unwrap();
        assert_eq!(ds.num_samples(), 3);
        assert_eq!(ds.num_features(), 2);
        assert_eq!(ds.num_classes(), 3);
        assert_eq!(ds.sample_features(1), &[-1.5, 0.25]);
        assert_eq!(ds.label(2), 2);
    }

    #[test]
    fn csv_rejects_fractional_labels() {
        assert!(LabeledDataset::from_csv_str("1.0,0.5\n", false).is_err());
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(LabeledDataset::from_csv_str("1.0,2.0,0\n1.0,1\n", false).is_err());
    }

    #[test]
    fn blobs_are_balanced_and_deterministic() {
        let a = LabeledDataset::synthetic_blobs(120, 6, 4, 9).unwrap();
        let b = LabeledDataset::synthetic_blobs(120, 6, 4, 9).unwrap();
        assert_eq!(a.features, b.features);
        for c in 0..4 {
            assert_eq!(a.labels.iter().filter(|&&l| l == c).count(), 30);
        }
    }
}
