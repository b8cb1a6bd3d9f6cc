//! DP-SGD over two model families: logistic regression and a two-layer
//! feedforward network, with per-example gradient clipping and Gaussian
//! noise on the averaged gradient.

pub mod dpsgd;
pub mod model;

pub use dpsgd::{clip, dp_sgd_train, mean_clipped_gradient};
pub use model::{Arch, ModelParams, ModelSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::{l2_norm, Matrix};

/// Labeled dataset: feature matrix (n x d) plus integer labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_count: usize,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, class_count: usize) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if class_count < 2 {
            return Err(Error::InvalidArgument("class_count must be >= 2".into()));
        }
        if let Some(bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {class_count} classes"
            )));
        }
        Ok(Self { features, labels, class_count })
    }

    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn example(&self, i: usize) -> (&[f64], usize) {
        (self.features.row(i), self.labels[i])
    }

    pub fn replace_row(&mut self, i: usize, row: &[f64], label: usize) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::InvalidArgument("replacement row dimension mismatch".into()));
        }
        if label >= self.class_count {
            return Err(Error::InvalidArgument("replacement label out of range".into()));
        }
        self.features.row_mut(i).copy_from_slice(row);
        self.labels[i] = label;
        Ok(())
    }

    pub fn mean_row_norm(&self) -> f64 {
        let n = self.n() as f64;
        (0..self.n()).map(|i| l2_norm(self.features.row(i))).sum::<f64>() / n
    }

    /// Number of rows on which two datasets differ (features or label).
    pub fn rows_differing(&self, other: &Dataset) -> usize {
        assert_eq!(self.n(), other.n());
        assert_eq!(self.dim(), other.dim());
        (0..self.n())
            .filter(|&i| self.labels[i] != other.labels[i] || self.features.row(i) != other.features.row(i))
            .count()
    }

    /// First `count` rows as a new dataset.
    pub fn take(&self, count: usize) -> Result<Dataset> {
        if count == 0 || count > self.n() {
            return Err(Error::InvalidArgument(format!(
                "cannot take {count} rows from {}",
                self.n()
            )));
        }
        let rows: Vec<Vec<f64>> = (0..count).map(|i| self.features.row(i).to_vec()).collect();
        Dataset::new(
            Matrix::from_rows(&rows)?,
            self.labels[..count].to_vec(),
            self.class_count,
        )
    }

    /// Splits off the trailing `count` rows; returns (head, tail).
    pub fn split_tail(&self, count: usize) -> Result<(Dataset, Dataset)> {
        if count == 0 || count >= self.n() {
            return Err(Error::InvalidArgument(format!(
                "split of {count} rows from {} leaves an empty side",
                self.n()
            )));
        }
        let head_rows: Vec<Vec<f64>> =
            (0..self.n() - count).map(|i| self.features.row(i).to_vec()).collect();
        let tail_rows: Vec<Vec<f64>> =
            (self.n() - count..self.n()).map(|i| self.features.row(i).to_vec()).collect();
        let head = Dataset::new(
            Matrix::from_rows(&head_rows)?,
            self.labels[..self.n() - count].to_vec(),
            self.class_count,
        )?;
        let tail = Dataset::new(
            Matrix::from_rows(&tail_rows)?,
            self.labels[self.n() - count..].to_vec(),
            self.class_count,
        )?;
        Ok((head, tail))
    }
}

/// Mini-batch construction policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BatchSampling {
    /// Epoch-wise shuffle into disjoint batches.
    #[default]
    Shuffle,
    /// Independent inclusion with probability b/n each step, fixed divisor b.
    Poisson,
}

/// DP-SGD hyperparameters.
///
/// `clip_norm: None` means unclipped, so non-private baselines share the code
/// path; `claimed_eps_th: None` means an infinite claimed epsilon and is tied
/// to `noise_multiplier == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub clip_norm: Option<f64>,
    pub noise_multiplier: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub init_scale: f64,
    pub l2_reg: f64,
    pub claimed_eps_th: Option<f64>,
    pub delta: f64,
    #[serde(default)]
    pub sampling: BatchSampling,
}

impl SgdConfig {
    /// Noise-free, unclipped baseline used for reference models.
    pub fn non_private(epochs: usize, batch_size: usize, learning_rate: f64) -> Self {
        Self {
            clip_norm: None,
            noise_multiplier: 0.0,
            epochs,
            batch_size,
            learning_rate,
            init_scale: 1.0,
            l2_reg: 0.0,
            claimed_eps_th: None,
            delta: 0.0,
            sampling: BatchSampling::Shuffle,
        }
    }

    pub fn clip_limit(&self) -> f64 {
        self.clip_norm.unwrap_or(f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.clip_norm {
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::InvalidConfig(format!("clip norm must be finite and positive, got {c}")));
            }
        }
        if self.noise_multiplier.is_nan() || self.noise_multiplier < 0.0 {
            return Err(Error::InvalidConfig("noise multiplier must be non-negative".into()));
        }
        if self.noise_multiplier > 0.0 && self.clip_norm.is_none() {
            return Err(Error::InvalidConfig(
                "noise requires a finite clipping norm".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.init_scale.is_nan() || self.init_scale < 0.0 {
            return Err(Error::InvalidConfig("init scale must be non-negative".into()));
        }
        if self.l2_reg.is_nan() || self.l2_reg < 0.0 {
            return Err(Error::InvalidConfig("l2 regularization must be non-negative".into()));
        }
        if self.delta.is_nan() || self.delta < 0.0 || self.delta >= 1.0 {
            return Err(Error::InvalidConfig("delta must lie in [0, 1)".into()));
        }
        match self.claimed_eps_th {
            None => {
                if self.noise_multiplier != 0.0 {
                    return Err(Error::InvalidConfig(
                        "an infinite claimed epsilon requires zero noise".into(),
                    ));
                }
            }
            Some(e) => {
                if e.is_nan() || e <= 0.0 {
                    return Err(Error::InvalidConfig("claimed epsilon must be positive".into()));
                }
                if self.noise_multiplier == 0.0 {
                    return Err(Error::InvalidConfig(
                        "a finite claimed epsilon requires positive noise".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset() -> Dataset {
        let x = Matrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        Dataset::new(x, vec![0, 1, 1], 2).unwrap()
    }

    #[test]
    fn dataset_rejects_out_of_range_labels() {
        let x = Matrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(Dataset::new(x, vec![0, 2], 2).is_err());
    }

    #[test]
    fn rows_differing_counts_replacements() {
        let a = tiny_dataset();
        let mut b = a.clone();
        assert_eq!(a.rows_differing(&b), 0);
        b.replace_row(1, &[5.0, 5.0], 0).unwrap();
        assert_eq!(a.rows_differing(&b), 1);
    }

    #[test]
    fn config_validation_rules() {
        let mut cfg = SgdConfig::non_private(1, 2, 0.1);
        assert!(cfg.validate().is_ok());

        // Noise without clipping is rejected.
        cfg.noise_multiplier = 1.0;
        assert!(cfg.validate().is_err());

        // Noise with clipping needs a finite claimed epsilon.
        cfg.clip_norm = Some(1.0);
        assert!(cfg.validate().is_err());
        cfg.claimed_eps_th = Some(2.0);
        assert!(cfg.validate().is_ok());

        // Infinite claimed epsilon with positive noise is inconsistent.
        cfg.claimed_eps_th = None;
        assert!(cfg.validate().is_err());
    }
}
