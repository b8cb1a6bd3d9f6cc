//! Dataset pairs (D0, D1) and binary test statistics for the audit attacks:
//! the baseline backdoor, ClipBKD, its feature-space variant, and the
//! ridge-regression poison pair.

pub mod backdoor;
pub mod clipbkd;
pub mod feature;
pub mod ridge;

pub use backdoor::{backdoor_generate, backdoor_statistic, backdoor_test, PatchPerturbation};
pub use clipbkd::{clipbkd_generate, clipbkd_statistic, clipbkd_test, least_variance_direction};
pub use feature::{feature_clipbkd_generate, FeatureClipBkdParams, FeatureMap};
pub use ridge::{ridge_audit_oracle, ridge_poison_pair, RidgeAuditOutcome, RidgePair};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::{sample_distinct, RngStream};
use crate::trainer::{Dataset, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    Backdoor,
    ClipBkd,
    FeatureClipBkd,
}

/// Raw distinguishing statistic: a scalar function of trained parameters,
/// thresholded later by the calibrated [`TestStatistic`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttackStatistic {
    /// Sum over the perturbed test set of the loss toward the target class.
    BackdoorLoss { pert: PatchPerturbation, target: usize },
    /// Logit shift between the poison point and the zero input, projected
    /// onto the target class (signed unit for binary, one-hot otherwise).
    LogitShift { poison: Vec<f64>, target: usize },
}

impl AttackStatistic {
    pub fn raw(&self, params: &ModelParams, test_data: &Dataset) -> f64 {
        match self {
            AttackStatistic::BackdoorLoss { pert, target } => {
                backdoor_statistic(params, test_data, pert, *target)
            }
            AttackStatistic::LogitShift { poison, target } => {
                clipbkd_statistic(params, poison, *target)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Backdoored,
    NotBackdoored,
}

/// A calibrated binary test: the output set O of the audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    pub statistic: AttackStatistic,
    pub threshold: f64,
    /// Direction fixed during calibration: flag when the raw statistic is
    /// above (true) or below (false) the threshold.
    pub flag_above: bool,
}

impl TestStatistic {
    pub fn evaluate(&self, params: &ModelParams, test_data: &Dataset) -> Outcome {
        let raw = self.statistic.raw(params, test_data);
        let flagged = if self.flag_above { raw > self.threshold } else { raw < self.threshold };
        if flagged {
            Outcome::Backdoored
        } else {
            Outcome::NotBackdoored
        }
    }
}

/// The (D0, D1) pair of an audit: D0 is the clean data, D1 has exactly `k`
/// rows replaced by the poison rows.
#[derive(Debug, Clone)]
pub struct PoisonPlan {
    pub kind: AttackKind,
    pub d0: Dataset,
    pub d1: Dataset,
    pub k: usize,
    pub poison_rows: Vec<(Vec<f64>, usize)>,
    pub statistic: AttackStatistic,
    pub warnings: Vec<String>,
}

impl PoisonPlan {
    pub fn validate(&self) -> Result<()> {
        if self.d0.n() != self.d1.n() || self.d0.dim() != self.d1.dim() {
            return Err(Error::InvalidArgument(
                "poison plan datasets must share size and dimension".into(),
            ));
        }
        let differing = self.d0.rows_differing(&self.d1);
        if differing != self.k {
            return Err(Error::InvalidArgument(format!(
                "poison plan must differ on exactly {} rows, found {differing}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Replaces `k` random rows of `data` with the given poison rows, retrying
/// the target choice on content collisions so the k-row-difference invariant
/// holds exactly. Deterministic given the stream.
pub(crate) fn replace_random_rows(
    data: &Dataset,
    poison_rows: &[(Vec<f64>, usize)],
    stream: RngStream,
) -> Result<Dataset> {
    let k = poison_rows.len();
    if k > data.n() {
        return Err(Error::InvalidArgument(format!(
            "cannot replace {k} rows of a {}-row dataset",
            data.n()
        )));
    }
    let mut rng = stream.generator();
    for _attempt in 0..16 {
        let targets = sample_distinct(&mut rng, data.n(), k);
        let mut poisoned = data.clone();
        for (idx, (row, label)) in targets.iter().zip(poison_rows) {
            poisoned.replace_row(*idx, row, *label)?;
        }
        if data.rows_differing(&poisoned) == k {
            return Ok(poisoned);
        }
    }
    Err(Error::DegenerateData(
        "could not place poison rows distinct from existing data".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::Matrix;
    use crate::numerics::rng::standard_normal;

    pub(crate) fn random_dataset(n: usize, d: usize, stream: RngStream) -> Dataset {
        let mut rng = stream.generator();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| standard_normal(&mut rng)).collect())
            .collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, 2).unwrap()
    }

    #[test]
    fn replacement_differs_on_exactly_k_rows() {
        let data = random_dataset(100, 4, RngStream::new(5, 0));
        let poison: Vec<(Vec<f64>, usize)> =
            (0..4).map(|i| (vec![10.0 + i as f64; 4], 1)).collect();
        let poisoned = replace_random_rows(&data, &poison, RngStream::new(5, 1)).unwrap();
        assert_eq!(data.rows_differing(&poisoned), 4);
    }

    #[test]
    fn replacement_is_deterministic() {
        let data = random_dataset(50, 3, RngStream::new(6, 0));
        let poison = vec![(vec![7.0, 7.0, 7.0], 0)];
        let a = replace_random_rows(&data, &poison, RngStream::new(6, 1)).unwrap();
        let b = replace_random_rows(&data, &poison, RngStream::new(6, 1)).unwrap();
        assert_eq!(a.rows_differing(&b), 0);
    }

    #[test]
    fn threshold_extremes_force_both_outcomes() {
        let data = random_dataset(10, 3, RngStream::new(7, 0));
        let params = ModelParams::new(&crate::trainer::ModelSpec::logistic(), 3, 2).unwrap();
        let statistic = AttackStatistic::LogitShift { poison: vec![1.0, 0.0, 0.0], target: 1 };
        let always = TestStatistic {
            statistic: statistic.clone(),
            threshold: f64::NEG_INFINITY,
            flag_above: true,
        };
        let never = TestStatistic { statistic, threshold: f64::INFINITY, flag_above: true };
        assert_eq!(always.evaluate(&params, &data), Outcome::Backdoored);
        assert_eq!(never.evaluate(&params, &data), Outcome::NotBackdoored);
    }
}
