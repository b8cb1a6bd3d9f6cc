//! Baseline backdoor poisoning: a bright square patch in a fixed corner of
//! image-shaped rows, relabeled to the target class. The test statistic sums
//! the loss toward the target over the perturbed test set.

use serde::{Deserialize, Serialize};

use crate::attacks::{replace_random_rows, AttackKind, AttackStatistic, Outcome, PoisonPlan};
use crate::error::{Error, Result};
use crate::numerics::rng::{sample_distinct, RngStream};
use crate::trainer::{Dataset, ModelParams};

/// Square patch written onto flattened `height x width` images.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchPerturbation {
    pub image_height: usize,
    pub image_width: usize,
    /// Top-left corner of the patch.
    pub row0: usize,
    pub col0: usize,
    pub size: usize,
    /// Value written into the patch (max intensity for [0, 1] images).
    pub intensity: f64,
}

impl PatchPerturbation {
    /// The default pattern: a white square in the top-left corner, 5x5 on
    /// images at least that large.
    pub fn top_left(image_height: usize, image_width: usize) -> Self {
        let size = 5.min(image_height).min(image_width);
        Self { image_height, image_width, row0: 0, col0: 0, size, intensity: 1.0 }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.image_height * self.image_width != dim {
            return Err(Error::InvalidArgument(format!(
                "patch image shape {}x{} does not match feature dimension {dim}",
                self.image_height, self.image_width
            )));
        }
        if self.size == 0 {
            return Err(Error::InvalidArgument("patch size must be >= 1".into()));
        }
        if self.row0 + self.size > self.image_height || self.col0 + self.size > self.image_width {
            return Err(Error::InvalidArgument(format!(
                "{}x{} patch at ({}, {}) exceeds {}x{} image bounds",
                self.size, self.size, self.row0, self.col0, self.image_height, self.image_width
            )));
        }
        if !self.intensity.is_finite() {
            return Err(Error::InvalidArgument("patch intensity must be finite".into()));
        }
        Ok(())
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        let mut out = row.to_vec();
        for r in self.row0..self.row0 + self.size {
            for c in self.col0..self.col0 + self.size {
                out[r * self.image_width + c] = self.intensity;
            }
        }
        out
    }
}

/// Draws `k` random rows, perturbs and relabels them, and replaces `k`
/// random rows of the data with the result. D0 is the clean data.
pub fn backdoor_generate(
    data: &Dataset,
    k: usize,
    pert: &PatchPerturbation,
    target: usize,
    stream: RngStream,
) -> Result<PoisonPlan> {
    pert.validate(data.dim())?;
    if k > data.n() {
        return Err(Error::InvalidArgument(format!(
            "poison size {k} exceeds dataset size {}",
            data.n()
        )));
    }
    if target >= data.class_count() {
        return Err(Error::InvalidArgument(format!(
            "target class {target} out of range for {} classes",
            data.class_count()
        )));
    }
    let mut rng = stream.generator();
    let sources = sample_distinct(&mut rng, data.n(), k);
    let poison_rows: Vec<(Vec<f64>, usize)> = sources
        .iter()
        .map(|&i| (pert.apply(data.example(i).0), target))
        .collect();
    let d1 = replace_random_rows(data, &poison_rows, stream.with_stream(stream.stream ^ 1))?;
    let plan = PoisonPlan {
        kind: AttackKind::Backdoor,
        d0: data.clone(),
        d1,
        k,
        poison_rows,
        statistic: AttackStatistic::BackdoorLoss { pert: *pert, target },
        warnings: Vec::new(),
    };
    plan.validate()?;
    Ok(plan)
}

/// Sum over the perturbed test set of the loss toward the target class.
pub fn backdoor_statistic(
    params: &ModelParams,
    test_data: &Dataset,
    pert: &PatchPerturbation,
    target: usize,
) -> f64 {
    (0..test_data.n())
        .map(|i| {
            let perturbed = pert.apply(test_data.example(i).0);
            params.loss(&perturbed, target)
        })
        .sum()
}

/// Flags Backdoored when the summed loss exceeds `z`. The statistic
/// direction is calibrated empirically, so audit flows threshold through
/// [`crate::attacks::TestStatistic`] instead.
pub fn backdoor_test(
    params: &ModelParams,
    test_data: &Dataset,
    pert: &PatchPerturbation,
    target: usize,
    z: f64,
) -> Outcome {
    if backdoor_statistic(params, test_data, pert, target) > z {
        Outcome::Backdoored
    } else {
        Outcome::NotBackdoored
    }
}
