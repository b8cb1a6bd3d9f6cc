//! Feature-space ClipBKD for the transfer-learning setting: the poison point
//! is found in input space by projected gradient ascent so that its image
//! under a frozen encoder aligns with the feature matrix's low-variance
//! singular directions and avoids the high-variance ones, subject to the
//! box constraint x in [0, 1]^d.

use serde::{Deserialize, Serialize};

use crate::attacks::{replace_random_rows, AttackKind, AttackStatistic, PoisonPlan};
use crate::error::{Error, Result};
use crate::numerics::matrix::{dot, Matrix};
use crate::numerics::rng::RngStream;
use crate::numerics::svd::svd;
use crate::trainer::{Arch, Dataset, ModelParams};

/// Frozen encoder standing in for a pretrained feature extractor.
#[derive(Debug, Clone)]
pub enum FeatureMap {
    /// Features are the inputs themselves.
    Identity { dim: usize },
    /// ReLU hidden-layer activations of a fixed feedforward network.
    Hidden(ModelParams),
}

impl FeatureMap {
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Hidden(m) => m.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Hidden(m) => m.hidden_width(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity { .. } => x.to_vec(),
            FeatureMap::Hidden(m) => m.hidden_activations(x),
        }
    }

    /// Jacobian-transpose product: gradient pullback from feature space.
    fn vjp(&self, x: &[f64], cotangent: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity { .. } => cotangent.to_vec(),
            FeatureMap::Hidden(m) => {
                let d = m.input_dim();
                let h = m.hidden_width();
                let theta = m.theta();
                let mut out = vec![0.0; d];
                for l in 0..h {
                    // Pre-activation decides the ReLU gate.
                    let mut a = theta[h * d + l];
                    for i in 0..d {
                        a += theta[l * d + i] * x[i];
                    }
                    if a <= 0.0 {
                        continue;
                    }
                    for i in 0..d {
                        out[i] += cotangent[l] * theta[l * d + i];
                    }
                }
                out
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let FeatureMap::Hidden(m) = self {
            if m.arch() != Arch::Fnn {
                return Err(Error::InvalidArgument(
                    "hidden feature map requires the fnn architecture".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Search knobs for the projected gradient ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureClipBkdParams {
    pub q_low: usize,
    pub q_high: usize,
    pub iterations: usize,
    pub step: f64,
}

impl Default for FeatureClipBkdParams {
    fn default() -> Self {
        Self { q_low: 10, q_high: 10, iterations: 10_000, step: 1.0 }
    }
}

impl FeatureClipBkdParams {
    /// Subspace sizes `min(10, feature_dim / 4)` (at least one), defaults for
    /// iteration count and step size.
    pub fn for_feature_dim(feature_dim: usize) -> Self {
        let q = (feature_dim / 4).clamp(1, 10);
        Self { q_low: q, q_high: q, ..Self::default() }
    }
}

/// Outcome of the box-constrained ascent.
struct SearchResult {
    point: Vec<f64>,
    final_gain: f64,
}

fn projected_gradient_ascent(
    map: &FeatureMap,
    v_low: &[Vec<f64>],
    v_high: &[Vec<f64>],
    start: Vec<f64>,
    iterations: usize,
    step: f64,
) -> SearchResult {
    let objective = |features: &[f64]| -> f64 {
        let low: f64 = v_low.iter().map(|v| dot(features, v).powi(2)).sum();
        let high: f64 = v_high.iter().map(|v| dot(features, v).powi(2)).sum();
        low - high
    };

    let mut x = start;
    let mut previous = objective(&map.forward(&x));
    let mut final_gain = 0.0;
    for _ in 0..iterations {
        let features = map.forward(&x);
        let mut cotangent = vec![0.0; features.len()];
        for v in v_low {
            let c = 2.0 * dot(&features, v);
            for (slot, vi) in cotangent.iter_mut().zip(v) {
                *slot += c * vi;
            }
        }
        for v in v_high {
            let c = 2.0 * dot(&features, v);
            for (slot, vi) in cotangent.iter_mut().zip(v) {
                *slot -= c * vi;
            }
        }
        let gradient = map.vjp(&x, &cotangent);
        for (xi, gi) in x.iter_mut().zip(&gradient) {
            *xi = (*xi + step * gi).clamp(0.0, 1.0);
        }
        debug_assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let current = objective(&map.forward(&x));
        final_gain = current - previous;
        previous = current;
    }
    SearchResult { point: x, final_gain }
}

/// Builds the feature-space plan. `reference` picks the target class as in
/// plain ClipBKD. A warning is attached (plan still returned) when the
/// objective was still improving by more than 1e-6 per step at the end.
pub fn feature_clipbkd_generate(
    map: &FeatureMap,
    data: &Dataset,
    k: usize,
    reference: &ModelParams,
    search: &FeatureClipBkdParams,
    stream: RngStream,
) -> Result<PoisonPlan> {
    map.validate()?;
    if map.input_dim() != data.dim() {
        return Err(Error::InvalidArgument(
            "feature map input dimension does not match the dataset".into(),
        ));
    }
    if k > data.n() {
        return Err(Error::InvalidArgument(format!(
            "poison size {k} exceeds dataset size {}",
            data.n()
        )));
    }
    let feature_dim = map.output_dim();
    if search.q_low + search.q_high == 0 {
        return Err(Error::InvalidArgument("q_low + q_high must be >= 1".into()));
    }
    if search.q_low > feature_dim || search.q_high > feature_dim {
        return Err(Error::InvalidArgument(format!(
            "subspace sizes ({}, {}) exceed feature dimension {feature_dim}",
            search.q_low, search.q_high
        )));
    }
    if search.iterations == 0 || search.step.is_nan() || search.step <= 0.0 {
        return Err(Error::InvalidArgument("search needs iterations >= 1 and step > 0".into()));
    }

    // Feature matrix of the clean data defines the singular directions.
    let mapped: Vec<Vec<f64>> = (0..data.n()).map(|i| map.forward(data.example(i).0)).collect();
    let features = Matrix::from_rows(&mapped)?;
    let decomposition = svd(&features)?;
    if decomposition.singular_values[0] <= 0.0 {
        return Err(Error::DegenerateData("zero-rank feature matrix".into()));
    }
    let v = &decomposition.v;
    let v_high: Vec<Vec<f64>> = (0..search.q_high).map(|j| v.col(j)).collect();
    let v_low: Vec<Vec<f64>> =
        (feature_dim - search.q_low..feature_dim).map(|j| v.col(j)).collect();

    // Seeded start inside the box.
    let mut rng = stream.generator();
    let start: Vec<f64> = (0..data.dim()).map(|_| rand::Rng::random::<f64>(&mut rng)).collect();
    let result = projected_gradient_ascent(
        map,
        &v_low,
        &v_high,
        start,
        search.iterations,
        search.step,
    );

    let mut warnings = Vec::new();
    if result.final_gain > 1e-6 {
        warnings.push(format!(
            "feature search still improving by {:.3e} per step after {} iterations",
            result.final_gain, search.iterations
        ));
    }

    let poison = result.point;
    let scores = reference.scores(&poison);
    let mut target = 0;
    for (j, s) in scores.iter().enumerate() {
        if *s < scores[target] {
            target = j;
        }
    }

    let poison_rows: Vec<(Vec<f64>, usize)> = (0..k).map(|_| (poison.clone(), target)).collect();
    let d1 = replace_random_rows(data, &poison_rows, stream.with_stream(stream.stream ^ 1))?;
    let plan = PoisonPlan {
        kind: AttackKind::FeatureClipBkd,
        d0: data.clone(),
        d1,
        k,
        poison_rows,
        statistic: AttackStatistic::LogitShift { poison, target },
        warnings,
    };
    plan.validate()?;
    Ok(plan)
}
