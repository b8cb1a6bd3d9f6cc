use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackKind, FeatureClipBkdParams, PatchPerturbation};
use crate::error::{Error, Result};
use crate::trainer::{ModelSpec, SgdConfig};

/// Synthetic data description: a two-class Gaussian mixture with a geometric
/// per-axis spectrum, or a flattened-image mode for backdoor patches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub dim: usize,
    /// Class mean separation along the leading axis, in units of its std.
    pub separation: f64,
    /// Per-axis std decay factor; 1.0 is isotropic, smaller values give the
    /// data a clear least-variance direction (floored at 1e-3).
    pub spectrum_decay: f64,
    /// Image mode: rows are flattened `height x width` pictures in [0, 1].
    pub image: Option<(usize, usize)>,
    /// Rows generated for the held-out test set.
    pub test_n: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self { n: 1000, dim: 20, separation: 4.0, spectrum_decay: 0.7, image: None, test_n: 200 }
    }
}

impl SynthSpec {
    /// Parses `"n=1000,d=20,sep=4,decay=0.7,test=200"`, optionally with
    /// `image=HxW` (which fixes `d = H*W`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SynthSpec::default();
        for part in text.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (key, value) = part.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("synthetic spec entry `{part}` is not key=value"))
            })?;
            let parse_err =
                |k: &str| Error::InvalidConfig(format!("bad value for `{k}` in synthetic spec"));
            match key {
                "n" => spec.n = value.parse().map_err(|_| parse_err("n"))?,
                "d" => spec.dim = value.parse().map_err(|_| parse_err("d"))?,
                "sep" => spec.separation = value.parse().map_err(|_| parse_err("sep"))?,
                "decay" => spec.spectrum_decay = value.parse().map_err(|_| parse_err("decay"))?,
                "test" => spec.test_n = value.parse().map_err(|_| parse_err("test"))?,
                "image" => {
                    let (h, w) = value.split_once('x').ok_or_else(|| parse_err("image"))?;
                    let h: usize = h.parse().map_err(|_| parse_err("image"))?;
                    let w: usize = w.parse().map_err(|_| parse_err("image"))?;
                    spec.image = Some((h, w));
                }
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown synthetic spec key `{other}`"
                    )))
                }
            }
        }
        if let Some((h, w)) = spec.image {
            spec.dim = h * w;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("synthetic data needs n >= 1 and d >= 1".into()));
        }
        if self.test_n == 0 {
            return Err(Error::InvalidConfig("synthetic data needs test rows".into()));
        }
        if !self.separation.is_finite() || self.separation < 0.0 {
            return Err(Error::InvalidConfig("separation must be finite and non-negative".into()));
        }
        if self.spectrum_decay.is_nan() || self.spectrum_decay <= 0.0 || self.spectrum_decay > 1.0 {
            return Err(Error::InvalidConfig("spectrum decay must lie in (0, 1]".into()));
        }
        if let Some((h, w)) = self.image {
            if h * w != self.dim {
                return Err(Error::InvalidConfig(format!(
                    "image {h}x{w} does not match dimension {}",
                    self.dim
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Csv { path: PathBuf },
    Synth { spec: SynthSpec },
}

/// Full description of one audit experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub attack: AttackKind,
    pub k: usize,
    /// Fresh trainings per arm in the estimation phase.
    pub trials: usize,
    /// Trainings per arm used to pick the threshold, never reused.
    pub calibration_trials: usize,
    pub alpha: f64,
    /// Delta used by the group-privacy conversion.
    pub delta: f64,
    pub sgd: SgdConfig,
    pub model: ModelSpec,
    pub data: DataSource,
    pub master_seed: u64,
    /// Backdoor patch; defaults to the 5x5 top-left square on image data.
    pub patch: Option<PatchPerturbation>,
    /// ClipBKD poison norm; defaults to the mean training row norm.
    pub poison_norm: Option<f64>,
    /// Feature-space search knobs; defaults derived from the feature width.
    pub feature_search: Option<FeatureClipBkdParams>,
    /// Fraction of a CSV dataset held out as the test split.
    pub csv_test_fraction: f64,
}

impl AuditConfig {
    pub fn new(attack: AttackKind, data: DataSource, sgd: SgdConfig, model: ModelSpec) -> Self {
        let delta = sgd.delta;
        Self {
            attack,
            k: 1,
            trials: 100,
            calibration_trials: 100,
            alpha: 0.01,
            delta,
            sgd,
            model,
            data,
            master_seed: 0,
            patch: None,
            poison_norm: None,
            feature_search: None,
            csv_test_fraction: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.calibration_trials < 2 {
            return Err(Error::InvalidConfig("calibration needs at least 2 trials".into()));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig("delta must lie in [0, 1)".into()));
        }
        if !(self.csv_test_fraction > 0.0 && self.csv_test_fraction < 1.0) {
            return Err(Error::InvalidConfig("csv test fraction must lie in (0, 1)".into()));
        }
        self.sgd.validate()
    }
}

/// One noise level of a sweep: the DP-SGD noise multiplier together with the
/// claimed epsilon it is labeled with (None = infinite).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevel {
    pub sigma: f64,
    pub eps_th: Option<f64>,
}

/// Axes of a hyperparameter sweep; the cell grid is their Cartesian product
/// and results report the per-k values plus the max over k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub clip_norms: Vec<Option<f64>>,
    pub noise_levels: Vec<NoiseLevel>,
    pub init_scales: Vec<f64>,
    pub poison_counts: Vec<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.clip_norms.is_empty()
            || self.noise_levels.is_empty()
            || self.init_scales.is_empty()
            || self.poison_counts.is_empty()
        {
            return Err(Error::InvalidConfig("sweep axes must be non-empty".into()));
        }
        Ok(())
    }
}

/// Membership-inference baseline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiConfig {
    /// Total membership queries (half members, half non-members).
    pub samples: usize,
    /// Models trained; the advantage is averaged across them.
    pub models: usize,
    pub sgd: SgdConfig,
    pub model: ModelSpec,
    pub data: DataSource,
    pub master_seed: u64,
}

impl MiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 || !self.samples.is_multiple_of(2) {
            return Err(Error::InvalidConfig("samples must be even and >= 2".into()));
        }
        if self.models == 0 {
            return Err(Error::InvalidConfig("at least one model is required".into()));
        }
        self.sgd.validate()
    }
}

/// Output-perturbation ridge study configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeStudyConfig {
    pub n: usize,
    pub dim: usize,
    pub lambda: f64,
    pub eps: f64,
    pub delta: f64,
    pub trials: usize,
    pub alpha: f64,
    /// Multiplier on the DP-calibrated noise (>= 1).
    pub noise_scale: f64,
    pub master_seed: u64,
}

impl Default for RidgeStudyConfig {
    fn default() -> Self {
        Self {
            n: 100,
            dim: 10,
            lambda: 1.0,
            eps: 1.0,
            delta: 1e-5,
            trials: 5000,
            alpha: 0.01,
            noise_scale: 1.0,
            master_seed: 0,
        }
    }
}

impl RidgeStudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig("design needs n >= 1 and d >= 1".into()));
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::InvalidConfig("lambda must be positive".into()));
        }
        if self.eps.is_nan() || self.eps <= 0.0 || self.delta.is_nan() || self.delta <= 0.0 || self.delta >= 1.0 {
            return Err(Error::InvalidConfig("need eps > 0 and delta in (0, 1)".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        if self.noise_scale.is_nan() || self.noise_scale < 1.0 {
            return Err(Error::InvalidConfig("noise scale must be >= 1".into()));
        }
        Ok(())
    }
}

/// Config echo stored in every result for replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunConfig {
    Audit(AuditConfig),
    MembershipInference(MiConfig),
    RidgeStudy(RidgeStudyConfig),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synth_spec_parses_key_values() {
        let spec = SynthSpec::parse("n=600,d=12,sep=3.5,decay=0.8,test=100").unwrap();
        assert_eq!(spec.n, 600);
        assert_eq!(spec.dim, 12);
        assert_eq!(spec.separation, 3.5);
        assert_eq!(spec.spectrum_decay, 0.8);
        assert_eq!(spec.test_n, 100);
        assert_eq!(spec.image, None);
    }

    #[test]
    fn synth_spec_image_mode_sets_dimension() {
        let spec = SynthSpec::parse("n=200,image=8x8").unwrap();
        assert_eq!(spec.image, Some((8, 8)));
        assert_eq!(spec.dim, 64);
    }

    #[test]
    fn synth_spec_rejects_garbage() {
        assert!(SynthSpec::parse("n=").is_err());
        assert!(SynthSpec::parse("bogus=1").is_err());
        assert!(SynthSpec::parse("decay=0").is_err());
        assert!(SynthSpec::parse("n=0").is_err());
    }

    #[test]
    fn audit_config_validation() {
        let mut cfg = AuditConfig::new(
            AttackKind::ClipBkd,
            DataSource::Synth { spec: SynthSpec::default() },
            SgdConfig::non_private(4, 100, 0.15),
            ModelSpec::logistic(),
        );
        assert!(cfg.validate().is_ok());
        cfg.alpha = 1.5;
        assert!(cfg.validate().is_err());
        cfg.alpha = 0.01;
        cfg.calibration_trials = 1;
        assert!(cfg.validate().is_err());
    }
}
