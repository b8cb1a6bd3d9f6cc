use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::rng::{fill_gaussian, glorot_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    Logistic,
    Fnn,
}

/// Model family plus the hidden width for the feedforward network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Arch,
    pub hidden_width: usize,
}

impl ModelSpec {
    pub fn logistic() -> Self {
        Self { arch: Arch::Logistic, hidden_width: 0 }
    }

    pub fn fnn() -> Self {
        Self { arch: Arch::Fnn, hidden_width: 32 }
    }
}

/// Trained parameter vector with its shape metadata.
///
/// Binary models use a single output unit with signed labels; multiclass
/// models use one output unit per class. The flat parameter order is
/// `[W (out x d), b (out)]` for logistic regression and
/// `[W1 (h x d), b1 (h), W2 (out x h), b2 (out)]` for the network, all
/// matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    arch: Arch,
    input_dim: usize,
    class_count: usize,
    hidden_width: usize,
    theta: Vec<f64>,
}

impl ModelParams {
    pub fn new(spec: &ModelSpec, input_dim: usize, class_count: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidArgument("input dimension must be >= 1".into()));
        }
        if class_count < 2 {
            return Err(Error::InvalidArgument("class count must be >= 2".into()));
        }
        if spec.arch == Arch::Fnn && spec.hidden_width == 0 {
            return Err(Error::InvalidArgument("fnn requires a positive hidden width".into()));
        }
        let hidden_width = match spec.arch {
            Arch::Logistic => 0,
            Arch::Fnn => spec.hidden_width,
        };
        let mut params = Self {
            arch: spec.arch,
            input_dim,
            class_count,
            hidden_width,
            theta: Vec::new(),
        };
        params.theta = vec![0.0; params.param_len()];
        Ok(params)
    }

    /// Glorot-initialized parameters; `init_scale == 0` leaves all zeros (the
    /// fixed initialization) without consuming randomness.
    pub fn init(
        spec: &ModelSpec,
        input_dim: usize,
        class_count: usize,
        init_scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut params = Self::new(spec, input_dim, class_count)?;
        if init_scale > 0.0 {
            let d = input_dim;
            let out = params.out_dim();
            match params.arch {
                Arch::Logistic => {
                    let std = init_scale * glorot_std(d, out);
                    fill_gaussian(rng, &mut params.theta[..out * d], std);
                }
                Arch::Fnn => {
                    let h = params.hidden_width;
                    let std1 = init_scale * glorot_std(d, h);
                    fill_gaussian(rng, &mut params.theta[..h * d], std1);
                    let std2 = init_scale * glorot_std(h, out);
                    let w2_start = h * d + h;
                    fill_gaussian(rng, &mut params.theta[w2_start..w2_start + out * h], std2);
                }
            }
        }
        Ok(params)
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn hidden_width(&self) -> usize {
        self.hidden_width
    }

    /// One output unit for binary models, one per class otherwise.
    pub fn out_dim(&self) -> usize {
        if self.class_count == 2 {
            1
        } else {
            self.class_count
        }
    }

    pub fn param_len(&self) -> usize {
        let d = self.input_dim;
        let out = self.out_dim();
        match self.arch {
            Arch::Logistic => out * d + out,
            Arch::Fnn => {
                let h = self.hidden_width;
                h * d + h + out * h + out
            }
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|t| t.is_finite())
    }

    fn check_input(&self, x: &[f64]) {
        assert_eq!(x.len(), self.input_dim, "input dimension mismatch");
    }

    /// Raw output units: length 1 for binary, class_count otherwise.
    fn raw_outputs(&self, x: &[f64]) -> Vec<f64> {
        self.check_input(x);
        match self.arch {
            Arch::Logistic => self.linear(&self.theta, x),
            Arch::Fnn => {
                let hidden = self.hidden_activations(x);
                let (w2, b2) = self.fnn_output_block();
                let out = self.out_dim();
                let h = self.hidden_width;
                (0..out)
                    .map(|j| {
                        let mut z = b2[j];
                        for l in 0..h {
                            z += w2[j * h + l] * hidden[l];
                        }
                        z
                    })
                    .collect()
            }
        }
    }

    fn linear(&self, theta: &[f64], x: &[f64]) -> Vec<f64> {
        let d = self.input_dim;
        let out = self.out_dim();
        (0..out)
            .map(|j| {
                let mut z = theta[out * d + j];
                for i in 0..d {
                    z += theta[j * d + i] * x[i];
                }
                z
            })
            .collect()
    }

    /// ReLU hidden-layer activations (feedforward network only).
    pub fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.arch, Arch::Fnn, "hidden activations require the fnn architecture");
        self.check_input(x);
        let d = self.input_dim;
        let h = self.hidden_width;
        (0..h)
            .map(|l| {
                let bias = self.theta[h * d + l];
                let weights = &self.theta[l * d..(l + 1) * d];
                (bias + crate::numerics::matrix::dot(weights, x)).max(0.0)
            })
            .collect()
    }

    fn fnn_output_block(&self) -> (&[f64], &[f64]) {
        let d = self.input_dim;
        let h = self.hidden_width;
        let out = self.out_dim();
        let w2_start = h * d + h;
        let b2_start = w2_start + out * h;
        (&self.theta[w2_start..b2_start], &self.theta[b2_start..])
    }

    /// Per-class pre-softmax logits. Binary models report `[-z, z]` for the
    /// single output unit `z`, so score differences stay meaningful for both
    /// conventions of the logit-shift statistic.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let raw = self.raw_outputs(x);
        if self.class_count == 2 {
            vec![-raw[0], raw[0]]
        } else {
            raw
        }
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        let scores = self.scores(x);
        let mut best = 0;
        for (j, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = j;
            }
        }
        best
    }

    /// Cross-entropy loss of one example (no regularization term).
    pub fn loss(&self, x: &[f64], y: usize) -> f64 {
        assert!(y < self.class_count, "label out of range");
        let raw = self.raw_outputs(x);
        if self.class_count == 2 {
            let sign = if y == 1 { 1.0 } else { -1.0 };
            softplus(-sign * raw[0])
        } else {
            log_sum_exp(&raw) - raw[y]
        }
    }

    pub fn mean_loss(&self, data: &super::Dataset) -> f64 {
        let n = data.n() as f64;
        (0..data.n())
            .map(|i| {
                let (x, y) = data.example(i);
                self.loss(x, y)
            })
            .sum::<f64>()
            / n
    }

    pub fn accuracy(&self, data: &super::Dataset) -> f64 {
        let correct = (0..data.n())
            .filter(|&i| {
                let (x, y) = data.example(i);
                self.predict(x) == y
            })
            .count();
        correct as f64 / data.n() as f64
    }

    /// Sum of squared weight-matrix entries times `l2 / 2` (biases excluded),
    /// the regularization term matching `per_example_gradient`.
    pub fn l2_penalty(&self, l2: f64) -> f64 {
        if l2 == 0.0 {
            return 0.0;
        }
        let d = self.input_dim;
        let out = self.out_dim();
        let sq: f64 = match self.arch {
            Arch::Logistic => self.theta[..out * d].iter().map(|w| w * w).sum(),
            Arch::Fnn => {
                let h = self.hidden_width;
                let w1: f64 = self.theta[..h * d].iter().map(|w| w * w).sum();
                let (w2, _) = self.fnn_output_block();
                w1 + w2.iter().map(|w| w * w).sum::<f64>()
            }
        };
        0.5 * l2 * sq
    }

    /// Gradient of cross-entropy loss plus the l2 term, flattened in the
    /// documented parameter order.
    pub fn per_example_gradient(&self, x: &[f64], y: usize, l2: f64) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::InvalidArgument(format!(
                "example dimension {} does not match model input {}",
                x.len(),
                self.input_dim
            )));
        }
        if y >= self.class_count {
            return Err(Error::InvalidArgument(format!(
                "label {y} out of range for {} classes",
                self.class_count
            )));
        }
        let d = self.input_dim;
        let out = self.out_dim();
        let mut grad = vec![0.0; self.param_len()];
        match self.arch {
            Arch::Logistic => {
                let raw = self.raw_outputs(x);
                let dz = self.output_delta(&raw, y);
                for j in 0..out {
                    for i in 0..d {
                        grad[j * d + i] = dz[j] * x[i] + l2 * self.theta[j * d + i];
                    }
                    grad[out * d + j] = dz[j];
                }
            }
            Arch::Fnn => {
                let h = self.hidden_width;
                // Forward pass keeping pre-activations for the ReLU gate.
                let pre: Vec<f64> = (0..h)
                    .map(|l| {
                        let weights = &self.theta[l * d..(l + 1) * d];
                        self.theta[h * d + l] + crate::numerics::matrix::dot(weights, x)
                    })
                    .collect();
                let hidden: Vec<f64> = pre.iter().map(|a| a.max(0.0)).collect();
                let (w2, b2) = self.fnn_output_block();
                let raw: Vec<f64> = (0..out)
                    .map(|j| {
                        let mut z = b2[j];
                        for l in 0..h {
                            z += w2[j * h + l] * hidden[l];
                        }
                        z
                    })
                    .collect();
                let dz = self.output_delta(&raw, y);

                let w2_start = h * d + h;
                let b2_start = w2_start + out * h;
                for j in 0..out {
                    for l in 0..h {
                        grad[w2_start + j * h + l] =
                            dz[j] * hidden[l] + l2 * self.theta[w2_start + j * h + l];
                    }
                    grad[b2_start + j] = dz[j];
                }
                for l in 0..h {
                    if pre[l] <= 0.0 {
                        // ReLU gate closed: only the l2 pull on W1 remains.
                        for i in 0..d {
                            grad[l * d + i] = l2 * self.theta[l * d + i];
                        }
                        continue;
                    }
                    let mut da = 0.0;
                    for j in 0..out {
                        da += w2[j * h + l] * dz[j];
                    }
                    for i in 0..d {
                        grad[l * d + i] = da * x[i] + l2 * self.theta[l * d + i];
                    }
                    grad[h * d + l] = da;
                }
            }
        }
        Ok(grad)
    }

    /// dLoss/dRawOutput for the two label conventions.
    fn output_delta(&self, raw: &[f64], y: usize) -> Vec<f64> {
        if self.class_count == 2 {
            let sign = if y == 1 { 1.0 } else { -1.0 };
            vec![-sign * sigmoid(-sign * raw[0])]
        } else {
            let lse = log_sum_exp(raw);
            raw.iter()
                .enumerate()
                .map(|(j, z)| (z - lse).exp() - if j == y { 1.0 } else { 0.0 })
                .collect()
        }
    }
}

fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}
