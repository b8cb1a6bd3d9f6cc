use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;

/// Identifier of a reproducible random stream.
///
/// The same `(seed, stream)` pair always yields the same draw sequence, and
/// distinct stream ids yield streams that are independent for audit purposes.
/// Trials take `stream = trial index` offsets so their results do not depend
/// on execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Same seed, different stream id.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { seed: self.seed, stream }
    }

    /// Instantiates the generator positioned at the start of this stream.
    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// One standard-normal draw via Box-Muller (consumes two uniforms).
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    // 1 - u in (0, 1] keeps the log finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Fills `out` with i.i.d. N(0, std²) draws. `std == 0` writes zeros without
/// consuming randomness.
pub fn fill_gaussian(rng: &mut impl Rng, out: &mut [f64], std: f64) {
    if std == 0.0 {
        out.fill(0.0);
        return;
    }
    for slot in out.iter_mut() {
        *slot = std * standard_normal(rng);
    }
}

/// I.i.d. Gaussian vector as a pure function of the stream.
pub fn gaussian_vector(stream: RngStream, dim: usize, std: f64) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("gaussian_vector: dim must be >= 1".into()));
    }
    if std.is_nan() || std < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "gaussian_vector: std must be non-negative, got {std}"
        )));
    }
    let mut out = vec![0.0; dim];
    let mut rng = stream.generator();
    fill_gaussian(&mut rng, &mut out, std);
    Ok(out)
}

/// Glorot-normal weight matrix (`fan_out` x `fan_in`) with std
/// `scale_multiplier * sqrt(2 / (fan_in + fan_out))`. A zero multiplier gives
/// the all-zeros matrix, i.e. a fixed initialization.
pub fn glorot_init(
    stream: RngStream,
    fan_in: usize,
    fan_out: usize,
    scale_multiplier: f64,
) -> Result<Matrix> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::InvalidArgument("glorot_init: fans must be >= 1".into()));
    }
    if scale_multiplier.is_nan() || scale_multiplier < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "glorot_init: scale multiplier must be non-negative, got {scale_multiplier}"
        )));
    }
    let std = scale_multiplier * glorot_std(fan_in, fan_out);
    let mut entries = vec![0.0; fan_in * fan_out];
    let mut rng = stream.generator();
    fill_gaussian(&mut rng, &mut entries, std);
    Matrix::new(fan_out, fan_in, entries)
}

pub fn glorot_std(fan_in: usize, fan_out: usize) -> f64 {
    (2.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fisher-Yates shuffle of `0..n`.
pub fn shuffled_indices(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        indices.swap(i, j);
    }
    indices
}

/// K distinct indices drawn uniformly from `0..n`, in draw order.
pub fn sample_distinct(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    assert!(k <= n, "cannot sample {k} distinct values from 0..{n}");
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    indices.truncate(k);
    indices
}
