use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::matrix::l2_norm;
use crate::numerics::rng::{fill_gaussian, shuffled_indices, RngStream};
use crate::trainer::model::{ModelParams, ModelSpec};
use crate::trainer::{BatchSampling, Dataset, SgdConfig};

/// Any parameter beyond this magnitude counts as divergence.
const DIVERGENCE_LIMIT: f64 = 1e10;

/// Rescales `g` to norm at most `c`, preserving direction.
pub fn clip(g: &[f64], c: f64) -> Vec<f64> {
    let norm = l2_norm(g);
    if norm > c {
        let scale = c / norm;
        g.iter().map(|v| v * scale).collect()
    } else {
        g.to_vec()
    }
}

fn clip_in_place(g: &mut [f64], c: f64) {
    let norm = l2_norm(g);
    if norm > c {
        let scale = c / norm;
        for v in g.iter_mut() {
            *v *= scale;
        }
    }
}

/// Mean of clipped per-example gradients over the given rows.
///
/// `divisor` defaults to the batch length; Poisson sampling passes the
/// nominal batch size instead.
pub fn mean_clipped_gradient(
    params: &ModelParams,
    data: &Dataset,
    batch: &[usize],
    clip_norm: f64,
    l2_reg: f64,
    divisor: Option<usize>,
) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; params.param_len()];
    for &i in batch {
        let (x, y) = data.example(i);
        let mut g = params.per_example_gradient(x, y, l2_reg)?;
        clip_in_place(&mut g, clip_norm);
        debug_assert!(
            l2_norm(&g) <= clip_norm * (1.0 + 1e-9),
            "post-clip norm bound violated"
        );
        for (s, gi) in sum.iter_mut().zip(&g) {
            *s += gi;
        }
    }
    let divisor = divisor.unwrap_or(batch.len()).max(1) as f64;
    for s in sum.iter_mut() {
        *s /= divisor;
    }
    Ok(sum)
}

/// Runs DP-SGD and returns the final parameters.
///
/// Each of the `epochs * ceil(n / b)` steps applies
/// `theta <- theta - eta * (G + N(0, (C * sigma)^2 I))` where `G` is the mean
/// of clipped per-example gradients. Fully deterministic given the stream.
pub fn dp_sgd_train(
    data: &Dataset,
    cfg: &SgdConfig,
    spec: &ModelSpec,
    stream: RngStream,
) -> Result<ModelParams> {
    cfg.validate()?;
    let n = data.n();
    if cfg.batch_size > n {
        return Err(Error::InvalidConfig(format!(
            "batch size {} exceeds dataset size {n}",
            cfg.batch_size
        )));
    }

    let mut rng = stream.generator();
    let mut params = ModelParams::init(
        spec,
        data.dim(),
        data.class_count(),
        cfg.init_scale,
        &mut rng,
    )?;

    let clip_norm = cfg.clip_limit();
    let noise_std = if cfg.noise_multiplier > 0.0 {
        clip_norm * cfg.noise_multiplier
    } else {
        0.0
    };
    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let mut noise = vec![0.0; params.param_len()];
    let mut step_index = 0usize;

    for _epoch in 0..cfg.epochs {
        match cfg.sampling {
            BatchSampling::Shuffle => {
                let order = shuffled_indices(&mut rng, n);
                for batch in order.chunks(cfg.batch_size) {
                    step(
                        &mut params, data, batch, clip_norm, cfg, noise_std, None, &mut noise,
                        &mut rng, step_index,
                    )?;
                    step_index += 1;
                }
            }
            BatchSampling::Poisson => {
                let rate = cfg.batch_size as f64 / n as f64;
                for _ in 0..steps_per_epoch {
                    let batch: Vec<usize> =
                        (0..n).filter(|_| rng.random::<f64>() < rate).collect();
                    step(
                        &mut params,
                        data,
                        &batch,
                        clip_norm,
                        cfg,
                        noise_std,
                        Some(cfg.batch_size),
                        &mut noise,
                        &mut rng,
                        step_index,
                    )?;
                    step_index += 1;
                }
            }
        }
    }
    Ok(params)
}

#[allow(clippy::too_many_arguments)]
fn step(
    params: &mut ModelParams,
    data: &Dataset,
    batch: &[usize],
    clip_norm: f64,
    cfg: &SgdConfig,
    noise_std: f64,
    divisor: Option<usize>,
    noise: &mut [f64],
    rng: &mut impl Rng,
    step_index: usize,
) -> Result<()> {
    let gradient = if batch.is_empty() {
        vec![0.0; params.param_len()]
    } else {
        mean_clipped_gradient(params, data, batch, clip_norm, cfg.l2_reg, divisor)?
    };
    if noise_std > 0.0 {
        fill_gaussian(rng, noise, noise_std);
    } else {
        noise.fill(0.0);
    }
    let eta = cfg.learning_rate;
    for ((t, g), z) in params.theta_mut().iter_mut().zip(&gradient).zip(noise.iter()) {
        *t -= eta * (g + z);
    }
    for t in params.theta() {
        if !t.is_finite() || t.abs() > DIVERGENCE_LIMIT {
            return Err(Error::TrainingDiverged {
                step: step_index,
                detail: format!("parameter reached {t}"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::Matrix;
    use crate::numerics::rng::standard_normal;
    use crate::trainer::Arch;

    fn gaussian_two_class(n: usize, d: usize, sep: f64, stream: RngStream) -> Dataset {
        let mut rng = stream.generator();
        let mut rows = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = i % 2;
            let shift = if label == 1 { sep / 2.0 } else { -sep / 2.0 };
            let mut row: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
            row[0] += shift;
            rows.push(row);
            labels.push(label);
        }
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, 2).unwrap()
    }

    #[test]
    fn clip_rescales_and_preserves_direction() {
        let g = vec![2.0, 0.0];
        let clipped = clip(&g, 1.0);
        assert!((clipped[0] - 1.0).abs() < 1e-12);
        assert_eq!(clipped[1], 0.0);

        let g = vec![0.3, 0.4];
        let clipped = clip(&g, 1.0);
        assert_eq!(clipped, g, "below the bound the vector is untouched");
    }

    #[test]
    fn clip_norm_is_min_of_norm_and_bound() {
        let mut rng = RngStream::new(3, 9).generator();
        for _ in 0..200 {
            let g: Vec<f64> = (0..8).map(|_| 2.0 * standard_normal(&mut rng)).collect();
            let clipped = clip(&g, 0.5);
            let expected = l2_norm(&g).min(0.5);
            assert!((l2_norm(&clipped) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn noise_free_training_matches_plain_sgd() {
        let data = gaussian_two_class(64, 5, 2.0, RngStream::new(11, 0));
        let cfg = SgdConfig {
            clip_norm: Some(1e9),
            noise_multiplier: 0.0,
            epochs: 3,
            batch_size: 16,
            learning_rate: 0.1,
            init_scale: 0.0,
            l2_reg: 0.0,
            claimed_eps_th: None,
            delta: 0.0,
            sampling: BatchSampling::Shuffle,
        };
        let spec = ModelSpec::logistic();
        let stream = RngStream::new(5, 77);
        let trained = dp_sgd_train(&data, &cfg, &spec, stream).unwrap();

        // Plain mini-batch SGD with the same batch order: replicate the
        // stream's shuffles and apply raw gradient steps.
        let mut rng = stream.generator();
        let mut params = ModelParams::new(&spec, data.dim(), data.class_count()).unwrap();
        for _ in 0..cfg.epochs {
            let order = shuffled_indices(&mut rng, data.n());
            for batch in order.chunks(cfg.batch_size) {
                let mut sum = vec![0.0; params.param_len()];
                for &i in batch {
                    let (x, y) = data.example(i);
                    let g = params.per_example_gradient(x, y, 0.0).unwrap();
                    for (s, gi) in sum.iter_mut().zip(&g) {
                        *s += gi;
                    }
                }
                for (t, s) in params.theta_mut().iter_mut().zip(&sum) {
                    *t -= cfg.learning_rate * s / batch.len() as f64;
                }
            }
        }
        for (a, b) in trained.theta().iter().zip(params.theta()) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn separable_data_reaches_training_accuracy() {
        let data = gaussian_two_class(1000, 20, 6.0, RngStream::new(21, 0));
        let cfg = SgdConfig {
            clip_norm: Some(1.0),
            noise_multiplier: 0.0,
            epochs: 8,
            batch_size: 100,
            learning_rate: 0.15,
            init_scale: 0.0,
            l2_reg: 0.0,
            claimed_eps_th: None,
            delta: 0.0,
            sampling: BatchSampling::Shuffle,
        };
        let params =
            dp_sgd_train(&data, &cfg, &ModelSpec::logistic(), RngStream::new(1, 0)).unwrap();
        let acc = params.accuracy(&data);
        assert!(acc >= 0.95, "training accuracy {acc}");
    }

    #[test]
    fn same_stream_gives_bit_identical_parameters() {
        let data = gaussian_two_class(128, 6, 3.0, RngStream::new(31, 0));
        let cfg = SgdConfig {
            clip_norm: Some(1.0),
            noise_multiplier: 0.8,
            epochs: 2,
            batch_size: 32,
            learning_rate: 0.1,
            init_scale: 1.0,
            l2_reg: 1e-4,
            claimed_eps_th: Some(4.0),
            delta: 1e-5,
            sampling: BatchSampling::Shuffle,
        };
        let spec = ModelSpec::fnn();
        let a = dp_sgd_train(&data, &cfg, &spec, RngStream::new(9, 13)).unwrap();
        let b = dp_sgd_train(&data, &cfg, &spec, RngStream::new(9, 13)).unwrap();
        assert_eq!(a.theta(), b.theta());
        assert_eq!(a.arch(), Arch::Fnn);
    }

    #[test]
    fn poisson_sampling_trains_and_is_deterministic() {
        let data = gaussian_two_class(200, 4, 3.0, RngStream::new(41, 0));
        let cfg = SgdConfig {
            sampling: BatchSampling::Poisson,
            ..SgdConfig::non_private(3, 20, 0.2)
        };
        let a = dp_sgd_train(&data, &cfg, &ModelSpec::logistic(), RngStream::new(2, 2)).unwrap();
        let b = dp_sgd_train(&data, &cfg, &ModelSpec::logistic(), RngStream::new(2, 2)).unwrap();
        assert_eq!(a.theta(), b.theta());
        assert!(a.accuracy(&data) > 0.8);
    }

    #[test]
    fn divergence_reports_step_index() {
        let data = gaussian_two_class(32, 4, 2.0, RngStream::new(51, 0));
        let cfg = SgdConfig {
            clip_norm: Some(1e9),
            learning_rate: 1e12,
            ..SgdConfig::non_private(2, 8, 1.0)
        };
        match dp_sgd_train(&data, &cfg, &ModelSpec::logistic(), RngStream::new(0, 0)) {
            Err(Error::TrainingDiverged { step, .. }) => assert!(step < 8),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn replacing_one_row_shifts_mean_gradient_by_at_most_two_c_over_b() {
        let data = gaussian_two_class(40, 5, 2.0, RngStream::new(61, 0));
        let mut poisoned = data.clone();
        poisoned.replace_row(7, &[9.0, -9.0, 9.0, -9.0, 9.0], 0).unwrap();

        let mut rng = RngStream::new(8, 0).generator();
        let params = ModelParams::init(&ModelSpec::logistic(), 5, 2, 1.0, &mut rng).unwrap();
        let batch: Vec<usize> = (0..40).collect();
        let c = 0.5;
        let b = batch.len() as f64;
        let g0 = mean_clipped_gradient(&params, &data, &batch, c, 0.0, None).unwrap();
        let g1 = mean_clipped_gradient(&params, &poisoned, &batch, c, 0.0, None).unwrap();
        let diff: Vec<f64> = g0.iter().zip(&g1).map(|(a, b)| a - b).collect();
        assert!(l2_norm(&diff) <= 2.0 * c / b + 1e-12);
    }

    #[test]
    fn batch_larger_than_dataset_rejected() {
        let data = gaussian_two_class(10, 3, 2.0, RngStream::new(71, 0));
        let cfg = SgdConfig::non_private(1, 11, 0.1);
        assert!(dp_sgd_train(&data, &cfg, &ModelSpec::logistic(), RngStream::new(0, 0)).is_err());
    }
}
