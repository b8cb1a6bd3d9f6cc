//! Clipping-aware poisoning: the poison point sits along the dataset's
//! least-variance singular direction, scaled to a typical row norm, so its
//! gradient signal survives per-example clipping.

use crate::attacks::{replace_random_rows, AttackKind, AttackStatistic, Outcome, PoisonPlan};
use crate::error::{Error, Result};
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::RngStream;
use crate::numerics::svd::svd;
use crate::trainer::{Dataset, ModelParams};

/// Right singular vector of the smallest singular value (unit norm).
pub fn least_variance_direction(x: &Matrix) -> Result<Vec<f64>> {
    let decomposition = svd(x)?;
    if decomposition.singular_values[0] <= 0.0 {
        return Err(Error::DegenerateData("zero-rank data has no principal directions".into()));
    }
    Ok(decomposition.least_variance_direction())
}

/// Builds the ClipBKD plan: `x_p = m * v_d`, `y_p` the class minimizing the
/// reference model's score on `x_p`, inserted as `k` identical replacements
/// of random rows.
pub fn clipbkd_generate(
    data: &Dataset,
    k: usize,
    reference: &ModelParams,
    norm: f64,
    stream: RngStream,
) -> Result<PoisonPlan> {
    if data.dim() < 2 {
        return Err(Error::InvalidArgument("clipbkd needs dimension >= 2".into()));
    }
    if k > data.n() {
        return Err(Error::InvalidArgument(format!(
            "poison size {k} exceeds dataset size {}",
            data.n()
        )));
    }
    if norm.is_nan() || norm <= 0.0 || !norm.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "poison norm must be positive and finite, got {norm}"
        )));
    }
    if reference.input_dim() != data.dim() || reference.class_count() != data.class_count() {
        return Err(Error::InvalidArgument(
            "reference model shape does not match the dataset".into(),
        ));
    }
    let direction = least_variance_direction(data.features())?;
    let poison: Vec<f64> = direction.iter().map(|v| norm * v).collect();

    // Least-favored class under the reference model; first index wins ties.
    let scores = reference.scores(&poison);
    let mut target = 0;
    for (j, s) in scores.iter().enumerate() {
        if *s < scores[target] {
            target = j;
        }
    }

    let poison_rows: Vec<(Vec<f64>, usize)> = (0..k).map(|_| (poison.clone(), target)).collect();
    let d1 = replace_random_rows(data, &poison_rows, stream)?;
    let plan = PoisonPlan {
        kind: AttackKind::ClipBkd,
        d0: data.clone(),
        d1,
        k,
        poison_rows,
        statistic: AttackStatistic::LogitShift { poison, target },
        warnings: Vec::new(),
    };
    plan.validate()?;
    Ok(plan)
}

/// `(f(x_p) - f(0^d)) . y_p`: the logit difference between the poison point
/// and the zero input, projected onto the target class. With the binary
/// score convention `[-z, z]` this is the signed scalar form; for multiclass
/// it is the one-hot inner product.
pub fn clipbkd_statistic(params: &ModelParams, poison: &[f64], target: usize) -> f64 {
    let zeros = vec![0.0; poison.len()];
    let at_poison = params.scores(poison);
    let at_origin = params.scores(&zeros);
    at_poison[target] - at_origin[target]
}

pub fn clipbkd_test(params: &ModelParams, poison: &[f64], target: usize, z: f64) -> Outcome {
    if clipbkd_statistic(params, poison, target) > z {
        Outcome::Backdoored
    } else {
        Outcome::NotBackdoored
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::{dot, l2_norm};
    use crate::numerics::rng::{standard_normal, RngStream};
    use crate::trainer::{dp_sgd_train, ModelSpec, SgdConfig};

    fn anisotropic_dataset(n: usize, d: usize, stream: RngStream) -> Dataset {
        // Feature j has standard deviation 0.7^j: a clear least-variance axis.
        let mut rng = stream.generator();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..d).map(|j| 0.7f64.powi(j as i32) * standard_normal(&mut rng)).collect()
            })
            .collect();
        let labels = (0..n).map(|i| i % 2).collect();
        Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, 2).unwrap()
    }

    fn zero_reference(d: usize) -> ModelParams {
        ModelParams::new(&ModelSpec::logistic(), d, 2).unwrap()
    }

    #[test]
    fn poison_orthogonal_to_data_subspace() {
        // Rows span only the first d-1 axes.
        let n = 40;
        let d = 6;
        let mut rng = RngStream::new(11, 0).generator();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut row: Vec<f64> = (0..d).map(|_| standard_normal(&mut rng)).collect();
                row[d - 1] = 0.0;
                row
            })
            .collect();
        let labels = (0..n).map(|i| i % 2).collect();
        let data = Dataset::new(Matrix::from_rows(&rows).unwrap(), labels, 2).unwrap();

        let plan =
            clipbkd_generate(&data, 1, &zero_reference(d), 1.0, RngStream::new(11, 1)).unwrap();
        let (poison, _) = &plan.poison_rows[0];
        for i in 0..n {
            let projection = dot(data.example(i).0, poison);
            assert!(projection.abs() < 1e-6, "row {i} projection {projection}");
        }
    }

    #[test]
    fn poison_direction_minimizes_projection_variance() {
        let data = anisotropic_dataset(120, 8, RngStream::new(21, 0));
        let plan =
            clipbkd_generate(&data, 1, &zero_reference(8), 2.0, RngStream::new(21, 1)).unwrap();
        let (poison, _) = &plan.poison_rows[0];
        let unit: Vec<f64> = poison.iter().map(|v| v / l2_norm(poison)).collect();

        let variance = |dir: &[f64]| {
            let projections: Vec<f64> =
                (0..data.n()).map(|i| dot(data.example(i).0, dir)).collect();
            let mean = projections.iter().sum::<f64>() / projections.len() as f64;
            projections.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>()
                / projections.len() as f64
        };
        let poison_var = variance(&unit);

        let mut rng = RngStream::new(21, 2).generator();
        for _ in 0..1000 {
            let mut u: Vec<f64> = (0..8).map(|_| standard_normal(&mut rng)).collect();
            let norm = l2_norm(&u);
            for v in u.iter_mut() {
                *v /= norm;
            }
            assert!(poison_var <= variance(&u) + 1e-9);
        }
    }

    #[test]
    fn poison_norm_matches_requested_scale() {
        let data = anisotropic_dataset(60, 5, RngStream::new(31, 0));
        let m = data.mean_row_norm();
        let plan =
            clipbkd_generate(&data, 2, &zero_reference(5), m, RngStream::new(31, 1)).unwrap();
        for (row, _) in &plan.poison_rows {
            assert!((l2_norm(row) - m).abs() < 1e-9);
        }
        assert_eq!(plan.d0.rows_differing(&plan.d1), 2);
    }

    #[test]
    fn zero_rank_data_rejected() {
        let x = Matrix::zeros(4, 3);
        let data = Dataset::new(x, vec![0, 1, 0, 1], 2).unwrap();
        let err = clipbkd_generate(&data, 1, &zero_reference(3), 1.0, RngStream::new(0, 0));
        assert!(err.is_err());
    }

    #[test]
    fn one_dimensional_data_rejected() {
        let x = Matrix::new(2, 1, vec![1.0, 2.0]).unwrap();
        let data = Dataset::new(x, vec![0, 1], 2).unwrap();
        assert!(clipbkd_generate(&data, 1, &zero_reference(1), 1.0, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn untrained_zero_model_statistic_is_zero() {
        let params = zero_reference(4);
        assert_eq!(clipbkd_statistic(&params, &[1.0, 2.0, 3.0, 4.0], 1), 0.0);
    }

    #[test]
    fn threshold_extremes() {
        let params = zero_reference(3);
        assert_eq!(
            clipbkd_test(&params, &[1.0, 0.0, 0.0], 1, f64::NEG_INFINITY),
            Outcome::Backdoored
        );
        assert_eq!(
            clipbkd_test(&params, &[1.0, 0.0, 0.0], 1, f64::INFINITY),
            Outcome::NotBackdoored
        );
    }

    #[test]
    fn statistic_grows_with_poison_count() {
        // Dose-response: k = 8 stochastically dominates k = 1 (median over
        // noise-free runs differing only in batch order).
        let data = anisotropic_dataset(200, 6, RngStream::new(41, 0));
        let reference = zero_reference(6);
        let m = data.mean_row_norm();
        let cfg = SgdConfig {
            clip_norm: Some(1.0),
            ..SgdConfig::non_private(4, 20, 0.2)
        };
        let spec = ModelSpec::logistic();

        let median_statistic = |k: usize| {
            let plan = clipbkd_generate(&data, k, &reference, m, RngStream::new(41, 1)).unwrap();
            let mut stats: Vec<f64> = (0..100)
                .map(|trial| {
                    let params =
                        dp_sgd_train(&plan.d1, &cfg, &spec, RngStream::new(42, trial)).unwrap();
                    plan.statistic.raw(&params, &data)
                })
                .collect();
            stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
            stats[50]
        };
        let low_dose = median_statistic(1);
        let high_dose = median_statistic(8);
        assert!(
            high_dose > low_dose,
            "median statistic should grow with k: k=1 {low_dose}, k=8 {high_dose}"
        );
    }
}
