//! Dataset ingestion: CSV files with a named label column, and seeded
//! synthetic generators for tabular and flattened-image data.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::SynthSpec;
use crate::numerics::matrix::Matrix;
use crate::numerics::rng::{standard_normal, RngStream};
use crate::trainer::Dataset;

/// Reads a dataset from CSV: header row, a column named `label`, every other
/// column a numeric feature. Errors carry 1-based line numbers.
pub fn load_dataset_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_dataset_csv(&text)
}

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::DatasetParse { line: 1, detail: "empty file".into() })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let label_col = columns.iter().position(|c| *c == "label").ok_or_else(|| {
        Error::DatasetParse { line: 1, detail: "no `label` column in header".into() }
    })?;
    if columns.len() < 2 {
        return Err(Error::DatasetParse {
            line: 1,
            detail: "need at least one feature column".into(),
        });
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::DatasetParse {
                line: line_no,
                detail: format!("expected {} cells, found {}", columns.len(), cells.len()),
            });
        }
        let mut row = Vec::with_capacity(columns.len() - 1);
        for (col, cell) in cells.iter().enumerate() {
            if col == label_col {
                let value: f64 = cell.parse().map_err(|_| Error::DatasetParse {
                    line: line_no,
                    detail: format!("unparseable label `{cell}`"),
                })?;
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::DatasetParse {
                        line: line_no,
                        detail: format!("label `{cell}` is not a non-negative integer"),
                    });
                }
                labels.push(value as usize);
            } else {
                let value: f64 = cell.parse().map_err(|_| Error::DatasetParse {
                    line: line_no,
                    detail: format!("non-numeric cell `{cell}` in column {}", columns[col]),
                })?;
                if !value.is_finite() {
                    return Err(Error::DatasetParse {
                        line: line_no,
                        detail: format!("non-finite value in column {}", columns[col]),
                    });
                }
                row.push(value);
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::DatasetParse { line: 1, detail: "no data rows".into() });
    }
    let class_count = labels.iter().copied().max().unwrap_or(0).max(1) + 1;
    Dataset::new(Matrix::from_rows(&rows)?, labels, class_count)
}

/// Writes the CSV format `load_dataset_csv` reads. Floats use the shortest
/// round-trip representation, so write-then-read is the identity.
pub fn write_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    std::fs::write(path, dataset_to_csv(data))?;
    Ok(())
}

pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::from("label");
    for j in 0..data.dim() {
        let _ = write!(out, ",f{j}");
    }
    out.push('\n');
    for i in 0..data.n() {
        let (row, label) = data.example(i);
        let _ = write!(out, "{label}");
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Two-class Gaussian mixture with a geometric spectrum (tabular mode) or
/// blob images with position-dependent variance (image mode). Labels
/// alternate so every prefix is balanced.
pub fn synth_dataset(spec: &SynthSpec, stream: RngStream) -> Result<Dataset> {
    synth_rows(spec, spec.n, stream)
}

/// Held-out rows drawn from the same distribution.
pub fn synth_test_dataset(spec: &SynthSpec, stream: RngStream) -> Result<Dataset> {
    synth_rows(spec, spec.test_n, stream)
}

fn synth_rows(spec: &SynthSpec, n: usize, stream: RngStream) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("cannot generate an empty dataset".into()));
    }
    let mut rng = stream.generator();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    match spec.image {
        None => {
            // Axis j has std decay^j (floored); classes differ along axis 0.
            let stds: Vec<f64> = (0..spec.dim)
                .map(|j| spec.spectrum_decay.powi(j as i32).max(1e-6))
                .collect();
            for i in 0..n {
                let label = i % 2;
                let shift = if label == 1 { spec.separation / 2.0 } else { -spec.separation / 2.0 };
                let mut row: Vec<f64> =
                    stds.iter().map(|s| s * standard_normal(&mut rng)).collect();
                row[0] += shift;
                rows.push(row);
                labels.push(label);
            }
        }
        Some((h, w)) => {
            // A centered bright blob whose intensity differs by class, over
            // correlated texture: smooth cosine modes with decaying strength
            // give pixels the low-rank covariance real images have, so every
            // pixel varies while directions outside the mode span barely do.
            let dim = h * w;
            let cx = (h as f64 - 1.0) / 2.0;
            let cy = (w as f64 - 1.0) / 2.0;
            let norm = (cx * cx + cy * cy).max(1.0);
            let blob: Vec<f64> = (0..dim)
                .map(|p| {
                    let r = (p / w) as f64;
                    let c = (p % w) as f64;
                    let d2 = ((r - cx).powi(2) + (c - cy).powi(2)) / norm;
                    (-3.0 * d2).exp()
                })
                .collect();
            let mode_grid = 6usize;
            let modes: Vec<(Vec<f64>, f64)> = (1..mode_grid * mode_grid)
                .filter(|idx| {
                    let (u, v) = (idx % mode_grid, idx / mode_grid);
                    u < h && v < w
                })
                .take(dim / 2)
                .enumerate()
                .map(|(j, idx)| {
                    let (u, v) = (idx % mode_grid, idx / mode_grid);
                    let pattern: Vec<f64> = (0..dim)
                        .map(|p| {
                            let r = (p / w) as f64;
                            let c = (p % w) as f64;
                            let pi = std::f64::consts::PI;
                            (pi * u as f64 * (r + 0.5) / h as f64).cos()
                                * (pi * v as f64 * (c + 0.5) / w as f64).cos()
                        })
                        .collect();
                    (pattern, 0.15 * 0.88f64.powi(j as i32))
                })
                .collect();
            for i in 0..n {
                let label = i % 2;
                let class_shift = (label as f64 - 0.5) * spec.separation * 0.1;
                let mut row: Vec<f64> = blob
                    .iter()
                    .map(|b| 0.35 + b * (0.3 + class_shift))
                    .collect();
                for (pattern, strength) in &modes {
                    let amplitude = strength * standard_normal(&mut rng);
                    for (value, p) in row.iter_mut().zip(pattern) {
                        *value += amplitude * p;
                    }
                }
                for value in row.iter_mut() {
                    *value = (*value + 0.01 * standard_normal(&mut rng)).clamp(0.0, 1.0);
                }
                rows.push(row);
                labels.push(label);
            }
        }
    }
    Dataset::new(Matrix::from_rows(&rows)?, labels, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_identity() {
        let spec = SynthSpec { n: 24, dim: 5, ..SynthSpec::default() };
        let data = synth_dataset(&spec, RngStream::new(7, 0)).unwrap();
        let text = dataset_to_csv(&data);
        let parsed = parse_dataset_csv(&text).unwrap();
        assert_eq!(parsed, data);
    }

    #[test]
    fn small_csv_parses() {
        let text = "f0,label,f1,f2\n0.5,0,1.5,-1\n-0.25,1,2.0,0\n0,1,3,1\n1,0,4,2\n2,1,5,3\n3,0,6,4\n";
        let data = parse_dataset_csv(text).unwrap();
        assert_eq!(data.n(), 6);
        assert_eq!(data.dim(), 3);
        assert_eq!(data.class_count(), 2);
        assert_eq!(data.example(0).0, &[0.5, 1.5, -1.0]);
        assert_eq!(data.example(1).1, 1);
    }

    #[test]
    fn ragged_row_reports_line_number() {
        let text = "label,f0\n0,1.0\n1\n";
        match parse_dataset_csv(text) {
            Err(Error::DatasetParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_line_number() {
        let text = "label,f0\n0,1.0\n0,abc\n";
        match parse_dataset_csv(text) {
            Err(Error::DatasetParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn fractional_label_rejected() {
        let text = "label,f0\n0.5,1.0\n";
        assert!(parse_dataset_csv(text).is_err());
    }

    #[test]
    fn missing_label_column_rejected() {
        let text = "a,b\n1,2\n";
        assert!(parse_dataset_csv(text).is_err());
    }

    #[test]
    fn balanced_classes() {
        let spec = SynthSpec { n: 6000, dim: 4, ..SynthSpec::default() };
        let data = synth_dataset(&spec, RngStream::new(1, 0)).unwrap();
        let ones = data.labels().iter().filter(|&&y| y == 1).count();
        assert_eq!(ones, 3000);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let spec = SynthSpec::default();
        let a = synth_dataset(&spec, RngStream::new(5, 1)).unwrap();
        let b = synth_dataset(&spec, RngStream::new(5, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn image_mode_stays_in_unit_range() {
        let spec = SynthSpec::parse("n=50,image=8x8,sep=4").unwrap();
        let data = synth_dataset(&spec, RngStream::new(9, 0)).unwrap();
        assert_eq!(data.dim(), 64);
        for e in data.features().entries() {
            assert!((0.0..=1.0).contains(e));
        }
    }

    #[test]
    fn spectrum_decay_orders_axis_variances() {
        let spec = SynthSpec { n: 4000, dim: 6, separation: 0.0, ..SynthSpec::default() };
        let data = synth_dataset(&spec, RngStream::new(11, 0)).unwrap();
        let variance = |j: usize| {
            let col: Vec<f64> = (0..data.n()).map(|i| data.features().get(i, j)).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len() as f64
        };
        for j in 0..5 {
            assert!(variance(j) > variance(j + 1), "axis {j}");
        }
    }
}
