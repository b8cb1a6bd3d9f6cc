//! Hyperparameter sweeps: the Cartesian product of clip norms, noise levels,
//! and init scales, each cell audited at every poison size with the max over
//! k reported alongside the per-k values.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::audit::{run_audit, AuditResult};
use crate::harness::config::{AuditConfig, SweepSpec};
use crate::harness::mix_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps_th: Option<f64>,
    pub noise_multiplier: f64,
    pub clip_norm: Option<f64>,
    pub init_scale: f64,
    pub k: usize,
    pub eps_lb: f64,
    /// Marks the best k within this (clip, noise, init) cell.
    pub best_over_k: bool,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub results: Vec<AuditResult>,
    pub rows: Vec<SweepRow>,
    /// Cells that failed, described but not fatal to the rest of the sweep.
    pub failures: Vec<String>,
}

/// Runs the full grid. Each (cell, k) audit gets its own derived master seed,
/// echoed in its config so any single cell replays exactly.
pub fn run_sweep(spec: &SweepSpec, base: &AuditConfig) -> Result<SweepOutput> {
    spec.validate()?;
    base.validate()?;
    let mut output = SweepOutput { results: Vec::new(), rows: Vec::new(), failures: Vec::new() };
    let mut cell_index = 0u64;
    for clip in &spec.clip_norms {
        for noise in &spec.noise_levels {
            for &init_scale in &spec.init_scales {
                let mut cell_rows = Vec::new();
                for &k in &spec.poison_counts {
                    cell_index += 1;
                    let mut cfg = base.clone();
                    cfg.k = k;
                    cfg.sgd.clip_norm = *clip;
                    cfg.sgd.noise_multiplier = noise.sigma;
                    cfg.sgd.claimed_eps_th = noise.eps_th;
                    cfg.sgd.init_scale = init_scale;
                    cfg.master_seed = mix_seed(base.master_seed, cell_index);
                    let label = format!(
                        "clip={clip:?} sigma={} eps_th={:?} init={init_scale} k={k}",
                        noise.sigma, noise.eps_th
                    );
                    match run_audit(&cfg) {
                        Ok(result) => {
                            cell_rows.push(SweepRow {
                                eps_th: noise.eps_th,
                                noise_multiplier: noise.sigma,
                                clip_norm: *clip,
                                init_scale,
                                k,
                                eps_lb: result.estimate.eps_lb,
                                best_over_k: false,
                                seed: cfg.master_seed,
                            });
                            output.results.push(result);
                        }
                        Err(e) => output.failures.push(format!("{label}: {e}")),
                    }
                }
                if let Some(best) = cell_rows
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| a.eps_lb.total_cmp(&b.eps_lb))
                    .map(|(i, _)| i)
                {
                    cell_rows[best].best_over_k = true;
                }
                output.rows.extend(cell_rows);
            }
        }
    }
    Ok(output)
}

/// Aggregate CSV, one row per (cell, k), the cell maximum flagged.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out =
        String::from("eps_th,noise_multiplier,clip_norm,init_scale,k,eps_lb,best_over_k,seed\n");
    for row in rows {
        let eps_th = row.eps_th.map_or("inf".to_string(), |v| v.to_string());
        let clip = row.clip_norm.map_or("inf".to_string(), |v| v.to_string());
        out.push_str(&format!(
            "{eps_th},{},{clip},{},{},{},{},{}\n",
            row.noise_multiplier, row.init_scale, row.k, row.eps_lb, row.best_over_k, row.seed
        ));
    }
    out
}
