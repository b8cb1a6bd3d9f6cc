//! End-to-end audit orchestration: data ingestion, threshold calibration,
//! Monte-Carlo trial execution across both arms, estimation, sweeps, and
//! result persistence.

pub mod audit;
pub mod calibrate;
pub mod config;
pub mod data;
pub mod mi;
pub mod report;
pub mod ridge;
pub mod sweep;

pub use audit::{run_audit, AccuracySummary, AuditResult};
pub use calibrate::{calibrate_threshold, CalibrationResult};
pub use config::{
    AuditConfig, DataSource, MiConfig, NoiseLevel, RidgeStudyConfig, RunConfig, SweepSpec,
    SynthSpec,
};
pub use data::{
    dataset_to_csv, load_dataset_csv, parse_dataset_csv, synth_dataset, synth_test_dataset,
    write_dataset_csv,
};
pub use mi::run_mi_baseline;
pub use report::{result_from_json, result_to_json, save_result};
pub use ridge::run_ridge_study;
pub use sweep::{run_sweep, sweep_csv, SweepOutput, SweepRow};

/// Stream-id layout. Calibration and estimation trials draw from disjoint
/// ranges so the two phases are fully independent.
pub(crate) mod streams {
    pub const TRAIN_DATA: u64 = 1;
    pub const TEST_DATA: u64 = 2;
    pub const PLAN: u64 = 3;
    pub const REFERENCE: u64 = 4;
    pub const RIDGE_BASE: u64 = 1 << 20;
    pub const MI_BASE: u64 = 1 << 24;
    pub const CALIBRATION_BASE: u64 = 1 << 32;
    pub const ESTIMATION_BASE: u64 = 1 << 40;

    pub fn calibration(trial: usize, arm: u64) -> u64 {
        let id = CALIBRATION_BASE + 2 * trial as u64 + arm;
        assert!(id < ESTIMATION_BASE, "calibration stream range exhausted");
        id
    }

    pub fn estimation(trial: usize, arm: u64) -> u64 {
        ESTIMATION_BASE + 2 * trial as u64 + arm
    }
}

/// SplitMix64 finalizer: derives well-separated per-cell seeds for sweeps.
pub(crate) fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
