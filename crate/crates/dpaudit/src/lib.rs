//! Empirical privacy auditing for DP-SGD and related mechanisms.
//!
//! The toolkit mounts data-poisoning attacks against a training algorithm,
//! runs Monte-Carlo trials on the poisoned/clean dataset pair, and converts
//! the distinguishing counts into statistically valid lower bounds on the
//! differential-privacy parameter epsilon: if a mechanism claims
//! `(eps_th, delta)`-DP and the audit reports `eps_lb > eps_th`, the claim
//! is refuted with confidence `1 - alpha`.
//!
//! ## Modules
//!
//! - [`numerics`] - dense matrices, one-sided Jacobi SVD, seeded random
//!   streams, and the beta quantiles behind the exact binomial bounds
//! - [`trainer`] - DP-SGD over logistic regression and a two-layer network:
//!   per-example clipping plus Gaussian noise on the averaged gradient
//! - [`attacks`] - dataset pairs and test statistics: the baseline backdoor
//!   patch, clipping-aware ClipBKD, its feature-space variant, and the
//!   ridge-regression poison pair with its closed-form distinguisher
//! - [`estimator`] - Clopper-Pearson bounds, the group-privacy conversion
//!   (delta = 0 and the polynomial root for delta > 0), the complement rule,
//!   the Monte-Carlo ceiling, and the membership-inference baseline
//! - [`harness`] - end-to-end orchestration: data ingestion, threshold
//!   calibration, parallel trials, sweeps, and result persistence
//!
//! ## Examples
//!
//! Each major capability has a runnable example:
//!
//! - **`synth_data`** - generate synthetic datasets and round-trip the CSV format
//! - **`train_dpsgd`** - train both model families with DP-SGD, reproducibly
//! - **`estimate_epsilon`** - the statistical core on hand-picked counts
//! - **`audit_clipbkd`** - full clipping-aware audit hitting the Monte-Carlo ceiling
//! - **`audit_backdoor`** - baseline backdoor patch audit on synthetic images
//! - **`feature_space_attack`** - poison search through a frozen encoder
//! - **`ridge_study`** - the analytically checkable output-perturbation audit
//! - **`mi_baseline`** - loss-threshold membership inference on a memorizing model
//! - **`sweep_noise`** - a small grid over noise levels and poison sizes
//!
//! ```bash
//! cargo run --release --example audit_clipbkd
//! cargo run --release --example ridge_study
//! ```
//!
//! The same capabilities are exposed as the `dpaudit` binary with
//! subcommands `audit`, `sweep`, `mi`, `ridge`, and `synth`.

pub mod attacks;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod numerics;
pub mod trainer;

pub use error::{Error, Result};
