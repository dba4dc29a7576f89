//! No-reference image quality assessment at desk scale.
//!
//! The pipeline: generate synthetically distorted corpora with
//! (model, severity) pseudo-labels, pre-train a small classifier on those
//! labels, fine-tune it into a quality regressor under a rank-aware loss,
//! train several such regressors as base learners, and combine them with a
//! stepwise linear regression meta-learner. An experiment harness runs
//! holdout, cross-dataset, and ablation evaluations with PLCC/SROCC/RMSE
//! reporting.
//!
//! Everything downstream of a seed is bit-reproducible: the RNG streams,
//! corpus layout, training trajectories, and reports are all deterministic
//! functions of explicit 64-bit seeds.

pub mod autodiff;
pub mod distortion;
pub mod error;
pub mod harness;
pub mod image;
pub mod metalearner;
pub mod metrics;
pub mod qaloss;
pub mod regressor;
pub mod rng;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
pub use image::{AugmentKind, AugmentOp, CropOrigin, CropSpec, ImageTensor};
pub use qaloss::LossConfig;
