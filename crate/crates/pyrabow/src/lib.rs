//! A from-scratch bag-of-visual-words image classification toolkit.
//!
//! The pipeline mirrors the classical recipe: dense SIFT-style descriptors on a
//! regular keypoint grid, a k-means codebook of visual words, spatial-pyramid
//! histograms with configurable normalization, optional PCA projection or
//! Fisher-vector encoding, and a kernel SVM / k-NN / logistic-regression
//! classifier on top. Everything is seeded and deterministic so experiments
//! can be replayed bit for bit.
//!
//! Module map:
//! - [`dataset`]: corpus scanning, grayscale decoding, stratified splits/folds
//! - [`features`]: dense keypoint grids and 128-D gradient-orientation descriptors
//! - [`codebook`]: k-means visual-word training and quantization
//! - [`encoding`]: spatial pyramids, histogram normalization, PCA
//! - [`fisher`]: diagonal-covariance GMM and Fisher-vector encoding
//! - [`classify`]: kernels, one-vs-rest SVM, k-NN, multinomial logistic regression
//! - [`eval`]: accuracy/confusion/ROC metrics, cross-validation, config sweeps
//! - [`pipeline`]: end-to-end configuration, fitting, prediction, run artifacts
//! - [`synth`]: seeded synthetic grating corpus for benchmarks and demos

pub mod cache;
pub mod classify;
pub mod codebook;
pub mod dataset;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod features;
pub mod fisher;
pub mod pipeline;
pub mod synth;

mod par;

pub use error::{Error, Result};
pub use par::with_thread_budget;
