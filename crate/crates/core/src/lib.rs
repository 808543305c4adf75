//! Texture classification with diffusion-based multiscale preprocessing.
//!
//! The pipeline: a diffusion method (Gaussian, Perona-Malik, forward-backward
//! regularization, or nonlocal fractional-gradient) turns each image into a
//! stack of progressively smoothed scales; local-binary-pattern-family
//! descriptors summarize each scale; concatenating original and scale
//! features feeds 1-NN / Naive Bayes classifiers under stratified 10-fold
//! cross validation, sweeping the iteration index to find the scale that
//! helps recognition most.

pub mod classify;
pub mod dataset;
pub mod descriptors;
pub mod diffusion;
pub mod error;
pub mod image;
pub mod pipeline;
pub mod spectral;
pub mod synthetic;

pub use dataset::{load_dataset, stratified_folds, Dataset, LabeledImage};
pub use diffusion::{
    diffuse, fbr_step, fractional_gradient_magnitude, gaussian_blur, gradient_magnitude, nl_step,
    nl_step_bypass, pm_step, DiffusionMethod, DiffusionParams, ScaleSequence, ScaleStack,
};
pub use error::{Error, Result};
pub use image::{load_image, normalize, Image};
pub use spectral::{apply_fractional_filter, SpectralMultiplier};

pub use classify::{
    concat_features, cross_validate, knn_predict, nb_predict, nb_train, CellStats, ClassifierKind,
    FeatureTable, NbModel, SweepResult,
};
pub use descriptors::{extract, DescriptorKind, ExtractOptions, FeatureVector, QuantizedImage};
