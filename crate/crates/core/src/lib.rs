//! Spatial Bayesian species-distribution modeling with expert calibration.
//!
//! This crate fits latent Gaussian models that combine point-referenced
//! survey observations (counts or presence/absence) with rasterized
//! categorical expert assessments. The survey field follows a barrier
//! SPDE model whose correlation does not travel through land; expert
//! assessments are calibrated through per-expert skill coefficients and
//! spatially structured bias fields (BYM). Inference is by Laplace
//! approximation of the latent field with empirical-Bayes hyperparameter
//! optimization, and models are compared with leave-one-out predictive
//! scores (CPO, lpd, ACC, bACC, CRPS).
//!
//! Module map:
//! - [`geometry`]: meshes, rasters, polygons, projection matrices
//! - [`gmrf`]: sparse precision matrices, Cholesky, GMRF densities, hyperpriors
//! - [`likelihoods`]: observation-model densities for surveys and experts
//! - [`model`]: joint latent-model assembly, log density, gradient, Hessian
//! - [`inference`]: Laplace fitting, hyperparameter search, prediction, LOO
//! - [`evaluation`]: model-comparison scores
//! - [`simulation`]: synthetic scenario generation

pub mod error;
pub mod numeric;
pub mod evaluation;
pub mod geometry;
pub mod gmrf;
pub mod inference;
pub mod likelihoods;
pub mod model;
pub mod simulation;

pub use error::{Error, ErrorClass, Result};
