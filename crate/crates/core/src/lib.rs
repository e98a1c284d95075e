//! Matrix-free sparse reconstruction of dynamic inverse problems.
//!
//! The library reconstructs a time series of images from undersampled
//! per-frame measurements by representing the stack in a spatiotemporal
//! Kronecker dictionary W = E ⊗ S (cumulative-sum temporal atoms, inverse
//! 2D Haar spatial atoms) and solving for sparse coefficients with a
//! hierarchical-Bayesian MAP solver (IAS). A compressed-sensing ADMM
//! baseline, synthetic forward models (parallel-beam tomography and masked
//! Fourier sampling), image-quality metrics, and an experiment harness with
//! a CLI round out the toolkit.
//!
//! Everything is built on the [`linops::LinOp`] forward/adjoint contract;
//! no forward operator or dictionary is ever assembled as a matrix.

pub mod admm;
pub mod harness;
pub mod ias;
pub mod image;
pub mod linops;
pub mod metrics;
pub mod models;
pub mod num;
pub mod rng;
pub mod solvers;
pub mod transforms;

pub use image::DynamicImage;
pub use linops::{DynOp, LinOp, OperatorShape};
pub use num::{Scalar, ScalarField};
