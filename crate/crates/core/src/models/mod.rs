//! Desk-scale forward models and data generation: the parallel-beam dynamic
//! tomography projector, the masked discrete-Fourier sampler, the
//! moving-block phantom, noise injection, and whitening.

pub mod fourier;
pub mod noise;
pub mod phantom;
pub mod radon;

pub use fourier::{
    fourier_sample_adjoint, fourier_sample_apply, fourier_sample_op, FourierMask, MaskError,
};
pub use noise::{add_noise, whiten};
pub use phantom::{make_phantom, PhantomError, PhantomSpec};
pub use radon::{dynamic_radon_op, radon_adjoint, radon_apply, GeometryError, TomoGeometry};
