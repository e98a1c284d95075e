//! Gaussian noise injection and noise whitening.

use std::sync::Arc;

use crate::linops::{ComposeMap, DynOp, LinopError};
use crate::num::Scalar;
use crate::rng::SplitMix64;

/// y + σ·g with E|gᵢ|² = 1 (complex: independent real/imaginary parts of
/// variance 1/2 each). Deterministic per seed.
pub fn add_noise<T: Scalar>(y: &[T], sigma: f64, seed: u64) -> Vec<T> {
    assert!(sigma >= 0.0, "sigma must be nonnegative");
    if sigma == 0.0 {
        return y.to_vec();
    }
    let mut rng = SplitMix64::new(seed);
    y.iter()
        .map(|&v| v + T::unit_noise(&mut rng).scale(sigma))
        .collect()
}

/// Apply a whitening transform: returns (Γ^{−1/2} y, Γ^{−1/2} ∘ F) with the
/// composition formed lazily.
pub fn whiten<T: Scalar>(
    y: &[T],
    f: DynOp<T>,
    chol_gamma_inv: DynOp<T>,
) -> Result<(Vec<T>, DynOp<T>), LinopError> {
    if chol_gamma_inv.rows() != chol_gamma_inv.cols() {
        return Err(LinopError::Shape {
            expected: chol_gamma_inv.rows(),
            got: chol_gamma_inv.cols(),
        });
    }
    if chol_gamma_inv.cols() != y.len() || f.rows() != y.len() {
        return Err(LinopError::Shape {
            expected: chol_gamma_inv.cols(),
            got: y.len(),
        });
    }
    let wy = chol_gamma_inv.apply(y);
    let wf: DynOp<T> = Arc::new(ComposeMap::new(chol_gamma_inv, f));
    Ok((wy, wf))
}
