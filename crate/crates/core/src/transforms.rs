//! Sparsifying transforms: orthonormal multilevel 2D Haar synthesis/analysis
//! (the spatial dictionary S) and the temporal cumulative-sum dictionary
//! E = L⁻¹ together with the first-order difference L.
//!
//! Supported image sizes are restricted to dimensions divisible by 2^levels
//! with orthonormal filters (1/√2, 1/√2), so S is exactly orthogonal and
//! Sᴴ = S⁻¹.
//!
//! Coefficient ordering of the Haar vector is canonical and fixed: the
//! coarsest approximation block first (row-major), then per level from
//! coarsest to finest the detail bands H (high-pass horizontal), V
//! (high-pass vertical), D (diagonal), each row-major. This is the order
//! used by all serialized coefficient arrays.

use crate::linops::{LinOp, OperatorShape};
use crate::num::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("dimensions {width}x{height} not divisible by 2^{levels}")]
    NotDyadic {
        width: usize,
        height: usize,
        levels: usize,
    },
    #[error("levels must be >= 1, got {0}")]
    NoLevels(usize),
    #[error("expected vector of length {expected}, got {got}")]
    Size { expected: usize, got: usize },
    #[error("n_frames must be >= 1")]
    EmptyTemporal,
}

/// Geometry of the multilevel 2D Haar transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarSpec {
    pub width: usize,
    pub height: usize,
    pub levels: usize,
}

impl HaarSpec {
    pub fn new(width: usize, height: usize, levels: usize) -> Result<Self, TransformError> {
        if levels == 0 {
            return Err(TransformError::NoLevels(levels));
        }
        let d = 1usize << levels;
        if width == 0 || height == 0 || width % d != 0 || height % d != 0 {
            return Err(TransformError::NotDyadic {
                width,
                height,
                levels,
            });
        }
        Ok(HaarSpec {
            width,
            height,
            levels,
        })
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check<T>(&self, v: &[T]) -> Result<(), TransformError> {
        if v.len() == self.len() {
            Ok(())
        } else {
            Err(TransformError::Size {
                expected: self.len(),
                got: v.len(),
            })
        }
    }
}

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// One orthonormal analysis step on a strided 1D signal of even length `m`:
/// averages to the front half, details to the back half.
fn haar_step_analysis<T: Scalar>(buf: &mut [T], offset: usize, stride: usize, m: usize) {
    let half = m / 2;
    let mut tmp = vec![T::zero(); m];
    for k in 0..half {
        let a = buf[offset + 2 * k * stride];
        let b = buf[offset + (2 * k + 1) * stride];
        tmp[k] = (a + b).scale(INV_SQRT2);
        tmp[half + k] = (a - b).scale(INV_SQRT2);
    }
    for (k, &v) in tmp.iter().enumerate() {
        buf[offset + k * stride] = v;
    }
}

fn haar_step_synthesis<T: Scalar>(buf: &mut [T], offset: usize, stride: usize, m: usize) {
    let half = m / 2;
    let mut tmp = vec![T::zero(); m];
    for k in 0..half {
        let a = buf[offset + k * stride];
        let d = buf[offset + (half + k) * stride];
        tmp[2 * k] = (a + d).scale(INV_SQRT2);
        tmp[2 * k + 1] = (a - d).scale(INV_SQRT2);
    }
    for (k, &v) in tmp.iter().enumerate() {
        buf[offset + k * stride] = v;
    }
}

/// Band rectangles in the in-place quadrant layout, canonical order.
fn band_rects(spec: &HaarSpec) -> Vec<(usize, usize, usize, usize)> {
    let (w, h, l) = (spec.width, spec.height, spec.levels);
    let mut rects = Vec::with_capacity(1 + 3 * l);
    // (x, y, width, height); coarsest approximation first.
    rects.push((0, 0, w >> l, h >> l));
    for level in (1..=l).rev() {
        let bw = w >> level;
        let bh = h >> level;
        rects.push((bw, 0, bw, bh)); // H
        rects.push((0, bh, bw, bh)); // V
        rects.push((bw, bh, bw, bh)); // D
    }
    rects
}

fn pack_bands<T: Scalar>(spec: &HaarSpec, quad: &[T]) -> Vec<T> {
    let w = spec.width;
    let mut out = Vec::with_capacity(spec.len());
    for (x, y, bw, bh) in band_rects(spec) {
        for r in y..y + bh {
            out.extend_from_slice(&quad[r * w + x..r * w + x + bw]);
        }
    }
    out
}

fn unpack_bands<T: Scalar>(spec: &HaarSpec, coeffs: &[T]) -> Vec<T> {
    let w = spec.width;
    let mut quad = vec![T::zero(); spec.len()];
    let mut pos = 0;
    for (x, y, bw, bh) in band_rects(spec) {
        for r in y..y + bh {
            quad[r * w + x..r * w + x + bw].copy_from_slice(&coeffs[pos..pos + bw]);
            pos += bw;
        }
    }
    quad
}

/// Forward multilevel 2D Haar transform (this is Sᴴ); returns coefficients
/// in the canonical band order.
pub fn haar_analysis<T: Scalar>(spec: &HaarSpec, image: &[T]) -> Result<Vec<T>, TransformError> {
    spec.check(image)?;
    let (w, h) = (spec.width, spec.height);
    let mut buf = image.to_vec();
    for l in 0..spec.levels {
        let cur_w = w >> l;
        let cur_h = h >> l;
        for r in 0..cur_h {
            haar_step_analysis(&mut buf, r * w, 1, cur_w);
        }
        for c in 0..cur_w {
            haar_step_analysis(&mut buf, c, w, cur_h);
        }
    }
    Ok(pack_bands(spec, &buf))
}

/// Inverse multilevel 2D Haar transform (this is S): coefficients in
/// canonical band order to an image.
pub fn haar_synthesis<T: Scalar>(spec: &HaarSpec, coeffs: &[T]) -> Result<Vec<T>, TransformError> {
    spec.check(coeffs)?;
    let (w, h) = (spec.width, spec.height);
    let mut buf = unpack_bands(spec, coeffs);
    for l in (0..spec.levels).rev() {
        let cur_w = w >> l;
        let cur_h = h >> l;
        for c in 0..cur_w {
            haar_step_synthesis(&mut buf, c, w, cur_h);
        }
        for r in 0..cur_h {
            haar_step_synthesis(&mut buf, r * w, 1, cur_w);
        }
    }
    Ok(buf)
}

/// The spatial dictionary S as an operator: forward is Haar synthesis
/// (coefficients to image), adjoint is analysis. Orthogonal, so the adjoint
/// is also the inverse.
#[derive(Debug, Clone, Copy)]
pub struct HaarSynthesisMap {
    pub spec: HaarSpec,
}

impl<T: Scalar> LinOp<T> for HaarSynthesisMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.spec.len(), self.spec.len())
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        haar_synthesis(&self.spec, x).expect("haar: input length mismatch")
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        haar_analysis(&self.spec, y).expect("haar: input length mismatch")
    }
}

/// The frame-wise wavelet analysis operator Sᴴ (H₁ of the compressed-sensing
/// cost): forward is analysis, adjoint synthesis.
#[derive(Debug, Clone, Copy)]
pub struct HaarAnalysisMap {
    pub spec: HaarSpec,
}

impl<T: Scalar> LinOp<T> for HaarAnalysisMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.spec.len(), self.spec.len())
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        haar_analysis(&self.spec, x).expect("haar: input length mismatch")
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        haar_synthesis(&self.spec, y).expect("haar: input length mismatch")
    }
}

// ---------------------------------------------------------------------------
// Temporal dictionary
// ---------------------------------------------------------------------------

/// Number of time frames for the temporal transforms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TemporalSpec {
    pub n_frames: usize,
}

impl TemporalSpec {
    pub fn new(n_frames: usize) -> Result<Self, TransformError> {
        if n_frames == 0 {
            return Err(TransformError::EmptyTemporal);
        }
        Ok(TemporalSpec { n_frames })
    }

    fn check<T>(&self, v: &[T]) -> Result<(), TransformError> {
        if v.len() == self.n_frames {
            Ok(())
        } else {
            Err(TransformError::Size {
                expected: self.n_frames,
                got: v.len(),
            })
        }
    }
}

/// E v: running sum, out[t] = Σ_{s≤t} v[s].
pub fn cumsum_apply<T: Scalar>(spec: &TemporalSpec, v: &[T]) -> Result<Vec<T>, TransformError> {
    spec.check(v)?;
    let mut acc = T::zero();
    Ok(v.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect())
}

/// Eᵀ y: reverse running sum, out[t] = Σ_{s≥t} y[s].
pub fn cumsum_adjoint<T: Scalar>(spec: &TemporalSpec, y: &[T]) -> Result<Vec<T>, TransformError> {
    spec.check(y)?;
    let mut out = vec![T::zero(); y.len()];
    let mut acc = T::zero();
    for t in (0..y.len()).rev() {
        acc += y[t];
        out[t] = acc;
    }
    Ok(out)
}

/// L v: first-order differences with the implicit boundary x_t = 0 for
/// t < 0, so the first increment is the first frame itself.
pub fn diff_apply<T: Scalar>(spec: &TemporalSpec, v: &[T]) -> Result<Vec<T>, TransformError> {
    spec.check(v)?;
    Ok((0..v.len())
        .map(|t| if t == 0 { v[0] } else { v[t] - v[t - 1] })
        .collect())
}

/// Lᵀ y: out[t] = y[t] − y[t+1], out[last] = y[last].
pub fn diff_adjoint<T: Scalar>(spec: &TemporalSpec, y: &[T]) -> Result<Vec<T>, TransformError> {
    spec.check(y)?;
    let n = y.len();
    Ok((0..n)
        .map(|t| if t + 1 < n { y[t] - y[t + 1] } else { y[n - 1] })
        .collect())
}

/// The temporal dictionary E = L⁻¹ as an operator.
#[derive(Debug, Clone, Copy)]
pub struct CumsumMap {
    pub spec: TemporalSpec,
}

impl<T: Scalar> LinOp<T> for CumsumMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.spec.n_frames, self.spec.n_frames)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        cumsum_apply(&self.spec, x).expect("cumsum: length mismatch")
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        cumsum_adjoint(&self.spec, y).expect("cumsum: length mismatch")
    }
}

/// The finite-difference matrix L as an operator (H₂ building block).
#[derive(Debug, Clone, Copy)]
pub struct DiffMap {
    pub spec: TemporalSpec,
}

impl<T: Scalar> LinOp<T> for DiffMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<T>(self.spec.n_frames, self.spec.n_frames)
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        diff_apply(&self.spec, x).expect("diff: length mismatch")
    }
    fn adjoint_apply(&self, y: &[T]) -> Vec<T> {
        diff_adjoint(&self.spec, y).expect("diff: length mismatch")
    }
}
