//! Image-quality metrics: masked SSIM with Gaussian-weighted local
//! statistics, its time average over a dynamic stack, and normalized RMSE.
//!
//! The Gaussian window is normalized to unit sum and truncated at
//! `window_size`; no border padding is used, so the SSIM map is defined only
//! where the full window fits. The reported score is the mean of the map
//! over valid window centers intersected with the mask; windows straddling
//! the mask boundary still use their unmasked neighbors.

use crate::image::DynamicImage;

#[derive(Debug, Clone)]
pub struct SsimParams {
    pub k1: f64,
    pub k2: f64,
    pub gaussian_sigma: f64,
    /// Odd window side length.
    pub window_size: usize,
    /// Intensity range; when unset, max − min of the reference over the
    /// masked region.
    pub data_range: Option<f64>,
    /// Optional inclusion mask over pixels (row-major).
    pub mask: Option<Vec<bool>>,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            k1: 0.1,
            k2: 0.1,
            gaussian_sigma: 1.5,
            window_size: 11,
            data_range: None,
            mask: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("images have different sizes: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("window of size {window} does not fit a {width}x{height} image")]
    WindowTooLarge {
        window: usize,
        width: usize,
        height: usize,
    },
    #[error("window size must be odd and >= 3, got {0}")]
    BadWindow(usize),
    #[error("reference has zero norm")]
    ZeroReference,
    #[error("data range must be positive, got {0}")]
    BadDataRange(f64),
    #[error("mask has {got} entries, expected {expected}")]
    MaskSize { expected: usize, got: usize },
    #[error("no valid window positions inside the mask")]
    EmptyMask,
}

fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let rad = (size / 2) as isize;
    let mut k: Vec<f64> = (-rad..=rad)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Valid-mode separable convolution with a symmetric 1D kernel applied along
/// rows then columns. Output is (h − size + 1) x (w − size + 1).
fn convolve_valid(img: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let size = kernel.len();
    let out_w = width - size + 1;
    let out_h = height - size + 1;
    // Rows.
    let mut rows = vec![0.0; height * out_w];
    for r in 0..height {
        for c in 0..out_w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * img[r * width + c + k];
            }
            rows[r * out_w + c] = acc;
        }
    }
    // Columns.
    let mut out = vec![0.0; out_h * out_w];
    for r in 0..out_h {
        for c in 0..out_w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                acc += kv * rows[(r + k) * out_w + c];
            }
            out[r * out_w + c] = acc;
        }
    }
    out
}

fn resolve_data_range(
    reference: &[f64],
    mask: Option<&[bool]>,
    requested: Option<f64>,
) -> Result<f64, MetricsError> {
    if let Some(dr) = requested {
        if dr > 0.0 {
            return Ok(dr);
        }
        return Err(MetricsError::BadDataRange(dr));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &v) in reference.iter().enumerate() {
        if mask.is_none_or(|m| m[i]) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let dr = hi - lo;
    if dr > 0.0 {
        Ok(dr)
    } else {
        Err(MetricsError::BadDataRange(dr))
    }
}

/// Structural similarity between two images of the same size; `b` is the
/// reference when the data range is derived.
pub fn ssim(
    a: &[f64],
    b: &[f64],
    width: usize,
    height: usize,
    params: &SsimParams,
) -> Result<f64, MetricsError> {
    if a.len() != b.len() || a.len() != width * height {
        return Err(MetricsError::DimensionMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    if params.window_size < 3 || params.window_size % 2 == 0 {
        return Err(MetricsError::BadWindow(params.window_size));
    }
    if params.window_size > width || params.window_size > height {
        return Err(MetricsError::WindowTooLarge {
            window: params.window_size,
            width,
            height,
        });
    }
    if let Some(m) = &params.mask {
        if m.len() != width * height {
            return Err(MetricsError::MaskSize {
                expected: width * height,
                got: m.len(),
            });
        }
    }
    let mask = params.mask.as_deref();
    let data_range = resolve_data_range(b, mask, params.data_range)?;
    let c1 = (params.k1 * data_range).powi(2);
    let c2 = (params.k2 * data_range).powi(2);

    let kernel = gaussian_kernel(params.window_size, params.gaussian_sigma);
    let a2: Vec<f64> = a.iter().map(|&v| v * v).collect();
    let b2: Vec<f64> = b.iter().map(|&v| v * v).collect();
    let ab: Vec<f64> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();

    let mu_a = convolve_valid(a, width, height, &kernel);
    let mu_b = convolve_valid(b, width, height, &kernel);
    let m_a2 = convolve_valid(&a2, width, height, &kernel);
    let m_b2 = convolve_valid(&b2, width, height, &kernel);
    let m_ab = convolve_valid(&ab, width, height, &kernel);

    let rad = params.window_size / 2;
    let out_w = width - params.window_size + 1;
    let out_h = height - params.window_size + 1;

    let mut sum = 0.0;
    let mut count = 0usize;
    for r in 0..out_h {
        for c in 0..out_w {
            // The map position scores the window centered at (r+rad, c+rad).
            let center = (r + rad) * width + (c + rad);
            if let Some(m) = mask {
                if !m[center] {
                    continue;
                }
            }
            let i = r * out_w + c;
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = m_a2[i] - ma * ma;
            let vb = m_b2[i] - mb * mb;
            let vab = m_ab[i] - ma * mb;
            let num = (2.0 * ma * mb + c1) * (2.0 * vab + c2);
            let den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            sum += num / den;
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricsError::EmptyMask);
    }
    Ok(sum / count as f64)
}

/// Arithmetic mean of per-frame SSIM over a dynamic stack.
pub fn ssim_time_avg(
    x: &DynamicImage<f64>,
    reference: &DynamicImage<f64>,
    params: &SsimParams,
) -> Result<f64, MetricsError> {
    if x.width != reference.width || x.height != reference.height || x.n_frames != reference.n_frames
    {
        return Err(MetricsError::DimensionMismatch {
            a: x.data.len(),
            b: reference.data.len(),
        });
    }
    let mut total = 0.0;
    for t in 0..x.n_frames {
        total += ssim(x.frame(t), reference.frame(t), x.width, x.height, params)?;
    }
    Ok(total / x.n_frames as f64)
}

/// ‖x − ref‖₂ / ‖ref‖₂.
pub fn nrmse(x: &[f64], reference: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != reference.len() {
        return Err(MetricsError::DimensionMismatch {
            a: x.len(),
            b: reference.len(),
        });
    }
    let ref_norm: f64 = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    if ref_norm == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    let diff: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(diff / ref_norm)
}
