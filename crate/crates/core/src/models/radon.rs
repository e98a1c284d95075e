//! Parallel-beam dynamic tomography projector with exact ray-pixel
//! intersection lengths (Siddon-style traversal), block-diagonal over time
//! frames.
//!
//! One sample per detector bin, ray through the bin center, detector bin
//! spacing equal to the pixel spacing. Forward and adjoint share the same
//! traversal, so the intersection weights are identical on both sides.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::image::DynamicImage;
use crate::linops::{BlockDiagonalMap, DynOp, LinOp, LinopError, OperatorShape};

#[derive(Debug, Clone, PartialEq)]
pub struct TomoGeometry {
    /// Image is n x n pixels.
    pub image_size: usize,
    pub n_detectors: usize,
    /// Projection angles per time frame, radians in [0, 2π).
    pub angles_per_frame: Vec<Vec<f64>>,
    pub pixel_spacing: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("angle {0} outside [0, 2*pi)")]
    AngleRange(f64),
    #[error("need at least one detector")]
    NoDetectors,
    #[error("need at least one frame with at least one angle")]
    Empty,
    #[error("image has {got} entries, geometry expects {expected}")]
    ImageSize { expected: usize, got: usize },
    #[error("sinogram has {got} entries, geometry expects {expected}")]
    SinogramSize { expected: usize, got: usize },
}

impl TomoGeometry {
    pub fn new(
        image_size: usize,
        n_detectors: usize,
        angles_per_frame: Vec<Vec<f64>>,
        pixel_spacing: f64,
    ) -> Result<Self, GeometryError> {
        if n_detectors == 0 {
            return Err(GeometryError::NoDetectors);
        }
        if image_size == 0 || angles_per_frame.is_empty() || angles_per_frame.iter().any(|a| a.is_empty())
        {
            return Err(GeometryError::Empty);
        }
        for angles in &angles_per_frame {
            for &a in angles {
                if !(0.0..2.0 * PI).contains(&a) {
                    return Err(GeometryError::AngleRange(a));
                }
            }
        }
        Ok(TomoGeometry {
            image_size,
            n_detectors,
            angles_per_frame,
            pixel_spacing,
        })
    }

    /// The alternating undersampling pattern: `angles_per_frame` evenly
    /// spaced angles, odd frames (1st, 3rd, ...) covering [0, 180°) and even
    /// frames [180°, 360°).
    pub fn alternating(
        image_size: usize,
        n_detectors: usize,
        n_frames: usize,
        angles_per_frame: usize,
    ) -> Result<Self, GeometryError> {
        let angles = (0..n_frames)
            .map(|t| {
                let start = if t % 2 == 0 { 0.0 } else { PI };
                (0..angles_per_frame)
                    .map(|k| start + k as f64 * PI / angles_per_frame as f64)
                    .collect()
            })
            .collect();
        TomoGeometry::new(image_size, n_detectors, angles, 1.0)
    }

    pub fn n_frames(&self) -> usize {
        self.angles_per_frame.len()
    }

    /// Sinogram entries over all frames.
    pub fn sinogram_len(&self) -> usize {
        self.n_detectors * self.angles_per_frame.iter().map(|a| a.len()).sum::<usize>()
    }

    pub fn image_len(&self) -> usize {
        self.image_size * self.image_size * self.n_frames()
    }
}

/// Walk the pixel grid along one ray, reporting (pixel index, intersection
/// length) pairs. Coordinates are in pixel units over the grid [0, n]²;
/// `u` runs along columns, `v` along rows.
fn trace_ray(
    n: usize,
    origin: (f64, f64),
    dir: (f64, f64),
    spacing: f64,
    visit: &mut impl FnMut(usize, f64),
) {
    let nf = n as f64;
    let (qu, qv) = origin;
    let (du, dv) = dir;
    let eps = 1e-12;

    // Clip the ray against the grid slabs.
    let mut s_min = f64::NEG_INFINITY;
    let mut s_max = f64::INFINITY;
    for (q, d) in [(qu, du), (qv, dv)] {
        if d.abs() > eps {
            let t0 = (0.0 - q) / d;
            let t1 = (nf - q) / d;
            s_min = s_min.max(t0.min(t1));
            s_max = s_max.min(t0.max(t1));
        } else if !(0.0..=nf).contains(&q) {
            return;
        }
    }
    if s_min >= s_max {
        return;
    }

    // Gridline crossing parameters in ascending order per axis.
    let crossings = |q: f64, d: f64| -> Vec<f64> {
        if d.abs() <= eps {
            return Vec::new();
        }
        let (lo, hi) = (q + s_min * d, q + s_max * d);
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let first = lo.ceil() as i64;
        let last = hi.floor() as i64;
        let mut out = Vec::new();
        for i in first..=last {
            let s = (i as f64 - q) / d;
            if s > s_min && s < s_max {
                out.push(s);
            }
        }
        if d < 0.0 {
            out.reverse();
        }
        out
    };
    let su = crossings(qu, du);
    let sv = crossings(qv, dv);

    // Merge the two sorted crossing lists with the endpoints.
    let mut breaks = Vec::with_capacity(su.len() + sv.len() + 2);
    breaks.push(s_min);
    let (mut i, mut j) = (0, 0);
    while i < su.len() || j < sv.len() {
        let next = match (su.get(i), sv.get(j)) {
            (Some(&a), Some(&b)) => {
                if a <= b {
                    i += 1;
                    a
                } else {
                    j += 1;
                    b
                }
            }
            (Some(&a), None) => {
                i += 1;
                a
            }
            (None, Some(&b)) => {
                j += 1;
                b
            }
            (None, None) => break,
        };
        breaks.push(next);
    }
    breaks.push(s_max);

    for w in breaks.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 - s0 <= eps {
            continue;
        }
        let mid = 0.5 * (s0 + s1);
        let u = qu + mid * du;
        let v = qv + mid * dv;
        let c = (u.floor() as i64).clamp(0, n as i64 - 1) as usize;
        let r = (v.floor() as i64).clamp(0, n as i64 - 1) as usize;
        visit(r * n + c, (s1 - s0) * spacing);
    }
}

/// Projector for a single frame's angle set.
pub struct RadonFrameMap {
    n: usize,
    n_detectors: usize,
    angles: Vec<f64>,
    spacing: f64,
}

impl RadonFrameMap {
    pub fn new(n: usize, n_detectors: usize, angles: Vec<f64>, spacing: f64) -> Self {
        RadonFrameMap {
            n,
            n_detectors,
            angles,
            spacing,
        }
    }

    fn ray(&self, angle: f64, det: usize) -> ((f64, f64), (f64, f64)) {
        let half = self.n as f64 / 2.0;
        let offset = det as f64 - (self.n_detectors as f64 - 1.0) / 2.0;
        let (sin, cos) = angle.sin_cos();
        let origin = (half + offset * cos, half + offset * sin);
        let dir = (-sin, cos);
        (origin, dir)
    }
}

impl LinOp<f64> for RadonFrameMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<f64>(self.angles.len() * self.n_detectors, self.n * self.n)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n * self.n);
        let mut sino = vec![0.0; self.angles.len() * self.n_detectors];
        for (a, &angle) in self.angles.iter().enumerate() {
            for det in 0..self.n_detectors {
                let (origin, dir) = self.ray(angle, det);
                let mut acc = 0.0;
                trace_ray(self.n, origin, dir, self.spacing, &mut |idx, w| {
                    acc += x[idx] * w;
                });
                sino[a * self.n_detectors + det] = acc;
            }
        }
        sino
    }

    fn adjoint_apply(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.angles.len() * self.n_detectors);
        let mut img = vec![0.0; self.n * self.n];
        for (a, &angle) in self.angles.iter().enumerate() {
            for det in 0..self.n_detectors {
                let val = y[a * self.n_detectors + det];
                if val == 0.0 {
                    continue;
                }
                let (origin, dir) = self.ray(angle, det);
                trace_ray(self.n, origin, dir, self.spacing, &mut |idx, w| {
                    img[idx] += val * w;
                });
            }
        }
        img
    }
}

/// The full dynamic projector: block diagonal over frames.
pub fn dynamic_radon_op(geom: &TomoGeometry) -> DynOp<f64> {
    let blocks: Vec<DynOp<f64>> = geom
        .angles_per_frame
        .iter()
        .map(|angles| {
            Arc::new(RadonFrameMap::new(
                geom.image_size,
                geom.n_detectors,
                angles.clone(),
                geom.pixel_spacing,
            )) as DynOp<f64>
        })
        .collect();
    Arc::new(BlockDiagonalMap::new(blocks))
}

/// Project a dynamic image to its stacked sinogram.
pub fn radon_apply(geom: &TomoGeometry, x: &DynamicImage<f64>) -> Result<Vec<f64>, GeometryError> {
    if x.data.len() != geom.image_len() || x.width != geom.image_size || x.height != geom.image_size
    {
        return Err(GeometryError::ImageSize {
            expected: geom.image_len(),
            got: x.data.len(),
        });
    }
    Ok(dynamic_radon_op(geom).apply(&x.data))
}

/// Backproject a stacked sinogram (the exact adjoint of [`radon_apply`]).
pub fn radon_adjoint(geom: &TomoGeometry, y: &[f64]) -> Result<DynamicImage<f64>, GeometryError> {
    if y.len() != geom.sinogram_len() {
        return Err(GeometryError::SinogramSize {
            expected: geom.sinogram_len(),
            got: y.len(),
        });
    }
    let data = dynamic_radon_op(geom).adjoint_apply(y);
    Ok(DynamicImage::from_data(
        geom.image_size,
        geom.image_size,
        geom.n_frames(),
        data,
    ))
}

impl From<GeometryError> for LinopError {
    fn from(_: GeometryError) -> Self {
        LinopError::Shape { expected: 0, got: 0 }
    }
}
