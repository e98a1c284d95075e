//! Masked discrete-Fourier sampler: the complex-valued surrogate forward
//! model. Per frame, a unitary 2D DFT followed by selection of the kept
//! frequencies; the adjoint embeds at the kept frequencies and applies the
//! unitary inverse.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::image::DynamicImage;
use crate::linops::{BlockDiagonalMap, DynOp, LinOp, LinopError, OperatorShape};
use crate::rng::SplitMix64;

#[derive(Debug, Clone)]
pub struct FourierMask {
    pub image_size: usize,
    /// Per frame, a boolean mask over the n x n frequency grid (row-major).
    pub kept_frequencies: Vec<Vec<bool>>,
}

#[derive(Debug, thiserror::Error)]
pub enum MaskError {
    #[error("frame {0} keeps no frequencies")]
    EmptyFrame(usize),
    #[error("mask for frame {frame} has {got} entries, expected {expected}")]
    MaskSize {
        frame: usize,
        expected: usize,
        got: usize,
    },
    #[error("image has {got} entries, mask expects {expected}")]
    ImageSize { expected: usize, got: usize },
}

impl FourierMask {
    pub fn new(image_size: usize, kept_frequencies: Vec<Vec<bool>>) -> Result<Self, MaskError> {
        let np = image_size * image_size;
        for (t, mask) in kept_frequencies.iter().enumerate() {
            if mask.len() != np {
                return Err(MaskError::MaskSize {
                    frame: t,
                    expected: np,
                    got: mask.len(),
                });
            }
            if !mask.iter().any(|&k| k) {
                return Err(MaskError::EmptyFrame(t));
            }
        }
        Ok(FourierMask {
            image_size,
            kept_frequencies,
        })
    }

    /// Keep everything: the sampler is then unitary.
    pub fn full(image_size: usize, n_frames: usize) -> Self {
        FourierMask {
            image_size,
            kept_frequencies: vec![vec![true; image_size * image_size]; n_frames],
        }
    }

    /// Keep every `step`-th frequency row, with the starting row rotating by
    /// frame so consecutive frames sample complementary lines.
    pub fn rows(image_size: usize, n_frames: usize, step: usize) -> Result<Self, MaskError> {
        assert!(step >= 1);
        let masks = (0..n_frames)
            .map(|t| {
                let offset = t % step;
                let mut m = vec![false; image_size * image_size];
                for row in (offset..image_size).step_by(step) {
                    for col in 0..image_size {
                        m[row * image_size + col] = true;
                    }
                }
                m
            })
            .collect();
        FourierMask::new(image_size, masks)
    }

    /// Random per-frame mask keeping roughly `fraction` of the grid, always
    /// including the zero frequency.
    pub fn random(
        image_size: usize,
        n_frames: usize,
        fraction: f64,
        seed: u64,
    ) -> Result<Self, MaskError> {
        let mut rng = SplitMix64::new(seed);
        let np = image_size * image_size;
        let masks = (0..n_frames)
            .map(|_| {
                let mut m: Vec<bool> = (0..np).map(|_| rng.next_f64() < fraction).collect();
                m[0] = true;
                m
            })
            .collect();
        FourierMask::new(image_size, masks)
    }

    pub fn n_frames(&self) -> usize {
        self.kept_frequencies.len()
    }

    /// Samples collected over all frames.
    pub fn data_len(&self) -> usize {
        self.kept_frequencies
            .iter()
            .map(|m| m.iter().filter(|&&k| k).count())
            .sum()
    }
}

/// Precomputed unitary DFT twiddle table for one dimension.
struct DftTable {
    n: usize,
    /// u[p * n + r] = exp(-2*pi*i*p*r/n) / sqrt(n).
    u: Vec<Complex64>,
}

impl DftTable {
    fn new(n: usize) -> Self {
        let scale = 1.0 / (n as f64).sqrt();
        let mut u = vec![Complex64::new(0.0, 0.0); n * n];
        for p in 0..n {
            for r in 0..n {
                let phase = -2.0 * PI * ((p * r) % n) as f64 / n as f64;
                u[p * n + r] = Complex64::from_polar(scale, phase);
            }
        }
        DftTable { n, u }
    }

    /// In-place unitary 2D DFT (forward) or its inverse (adjoint of the
    /// unitary map) on an n x n row-major grid.
    fn transform2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n);
        let coeff = |p: usize, r: usize| {
            let v = self.u[p * n + r];
            if inverse {
                v.conj()
            } else {
                v
            }
        };
        let mut tmp = vec![Complex64::new(0.0, 0.0); n * n];
        // Columns: tmp[p][c] = sum_r U[p][r] data[r][c].
        for p in 0..n {
            for r in 0..n {
                let w = coeff(p, r);
                for c in 0..n {
                    tmp[p * n + c] += w * data[r * n + c];
                }
            }
        }
        // Rows: data[p][q] = sum_c tmp[p][c] U[q][c].
        for v in data.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for p in 0..n {
            for q in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..n {
                    acc += tmp[p * n + c] * coeff(q, c);
                }
                data[p * n + q] = acc;
            }
        }
    }
}

/// Per-frame masked DFT sampler.
struct FourierFrameMap {
    n: usize,
    kept: Vec<usize>,
    table: Arc<DftTable>,
}

impl LinOp<Complex64> for FourierFrameMap {
    fn shape(&self) -> OperatorShape {
        OperatorShape::of::<Complex64>(self.kept.len(), self.n * self.n)
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n * self.n);
        let mut grid = x.to_vec();
        self.table.transform2(&mut grid, false);
        self.kept.iter().map(|&i| grid[i]).collect()
    }

    fn adjoint_apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.kept.len());
        let mut grid = vec![Complex64::new(0.0, 0.0); self.n * self.n];
        for (&i, &v) in self.kept.iter().zip(y) {
            grid[i] = v;
        }
        self.table.transform2(&mut grid, true);
        grid
    }
}

/// The dynamic masked-Fourier forward operator, block diagonal over frames.
pub fn fourier_sample_op(mask: &FourierMask) -> DynOp<Complex64> {
    let table = Arc::new(DftTable::new(mask.image_size));
    let blocks: Vec<DynOp<Complex64>> = mask
        .kept_frequencies
        .iter()
        .map(|m| {
            let kept: Vec<usize> = m
                .iter()
                .enumerate()
                .filter_map(|(i, &k)| if k { Some(i) } else { None })
                .collect();
            Arc::new(FourierFrameMap {
                n: mask.image_size,
                kept,
                table: table.clone(),
            }) as DynOp<Complex64>
        })
        .collect();
    Arc::new(BlockDiagonalMap::new(blocks))
}

/// Sample the kept frequencies of every frame.
pub fn fourier_sample_apply(
    mask: &FourierMask,
    x: &DynamicImage<Complex64>,
) -> Result<Vec<Complex64>, MaskError> {
    let expected = mask.image_size * mask.image_size * mask.n_frames();
    if x.data.len() != expected {
        return Err(MaskError::ImageSize {
            expected,
            got: x.data.len(),
        });
    }
    Ok(fourier_sample_op(mask).apply(&x.data))
}

/// Adjoint of [`fourier_sample_apply`].
pub fn fourier_sample_adjoint(
    mask: &FourierMask,
    y: &[Complex64],
) -> Result<DynamicImage<Complex64>, MaskError> {
    if y.len() != mask.data_len() {
        return Err(MaskError::ImageSize {
            expected: mask.data_len(),
            got: y.len(),
        });
    }
    let data = fourier_sample_op(mask).adjoint_apply(y);
    Ok(DynamicImage::from_data(
        mask.image_size,
        mask.image_size,
        mask.n_frames(),
        data,
    ))
}

impl From<MaskError> for LinopError {
    fn from(_: MaskError) -> Self {
        LinopError::Shape { expected: 0, got: 0 }
    }
}
