//! The moving-block phantom: a static disc inside a circular field of view
//! with a small square block translating along a straight line, one position
//! per frame. Piecewise-constant pixel time traces make it an ideal target
//! for sparse-increment reconstruction.

use serde::{Deserialize, Serialize};

use crate::image::DynamicImage;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhantomSpec {
    pub image_size: usize,
    pub n_frames: usize,
    /// Disc center in pixel coordinates (row, col).
    pub disc_center: (f64, f64),
    pub disc_radius: f64,
    pub disc_intensity: f64,
    /// Side length of the square moving block, pixels.
    pub block_size: usize,
    pub block_intensity: f64,
    /// Top-left corner of the block per frame, integer pixel offsets
    /// (row, col).
    pub block_positions: Vec<(i64, i64)>,
    /// Pixels farther than this from the disc center are background (zeroed
    /// and excluded from masked metrics).
    pub mask_radius: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum PhantomError {
    #[error("spec needs at least one frame")]
    NoFrames,
    #[error("{got} block positions for {expected} frames")]
    PositionCount { expected: usize, got: usize },
    #[error("block leaves the disc at frame {frame} (corner at ({row}, {col}))")]
    BlockOutOfBounds { frame: usize, row: i64, col: i64 },
}

impl PhantomSpec {
    /// The default experiment target: a 32x32x16 stack with the block
    /// crossing the disc along a horizontal line, one pixel per frame.
    pub fn default_spec() -> Self {
        let n_frames = 16;
        let positions = (0..n_frames as i64).map(|t| (14, 7 + t)).collect();
        PhantomSpec {
            image_size: 32,
            n_frames,
            disc_center: (16.0, 16.0),
            disc_radius: 12.0,
            disc_intensity: 0.5,
            block_size: 4,
            block_intensity: 1.0,
            block_positions: positions,
            mask_radius: 14.0,
        }
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        if self.n_frames == 0 {
            return Err(PhantomError::NoFrames);
        }
        if self.block_positions.len() != self.n_frames {
            return Err(PhantomError::PositionCount {
                expected: self.n_frames,
                got: self.block_positions.len(),
            });
        }
        let bs = self.block_size as i64;
        for (t, &(r0, c0)) in self.block_positions.iter().enumerate() {
            for (r, c) in [(r0, c0), (r0 + bs, c0), (r0, c0 + bs), (r0 + bs, c0 + bs)] {
                let dr = r as f64 - self.disc_center.0;
                let dc = c as f64 - self.disc_center.1;
                if (dr * dr + dc * dc).sqrt() > self.disc_radius {
                    return Err(PhantomError::BlockOutOfBounds {
                        frame: t,
                        row: r,
                        col: c,
                    });
                }
            }
        }
        Ok(())
    }

    /// Boolean field-of-view mask (true inside `mask_radius`).
    pub fn mask(&self) -> Vec<bool> {
        let n = self.image_size;
        let mut m = vec![false; n * n];
        for r in 0..n {
            for c in 0..n {
                let dr = r as f64 + 0.5 - self.disc_center.0;
                let dc = c as f64 + 0.5 - self.disc_center.1;
                m[r * n + c] = (dr * dr + dc * dc).sqrt() <= self.mask_radius;
            }
        }
        m
    }
}

/// Render the phantom: frame t = disc + block at position t, zero outside
/// the field of view. Deterministic in the spec.
pub fn make_phantom(spec: &PhantomSpec) -> Result<DynamicImage<f64>, PhantomError> {
    spec.validate()?;
    let n = spec.image_size;
    let mask = spec.mask();
    let mut img = DynamicImage::<f64>::zeros(n, n, spec.n_frames);

    let mut base = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let dr = r as f64 + 0.5 - spec.disc_center.0;
            let dc = c as f64 + 0.5 - spec.disc_center.1;
            if (dr * dr + dc * dc).sqrt() <= spec.disc_radius {
                base[r * n + c] = spec.disc_intensity;
            }
        }
    }

    for t in 0..spec.n_frames {
        let frame = img.frame_mut(t);
        frame.copy_from_slice(&base);
        let (r0, c0) = spec.block_positions[t];
        for r in r0..r0 + spec.block_size as i64 {
            for c in c0..c0 + spec.block_size as i64 {
                if (0..n as i64).contains(&r) && (0..n as i64).contains(&c) {
                    frame[r as usize * n + c as usize] += spec.block_intensity;
                }
            }
        }
        for (v, &inside) in frame.iter_mut().zip(&mask) {
            if !inside {
                *v = 0.0;
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{diff_apply, TemporalSpec};

    #[test]
    fn stationary_block_has_single_increment() {
        let mut spec = PhantomSpec::default_spec();
        spec.block_positions = vec![(14, 14); spec.n_frames];
        let img = make_phantom(&spec).unwrap();
        let tspec = TemporalSpec::new(spec.n_frames).unwrap();
        for p in 0..img.n_pixels() {
            let trace: Vec<f64> = (0..spec.n_frames).map(|t| img.frame(t)[p]).collect();
            let d = diff_apply(&tspec, &trace).unwrap();
            // Only t = 0 may be nonzero.
            for &v in &d[1..] {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn moving_block_traces_are_piecewise_constant() {
        let spec = PhantomSpec::default_spec();
        let img = make_phantom(&spec).unwrap();
        let tspec = TemporalSpec::new(spec.n_frames).unwrap();
        for p in 0..img.n_pixels() {
            let trace: Vec<f64> = (0..spec.n_frames).map(|t| img.frame(t)[p]).collect();
            let d = diff_apply(&tspec, &trace).unwrap();
            let jumps = d[1..].iter().filter(|&&v| v != 0.0).count();
            assert!(jumps <= 2, "pixel {p} has {jumps} jumps");
        }
    }

    #[test]
    fn mass_conserved_across_frames() {
        let spec = PhantomSpec::default_spec();
        let img = make_phantom(&spec).unwrap();
        let mass0: f64 = img.frame(0).iter().sum();
        for t in 1..spec.n_frames {
            let mass: f64 = img.frame(t).iter().sum();
            assert!((mass - mass0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let spec = PhantomSpec::default_spec();
        let a = make_phantom(&spec).unwrap();
        let b = make_phantom(&spec).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn rejects_block_outside_disc() {
        let mut spec = PhantomSpec::default_spec();
        spec.block_positions[3] = (0, 0);
        assert!(matches!(
            make_phantom(&spec),
            Err(PhantomError::BlockOutOfBounds { frame: 3, .. })
        ));
    }

    #[test]
    fn rejects_zero_frames() {
        let mut spec = PhantomSpec::default_spec();
        spec.n_frames = 0;
        spec.block_positions.clear();
        assert!(matches!(make_phantom(&spec), Err(PhantomError::NoFrames)));
    }
}
