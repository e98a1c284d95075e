//! Dynamic image stacks: an N_P x N_T array whose column t is frame t.
//!
//! Frames are stored contiguously (the column-stacking vec convention);
//! within a frame pixels are row-major, matching the serialized array
//! format.

use num_complex::Complex64;

use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicImage<T> {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    /// `n_frames * width * height` values, frame-major.
    pub data: Vec<T>,
}

impl<T: Scalar> DynamicImage<T> {
    pub fn zeros(width: usize, height: usize, n_frames: usize) -> Self {
        DynamicImage {
            width,
            height,
            n_frames,
            data: vec![T::zero(); width * height * n_frames],
        }
    }

    pub fn from_data(width: usize, height: usize, n_frames: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height * n_frames);
        DynamicImage {
            width,
            height,
            n_frames,
            data,
        }
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn frame(&self, t: usize) -> &[T] {
        let np = self.n_pixels();
        &self.data[t * np..(t + 1) * np]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [T] {
        let np = self.n_pixels();
        &mut self.data[t * np..(t + 1) * np]
    }
}

impl DynamicImage<Complex64> {
    /// Per-pixel modulus, used when scoring complex reconstructions against
    /// a real reference.
    pub fn magnitude(&self) -> DynamicImage<f64> {
        DynamicImage {
            width: self.width,
            height: self.height,
            n_frames: self.n_frames,
            data: self.data.iter().map(|v| v.norm()).collect(),
        }
    }
}

impl DynamicImage<f64> {
    pub fn to_complex(&self) -> DynamicImage<Complex64> {
        DynamicImage {
            width: self.width,
            height: self.height,
            n_frames: self.n_frames,
            data: self.data.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}
