//! Deterministic pseudo-random numbers for noise injection and randomized
//! operator tests.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood 2014): the state advances
//! by a fixed odd constant and each output is a bijective finalizer of the
//! state, so the stream is a pure function of `seed` and the draw index.
//! Gaussian variates come from the Box–Muller transform applied to
//! consecutive 53-bit uniforms. Identical seeds reproduce identical streams
//! on a given platform.

/// SplitMix64 state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    cached_gaussian: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            cached_gaussian: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal N(0, 1), Box–Muller with pair caching.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(g) = self.cached_gaussian.take() {
            return g;
        }
        // u in (0, 1] so the log is finite.
        let u = 1.0 - self.next_f64();
        let v = self.next_f64();
        let r = (-2.0 * u.ln()).sqrt();
        let phi = 2.0 * std::f64::consts::PI * v;
        self.cached_gaussian = Some(r * phi.sin());
        r * phi.cos()
    }
}
