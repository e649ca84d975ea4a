//! Counter-based random streams.
//!
//! Each path owns an [`RngStream`] keyed by `(seed, path_index)`; the draw at
//! position `counter` is a pure function of the three numbers, so results do
//! not depend on thread scheduling and a stream can be restarted mid-path.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Source of standard normal pairs. Simulation kernels only need this, which
/// lets tests substitute deterministic stubs.
pub trait GaussianSource {
    fn gaussian_pair(&mut self) -> (f64, f64);
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    path_index: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        RngStream::at(seed, path_index, 0)
    }

    /// Stream positioned after `counter` 64-bit draws.
    pub fn at(seed: u64, path_index: u64, counter: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(path_index);
        inner.set_word_pos(2 * counter as u128);
        RngStream { seed, path_index, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_index(&self) -> u64 {
        self.path_index
    }

    /// Number of 64-bit draws consumed so far.
    pub fn counter(&self) -> u64 {
        (self.inner.get_word_pos() / 2) as u64
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `(0, 1]`.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl GaussianSource for RngStream {
    /// Box-Muller: exactly two draws per pair.
    fn gaussian_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_open01();
        let u2 = self.next_open01();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        (r * c, r * s)
    }
}

/// Always returns zeros.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroGaussians;

impl GaussianSource for ZeroGaussians {
    fn gaussian_pair(&mut self) -> (f64, f64) {
        (0.0, 0.0)
    }
}
