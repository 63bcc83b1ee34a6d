//! Counter-based random streams.
//!
//! Every stream is a ChaCha8 keystream keyed by the master seed and
//! positioned on its own 64-bit stream id, so the k-th draw of a stream is a
//! pure function of `(master_seed, stream_id, k)`. Replicas get distinct
//! stream ids and never share state, which makes results independent of how
//! replicas are scheduled onto workers.
//!
//! Gaussian variates use the Box-Muller transform. Each transform consumes
//! two uniform draws and yields two variates; the second one is cached and
//! returned by the next call.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream-id namespaces used by the estimators so that system replicas,
/// oracle replicas and bootstrap resampling never collide.
pub mod tag {
    pub const SYSTEM: u64 = 0;
    pub const ORACLE: u64 = 1;
    pub const BOOTSTRAP: u64 = 2;
    pub const REFERENCE: u64 = 3;
    pub const PROJECTIONS: u64 = 4;
    pub const AUX: u64 = 5;
}

/// Packs a namespace tag, a group index (e.g. the position in an N-list)
/// and a replica index into one stream id.
pub fn stream_id(tag: u64, group: u64, replica: u64) -> u64 {
    debug_assert!(tag < (1 << 8) && group < (1 << 24) && replica < (1 << 32));
    (tag << 56) | (group << 32) | replica
}

#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    core: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut core = ChaCha8Rng::seed_from_u64(master_seed);
        core.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            core,
            spare_normal: None,
        }
    }

    /// Stream positioned so that its next draw is draw number `k`.
    pub fn at_draw(master_seed: u64, stream_id: u64, k: u64) -> Self {
        let mut s = Self::new(master_seed, stream_id);
        s.core.set_word_pos(2 * k as u128);
        s
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of 64-bit draws consumed so far.
    pub fn draw_counter(&self) -> u64 {
        (self.core.get_word_pos() / 2) as u64
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.core.next_u64()
    }

    /// Uniform on the open interval (0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (multiply-shift; bias below 2^-64 * n).
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Exponential variate with the given rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform().ln() / rate
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    /// Uniformly distributed unit vector.
    pub fn unit_vector(&mut self, out: &mut [f64]) {
        loop {
            self.fill_normal(out);
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-300 {
                out.iter_mut().for_each(|x| *x /= norm);
                return;
            }
        }
    }
}
