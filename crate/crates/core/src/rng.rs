//! Counter-based random streams.
//!
//! Every draw is a pure function of `(seed, segment, path_id, step)`: the
//! ChaCha8 key holds `seed` and `segment`, the stream id is `path_id`, and
//! step `k` owns the 16 words starting at word position `16 k`. Reading a
//! step never depends on which steps were read before, so scheduling and
//! worker count cannot change results.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Uniforms available per step.
pub const DRAWS_PER_STEP: usize = 8;

const WORDS_PER_STEP: u128 = 16;

/// Eight uniforms in `(0, 1]` belonging to one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepDraws(pub [f64; DRAWS_PER_STEP]);

impl StepDraws {
    /// Two independent standard normals by Box-Muller on slots 0 and 1.
    #[inline]
    pub fn normals(&self) -> (f64, f64) {
        let r = (-2.0 * self.0[0].ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * self.0[1]).sin_cos();
        (r * c, r * s)
    }

    /// Unit exponential from slot `k`.
    #[inline]
    pub fn exponential(&self, k: usize) -> f64 {
        -self.0[k].ln()
    }

    #[inline]
    pub fn uniform(&self, k: usize) -> f64 {
        self.0[k]
    }
}

#[inline]
fn open_closed(w: u64) -> f64 {
    ((w >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The stream of one path segment.
#[derive(Clone, Debug)]
pub struct PathStream {
    rng: ChaCha8Rng,
    next: u64,
}

impl PathStream {
    pub fn new(seed: u64, path_id: u64, segment: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&segment.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(path_id);
        PathStream { rng, next: 0 }
    }

    /// Draws of step `k`. Sequential access avoids reseeking.
    pub fn step(&mut self, k: u64) -> StepDraws {
        if k != self.next {
            self.rng.set_word_pos(k as u128 * WORDS_PER_STEP);
        }
        let mut out = [0.0; DRAWS_PER_STEP];
        for v in &mut out {
            *v = open_closed(self.rng.next_u64());
        }
        self.next = k + 1;
        StepDraws(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential() {
        let mut a = PathStream::new(7, 3, 0);
        let seq: Vec<_> = (0..50).map(|k| a.step(k)).collect();
        let mut b = PathStream::new(7, 3, 0);
        for k in [17u64, 3, 49, 0, 18] {
            assert_eq!(b.step(k), seq[k as usize]);
        }
    }

    #[test]
    fn keys_separate_streams() {
        let s = PathStream::new(1, 0, 0).step(0);
        assert_ne!(s, PathStream::new(2, 0, 0).step(0));
        assert_ne!(s, PathStream::new(1, 1, 0).step(0));
        assert_ne!(s, PathStream::new(1, 0, 1).step(0));
    }

    #[test]
    fn uniforms_are_in_the_half_open_unit_interval() {
        assert_eq!(open_closed(u64::MAX), 1.0);
        assert!(open_closed(0) > 0.0);
        let mut s = PathStream::new(0, 0, 0);
        let (mut sum, n) = (0.0, 20_000);
        for k in 0..n / 8 {
            sum += s.step(k).0.iter().sum::<f64>();
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut s = PathStream::new(11, 0, 0);
        let n = 50_000;
        let (mut m, mut v) = (0.0, 0.0);
        for k in 0..n {
            let (a, b) = s.step(k).normals();
            m += a + b;
            v += a * a + b * b;
        }
        let n2 = 2.0 * n as f64;
        assert!((m / n2).abs() < 0.02);
        assert!((v / n2 - 1.0).abs() < 0.02);
    }
}
