//! Counter-based deterministic RNG.
//!
//! Randomness is organized as a tree of streams. A [`StreamKey`] names a
//! stream; [`StreamKey::child`] derives an independent sub-stream from a
//! `(role, index)` pair. Draws are produced by hashing `(key, counter)`
//! with the splitmix64 finalizer, so a stream's output depends only on the
//! path of `(role, index)` pairs from the root seed — never on how many
//! draws other streams have consumed. Training keys streams by
//! `(seed, step, sample, role)`, which makes checkpoint-resume bit-exact.

use crate::grid::LatentGrid;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const MIX_B: u64 = 0xbf58_476d_1ce4_e5b9;
const MIX_C: u64 = 0x94d0_49bb_1331_11eb;

/// splitmix64 finalizer: a bijective avalanche mix on u64.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_B);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_C);
    z ^ (z >> 31)
}

/// Stateless name of a random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    hi: u64,
    lo: u64,
}

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        Self {
            hi: mix(seed ^ GOLDEN),
            lo: mix(seed.wrapping_add(0xd1b5_4a32_d192_ed03)),
        }
    }

    /// Derive an independent sub-stream. Distinct `(role, index)` pairs give
    /// decorrelated streams; the same pair always gives the same stream.
    pub fn child(&self, role: u64, index: u64) -> Self {
        let r = mix(role.wrapping_mul(GOLDEN) ^ 0x5851_f42d_4c95_7f2d);
        let i = mix(index ^ 0x1405_7b7e_f767_814f);
        Self {
            hi: mix(self.hi ^ r ^ i.rotate_left(23)),
            lo: mix(self.lo.wrapping_add(r.rotate_left(41)) ^ i),
        }
    }

    /// Raw draw number `counter` of this stream.
    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix(self.hi ^ counter.wrapping_mul(GOLDEN))
            ^ mix(self.lo.wrapping_add(counter).wrapping_mul(MIX_C) ^ 0x2545_f491_4f6c_dd1d)
    }

    /// Stateful cursor over this stream, starting at counter 0.
    pub fn stream(&self) -> Stream {
        Stream {
            key: *self,
            counter: 0,
            spare: None,
        }
    }
}

/// Sequential cursor over one stream.
#[derive(Debug, Clone)]
pub struct Stream {
    key: StreamKey,
    counter: u64,
    spare: Option<f64>,
}

impl Stream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = self.key.u64_at(self.counter);
        self.counter += 1;
        v
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi).
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box–Muller; draws come in cached pairs.
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        // Shift into (0, 1] so the log argument is never zero.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Unbiased integer in [0, bound) via Lemire's multiply-shift rejection.
    pub fn index(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "index bound must be positive");
        let mut x = self.next_u64();
        let mut m = (x as u128) * (bound as u128);
        let mut low = m as u64;
        if low < bound {
            let threshold = bound.wrapping_neg() % bound;
            while low < threshold {
                x = self.next_u64();
                m = (x as u128) * (bound as u128);
                low = m as u64;
            }
        }
        (m >> 64) as u64
    }

    /// Grid of iid standard-normal draws in row-major order.
    pub fn normal_grid(&mut self, channels: usize, height: usize, width: usize) -> LatentGrid {
        let mut g = LatentGrid::zeros(channels, height, width);
        for v in g.data_mut() {
            *v = self.normal();
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn take_u64s(s: &mut Stream, n: usize) -> Vec<u64> {
        (0..n).map(|_| s.next_u64()).collect()
    }

    #[test]
    fn same_key_same_draws() {
        let k = StreamKey::root(42).child(3, 7);
        let a = take_u64s(&mut k.stream(), 16);
        let b = take_u64s(&mut k.stream(), 16);
        assert_eq!(a, b);
    }

    #[test]
    fn counter_addressable() {
        let k = StreamKey::root(9);
        let mut s = k.stream();
        let seq: Vec<u64> = (0..8).map(|_| s.next_u64()).collect();
        let direct: Vec<u64> = (0..8).map(|c| k.u64_at(c)).collect();
        assert_eq!(seq, direct);
    }

    #[test]
    fn children_differ_from_parent_and_each_other() {
        let root = StreamKey::root(1);
        let a = root.child(0, 0);
        let b = root.child(0, 1);
        let c = root.child(1, 0);
        let heads = [root, a, b, c].map(|k| k.u64_at(0));
        for i in 0..heads.len() {
            for j in i + 1..heads.len() {
                assert_ne!(heads[i], heads[j]);
            }
        }
    }

    #[test]
    fn uniform_moments() {
        let mut s = StreamKey::root(7).child(11, 0).stream();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
            sum_sq += u * u;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.005, "var {var}");
    }

    #[test]
    fn normal_moments() {
        let mut s = StreamKey::root(13).child(2, 4).stream();
        let n = 200_000;
        let (mut m1, mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = s.normal();
            m1 += x;
            m2 += x * x;
            m3 += x * x * x;
            m4 += x * x * x * x;
        }
        let n = n as f64;
        assert!((m1 / n).abs() < 0.01, "mean {}", m1 / n);
        assert!((m2 / n - 1.0).abs() < 0.02, "var {}", m2 / n);
        assert!((m3 / n).abs() < 0.05, "skew {}", m3 / n);
        assert!((m4 / n - 3.0).abs() < 0.15, "kurtosis {}", m4 / n);
    }

    #[test]
    fn index_in_bounds_and_roughly_uniform() {
        let mut s = StreamKey::root(21).child(5, 5).stream();
        let bound = 7u64;
        let mut counts = [0u32; 7];
        for _ in 0..70_000 {
            let i = s.index(bound);
            assert!(i < bound);
            counts[i as usize] += 1;
        }
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "counts {counts:?}");
        }
    }

    #[test]
    fn cross_correlation_of_sibling_streams_is_small() {
        let root = StreamKey::root(1234);
        let mut a = root.child(0, 0).stream();
        let mut b = root.child(0, 1).stream();
        let n = 50_000;
        let mut dot = 0.0;
        for _ in 0..n {
            dot += a.normal() * b.normal();
        }
        // For independent streams dot/n ~ N(0, 1/n); 5 sigma ≈ 0.022.
        assert!((dot / n as f64).abs() < 0.025, "corr {}", dot / n as f64);
    }
}
