//! Counter-based random streams.
//!
//! Every random number used by the simulator is a pure function of
//! `(seed, path index, level, counter)`. Paths can therefore be generated in
//! any order, or in parallel, and refined later without replaying earlier
//! draws.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Level tag reserved for the compound-Poisson jump stream of a path.
pub const JUMP_LEVEL: u64 = u64::MAX - 1;
/// Level tag for subordinator (time-change) increments.
pub const CLOCK_LEVEL: u64 = u64::MAX - 2;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // (0, 1): never returns 0, so logarithms are safe
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub path: u64,
    pub level: u64,
}

impl StreamKey {
    pub fn new(seed: u64, path: u64, level: u64) -> Self {
        Self { seed, path, level }
    }

    fn digest(&self) -> u64 {
        let mut h = mix64(self.seed.wrapping_add(GOLDEN));
        h = mix64(h ^ self.path.wrapping_mul(0xD1B5_4A32_D192_ED03));
        mix64(h ^ self.level.wrapping_add(0x8CB9_2BA7_2F3D_8DD7))
    }

    pub fn stream(&self) -> CounterRng {
        CounterRng {
            key: self.digest(),
            counter: 0,
        }
    }

    /// Random-access normals of this stream.
    pub fn positional(&self) -> PositionalNormals {
        PositionalNormals {
            key: self.digest() ^ 0x5851_F42D_4C95_7F2D,
        }
    }

    /// Standard normal number `index` of this stream, by random access.
    pub fn normal_at(&self, index: u64) -> f64 {
        self.positional().at(index)
    }
}

/// Normals indexed by position; consecutive pairs share one Box-Muller draw.
#[derive(Debug, Clone, Copy)]
pub struct PositionalNormals {
    key: u64,
}

impl PositionalNormals {
    pub fn at(&self, index: u64) -> f64 {
        let key = self.key;
        let pair = index >> 1;
        let u1 = unit_open(mix64(key.wrapping_add((2 * pair + 1).wrapping_mul(GOLDEN))));
        let u2 = unit_open(mix64(key.wrapping_add((2 * pair + 2).wrapping_mul(GOLDEN))));
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        if index & 1 == 0 {
            radius * angle.cos()
        } else {
            radius * angle.sin()
        }
    }
}

/// SplitMix64 evaluated at successive counters of a keyed stream.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn uniform(&mut self) -> f64 {
        unit_open(self.next_u64())
    }

    pub fn normal(&mut self) -> f64 {
        self.sample(StandardNormal)
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = StreamKey::new(7, 3, 0).stream();
            (0..16).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = StreamKey::new(7, 3, 0).stream();
            (0..16).map(|_| r.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut r = StreamKey::new(7, 4, 0).stream();
            (0..16).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn positional_normals_have_unit_variance() {
        let key = StreamKey::new(1, 2, 3);
        let n = 200_000u64;
        let (s, s2) = (0..n).fold((0.0, 0.0), |(s, s2), i| {
            let z = key.normal_at(i);
            (s + z, s2 + z * z)
        });
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.015, "var {var}");
    }

    #[test]
    fn uniforms_stay_in_open_interval() {
        let mut r = StreamKey::new(0, 0, 0).stream();
        for _ in 0..10_000 {
            let u = r.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
