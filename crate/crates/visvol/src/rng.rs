//! Deterministic pseudo-random numbers for seeded sampling.
//!
//! SplitMix64 is tiny and bit-stable across platforms and releases, which
//! keeps seeded reports and frozen test expectations reproducible forever.

use crate::math::Vec3;
use crate::mesh::Aabb;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> SplitMix64 {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn next_in_aabb(&mut self, b: &Aabb) -> Vec3 {
        Vec3::new(
            self.next_range(b.min.x, b.max.x),
            self.next_range(b.min.y, b.max.y),
            self.next_range(b.min.z, b.max.z),
        )
    }

    /// Uniform direction on the unit sphere.
    pub fn next_unit_vector(&mut self) -> Vec3 {
        let z = self.next_range(-1.0, 1.0);
        let phi = self.next_range(0.0, std::f64::consts::TAU);
        let r = (1.0 - z * z).max(0.0).sqrt();
        Vec3::new(r * phi.cos(), r * phi.sin(), z)
    }
}
