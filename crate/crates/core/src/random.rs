//! Seeded sampling helpers. Every random draw is tied to a `(seed, stream)`
//! pair so parallel probes give the same answer for any thread count.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::lattice::LatticeState;

/// Independent generator for sample `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed for grid point `index` of a sweep with base seed `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard complex Gaussian per site.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

fn l2(values: &[Complex64]) -> f64 {
    values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Uniformly distributed direction scaled to ℓ² norm `radius`.
pub fn on_sphere<R: Rng + ?Sized>(rng: &mut R, half_width: usize, radius: f64) -> LatticeState {
    let mut v = complex_gaussian(rng, 2 * half_width + 1);
    let n = l2(&v);
    for z in &mut v {
        *z *= radius / n;
    }
    LatticeState::from_parts(half_width, v, 0.0)
}

/// Uniform sample of the closed ℓ² ball: Gaussian direction times
/// `radius · v^{1/d}` with `d = 2(2m+1)` real dimensions.
pub fn in_ball<R: Rng + ?Sized>(rng: &mut R, half_width: usize, radius: f64) -> LatticeState {
    let dim = 2.0 * (2 * half_width + 1) as f64;
    let v: f64 = rng.random();
    let r = radius * v.powf(1.0 / dim);
    on_sphere(rng, half_width, r)
}
