//! Random stream discipline.
//!
//! Every run has a 64-bit seed; replica `k` of a run uses `replica_seed(seed, k)`.
//! Inside one replica each independent unit of work (a block of particles, a
//! row of sites, the arrival process) draws from its own ChaCha8 stream,
//! `stream_rng(seed, stream)`, so results do not depend on how the units are
//! scheduled across threads. Per-site lazily evaluated randomness uses
//! `site_uniform`, a keyed hash of the site coordinates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::lattice::{SitePos, DIRECTIONS};

/// Particles per RNG stream in the particle engines.
pub const PARTICLE_BLOCK: usize = 4096;

/// Stream index reserved for the arrival process of the source engine.
pub const ARRIVAL_STREAM: u64 = u64::MAX;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `replica` of a run seeded with `seed`.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    mix64(seed ^ mix64(replica.wrapping_add(0x5EED)))
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform 32-bit value attached to a site under `seed`.
pub fn site_uniform(seed: u64, z: SitePos) -> u32 {
    let key = ((z.a as u32 as u64) << 32) | z.b as u32 as u64;
    (mix64(mix64(seed) ^ key) >> 32) as u32
}

/// `u32` threshold `τ` with `P(U < τ) = p` for `U` uniform on 32 bits, up to
/// a resolution of `2⁻³²`.
pub fn u32_threshold(p: f64) -> u64 {
    (p.clamp(0.0, 1.0) * 4_294_967_296.0).round() as u64
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    if n == 0 {
        return 0;
    }
    Binomial::new(n, p)
        .expect("binomial parameters are valid")
        .sample(rng)
}

/// Displacement of a simple random walk after `steps` uniform steps.
///
/// Short walks are stepped directly. Longer ones draw the six direction
/// counts as a multinomial: first the split over the three axes, then the
/// sign on each axis.
pub fn walk_displacement<R: Rng>(rng: &mut R, steps: u64) -> SitePos {
    if steps <= 8 {
        let mut z = SitePos::ORIGIN;
        for _ in 0..steps {
            z = z + DIRECTIONS[rng.random_range(0..6)];
        }
        return z;
    }
    let m0 = binomial(rng, steps, 1.0 / 3.0);
    let m1 = binomial(rng, steps - m0, 0.5);
    let m2 = steps - m0 - m1;
    let mut net = [0i64; 3];
    for (axis, m) in [m0, m1, m2].into_iter().enumerate() {
        let plus = binomial(rng, m, 0.5);
        net[axis] = 2 * plus as i64 - m as i64;
    }
    // axes are DIRECTIONS[0], [1], [2] = (1,0), (0,1), (-1,1)
    SitePos::new((net[0] - net[2]) as i32, (net[1] + net[2]) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_distinct_and_reproducible() {
        let a: Vec<u32> = (0..4).map(|_| stream_rng(7, 0).random()).collect();
        let b: Vec<u32> = (0..4).map(|_| stream_rng(7, 0).random()).collect();
        assert_eq!(a, b);
        let mut r0 = stream_rng(7, 0);
        let mut r1 = stream_rng(7, 1);
        assert_ne!(r0.random::<u64>(), r1.random::<u64>());
        assert_ne!(replica_seed(1, 0), replica_seed(1, 1));
        assert_ne!(replica_seed(1, 0), replica_seed(2, 0));
    }

    #[test]
    fn site_uniform_is_roughly_uniform() {
        let n = 200 * 200;
        let mut below = 0;
        for a in 0..200 {
            for b in -100..100 {
                if site_uniform(3, SitePos::new(a, b)) < u32_threshold(0.3) as u32 {
                    below += 1;
                }
            }
        }
        let frac = below as f64 / n as f64;
        let se = (0.3f64 * 0.7 / n as f64).sqrt();
        assert!((frac - 0.3).abs() < 4.0 * se, "{frac}");
        assert_eq!(u32_threshold(1.0), 1 << 32);
        assert_eq!(u32_threshold(0.0), 0);
    }

    #[test]
    fn displacement_moments() {
        // E|X|² = steps for unit steps; mean zero
        let mut rng = stream_rng(11, 0);
        for &steps in &[3u64, 9, 100, 2500] {
            let reps = 20_000;
            let (mut sx, mut sy, mut s2) = (0.0, 0.0, 0.0);
            for _ in 0..reps {
                let (x, y) = walk_displacement(&mut rng, steps).euclidean();
                sx += x;
                sy += y;
                s2 += x * x + y * y;
            }
            let n = reps as f64;
            let sd = (steps as f64 / 2.0).sqrt();
            assert!((sx / n).abs() < 4.0 * sd / n.sqrt());
            assert!((sy / n).abs() < 4.0 * sd / n.sqrt());
            let m2 = s2 / n / steps as f64;
            assert!((m2 - 1.0).abs() < 0.05, "steps {steps}: {m2}");
        }
    }

    #[test]
    fn multinomial_matches_exact_kernel() {
        let t = 12u64;
        let field = crate::walk_kernel::exact_distribution(t as u32, 16).unwrap();
        let mut rng = stream_rng(5, 3);
        let reps = 200_000;
        let mut hits = std::collections::HashMap::new();
        for _ in 0..reps {
            *hits.entry(walk_displacement(&mut rng, t)).or_insert(0u32) += 1;
        }
        for z in [
            SitePos::ORIGIN,
            SitePos::new(2, 0),
            SitePos::new(1, 1),
            SitePos::new(4, -2),
        ] {
            let p = field.get(z);
            let emp = *hits.get(&z).unwrap_or(&0) as f64 / reps as f64;
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((emp - p).abs() < 4.0 * se, "{z}: {emp} vs {p}");
        }
        assert!(hits.keys().all(|z| z.norm() <= t as f64));
    }
}
