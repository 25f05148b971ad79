use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const INIT_STREAM: u64 = 1 << 63;

/// Counter-based Gaussian source.
///
/// Particle `i` owns ChaCha stream `i`; its `n`-th standard normal is a pure
/// function of `(seed, i, n)`. Normal `n = s * q + j` is component `j` of
/// fine step `s`, so a coarse step that consumes `R` fine steps reads exactly
/// the normals the fine run reads, in the same order. Runs read the stream
/// sequentially; [`BrownianDriver::normal`] replays it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrownianDriver {
    seed: u64,
    noise_dim: usize,
}

impl BrownianDriver {
    pub fn new(seed: u64, noise_dim: usize) -> Self {
        Self { seed, noise_dim }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    /// Standard normal number `index` of `particle`, by replay; `O(index)`.
    pub fn normal(&self, particle: usize, index: u64) -> f64 {
        let mut s = self.stream(particle);
        for _ in 0..index {
            s.next_normal();
        }
        s.next_normal()
    }

    /// Random-access Brownian increment over fine steps
    /// `first..first + count` of width `fine_h`.
    pub fn increment(&self, particle: usize, first: usize, count: usize, fine_h: f64, out: &mut [f64]) {
        let q = self.noise_dim;
        let mut s = self.stream(particle);
        for _ in 0..first * q {
            s.next_normal();
        }
        s.increment(count, fine_h, &mut out[..q]);
    }

    /// Sequential reader over the normals of `particle`, starting at index 0.
    pub fn stream(&self, particle: usize) -> NormalStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(particle as u64);
        NormalStream { rng }
    }

    /// Generator for initial draws, disjoint from every Brownian stream.
    pub(crate) fn initial_rng(&self, particle: usize) -> NormalStream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(INIT_STREAM | particle as u64);
        NormalStream { rng }
    }
}

#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn next_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub(crate) fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Sum of `count` consecutive fine increments `sqrt(fine_h) Z`, added in order.
    pub fn increment(&mut self, count: usize, fine_h: f64, out: &mut [f64]) {
        let root = fine_h.sqrt();
        out.fill(0.0);
        for _ in 0..count {
            for o in out.iter_mut() {
                *o += root * self.next_normal();
            }
        }
    }
}

/// Decorrelated seed for replication `r` of an experiment seeded with `seed`.
pub fn replication_seed(seed: u64, r: u64) -> u64 {
    splitmix(seed ^ splitmix(r.wrapping_add(0x6a09_e667_f3bc_c909)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_matches_random_access() {
        let d = BrownianDriver::new(11, 3);
        for particle in [0, 1, 977] {
            let mut s = d.stream(particle);
            for n in 0..41 {
                assert_eq!(s.next_normal().to_bits(), d.normal(particle, n).to_bits());
            }
        }
    }

    #[test]
    fn coarse_increment_is_sum_of_fine_increments() {
        let d = BrownianDriver::new(5, 2);
        let fine_h = 1.0 / 64.0;
        let r = 16;
        let mut coarse = d.stream(3);
        let mut fine = d.stream(3);
        let (mut c, mut f) = ([0.0; 2], [0.0; 2]);
        for step in 0..4 {
            coarse.increment(r, fine_h, &mut c);
            let mut sum = [0.0; 2];
            for _ in 0..r {
                fine.increment(1, fine_h, &mut f);
                sum[0] += f[0];
                sum[1] += f[1];
            }
            assert_eq!(c, sum, "step {step}");
            let mut direct = [0.0; 2];
            d.increment(3, step * r, r, fine_h, &mut direct);
            assert_eq!(c, direct);
        }
    }

    #[test]
    fn normals_have_unit_moments() {
        let mut s = BrownianDriver::new(1, 1).stream(0);
        let n = 200_000;
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..n {
            let z = s.next_normal();
            m1 += z;
            m2 += z * z;
        }
        m1 /= n as f64;
        m2 /= n as f64;
        assert!(m1.abs() < 5.0 / (n as f64).sqrt());
        assert!((m2 - 1.0).abs() < 5.0 * 2f64.sqrt() / (n as f64).sqrt());
    }

    #[test]
    fn streams_and_replications_differ() {
        let d = BrownianDriver::new(9, 1);
        assert_ne!(d.normal(0, 0), d.normal(1, 0));
        assert_ne!(d.normal(0, 0), d.initial_rng(0).next_normal());
        assert_ne!(replication_seed(9, 0), replication_seed(9, 1));
        assert_eq!(replication_seed(9, 4), replication_seed(9, 4));
    }
}
